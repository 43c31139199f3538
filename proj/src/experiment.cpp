#include "fedae/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "fedae/errors.hpp"
#include "fedae/rng.hpp"
#include "fedae/textio.hpp"

namespace fedae {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config schema

[[noreturn]] void config_fail(const std::string& path, const std::string& what) {
    throw ConfigError("config " + (path.empty() ? std::string("/") : path) + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
    return path + "/" + key;
}

const json* find(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

void require_object(const json& node, const std::string& path) {
    if (!node.is_object()) config_fail(path, "expected an object");
}

void reject_unknown_keys(const json& obj, const std::string& path,
                         std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* a) { return item.key() == a; });
        if (!known) config_fail(join(path, item.key()), "unknown key");
    }
}

const json& require_key(const json& obj, const std::string& path, const char* key) {
    const json* node = find(obj, key);
    if (!node) config_fail(path, std::string("missing required key \"") + key + "\"");
    return *node;
}

std::uint64_t as_uint(const json& node, const std::string& path) {
    if (!node.is_number_unsigned()) config_fail(path, "expected a nonnegative integer");
    return node.get<std::uint64_t>();
}

double as_number(const json& node, const std::string& path) {
    if (!node.is_number()) config_fail(path, "expected a number");
    return node.get<double>();
}

std::string as_string(const json& node, const std::string& path) {
    if (!node.is_string()) config_fail(path, "expected a string");
    return node.get<std::string>();
}

bool as_bool(const json& node, const std::string& path) {
    if (!node.is_boolean()) config_fail(path, "expected a boolean");
    return node.get<bool>();
}

std::vector<std::size_t> as_size_list(const json& node, const std::string& path) {
    if (!node.is_array()) config_fail(path, "expected an array of nonnegative integers");
    std::vector<std::size_t> out;
    out.reserve(node.size());
    for (std::size_t i = 0; i < node.size(); ++i) {
        out.push_back(static_cast<std::size_t>(as_uint(node[i], path + "[" + std::to_string(i) + "]")));
    }
    return out;
}

DataConfig parse_data(const json& node, const std::string& path) {
    require_object(node, path);
    reject_unknown_keys(node, path,
                        {"n", "classes", "spread", "dim", "height", "width", "channels", "grayscale"});
    DataConfig d;
    d.n = static_cast<std::size_t>(as_uint(require_key(node, path, "n"), join(path, "n")));
    d.classes =
        static_cast<std::size_t>(as_uint(require_key(node, path, "classes"), join(path, "classes")));
    if (d.classes < 2) config_fail(join(path, "classes"), "need at least 2 classes");
    if (d.n < d.classes) config_fail(join(path, "n"), "need at least one row per class");
    if (const json* v = find(node, "spread")) {
        d.spread = static_cast<float>(as_number(*v, join(path, "spread")));
        if (!(d.spread >= 0.0f)) config_fail(join(path, "spread"), "must be >= 0");
    }

    const bool has_dim = find(node, "dim") != nullptr;
    const bool has_image =
        find(node, "height") != nullptr || find(node, "width") != nullptr || find(node, "channels") != nullptr;
    if (has_dim == has_image) {
        config_fail(path, "specify either \"dim\" or all of \"height\"/\"width\"/\"channels\"");
    }
    if (has_dim) {
        d.dim = static_cast<std::size_t>(as_uint(*find(node, "dim"), join(path, "dim")));
        if (d.dim == 0) config_fail(join(path, "dim"), "must be >= 1");
    } else {
        d.height = static_cast<std::size_t>(
            as_uint(require_key(node, path, "height"), join(path, "height")));
        d.width =
            static_cast<std::size_t>(as_uint(require_key(node, path, "width"), join(path, "width")));
        d.channels = static_cast<std::size_t>(
            as_uint(require_key(node, path, "channels"), join(path, "channels")));
        if (d.height == 0 || d.width == 0) config_fail(path, "image sides must be >= 1");
        if (d.channels != 1 && d.channels != 3) {
            config_fail(join(path, "channels"), "must be 1 or 3");
        }
    }
    if (const json* v = find(node, "grayscale")) {
        d.grayscale = as_size_list(*v, join(path, "grayscale"));
    }
    return d;
}

ModelConfig parse_model(const json& node, const std::string& path) {
    require_object(node, path);
    reject_unknown_keys(node, path, {"hidden", "hidden_activation", "learning_rate", "batch_size"});
    ModelConfig m;
    if (const json* v = find(node, "hidden")) m.hidden = as_size_list(*v, join(path, "hidden"));
    for (std::size_t h : m.hidden) {
        if (h == 0) config_fail(join(path, "hidden"), "layer widths must be >= 1");
    }
    if (const json* v = find(node, "hidden_activation")) {
        const std::string name = as_string(*v, join(path, "hidden_activation"));
        try {
            m.hidden_activation = activation_from_name(name);
        } catch (const ConfigError&) {
            config_fail(join(path, "hidden_activation"), "unknown activation \"" + name + "\"");
        }
        if (m.hidden_activation == Activation::softmax) {
            config_fail(join(path, "hidden_activation"), "softmax is reserved for the output layer");
        }
    }
    if (const json* v = find(node, "learning_rate")) {
        m.learning_rate = static_cast<float>(as_number(*v, join(path, "learning_rate")));
        if (!(m.learning_rate > 0.0f)) config_fail(join(path, "learning_rate"), "must be > 0");
    }
    if (const json* v = find(node, "batch_size")) {
        m.batch_size = static_cast<std::size_t>(as_uint(*v, join(path, "batch_size")));
        if (m.batch_size == 0) config_fail(join(path, "batch_size"), "must be >= 1");
    }
    return m;
}

PrepassConfig parse_prepass(const json& node, const std::string& path) {
    require_object(node, path);
    reject_unknown_keys(node, path, {"epochs", "tau", "ae"});
    PrepassConfig p;
    p.epochs = static_cast<std::size_t>(as_uint(require_key(node, path, "epochs"), join(path, "epochs")));
    if (p.epochs < 2) config_fail(join(path, "epochs"), "must be >= 2 (one snapshot per epoch)");
    if (const json* v = find(node, "tau")) {
        p.ae.tau = static_cast<float>(as_number(*v, join(path, "tau")));
        if (!(p.ae.tau > 0.0f)) config_fail(join(path, "tau"), "must be > 0");
    }

    const json& ae = require_key(node, path, "ae");
    const std::string ae_path = join(path, "ae");
    require_object(ae, ae_path);
    reject_unknown_keys(ae, ae_path, {"latent_dim", "hidden", "lr", "epochs", "batch_size"});
    p.ae.latent_dim = static_cast<std::size_t>(
        as_uint(require_key(ae, ae_path, "latent_dim"), join(ae_path, "latent_dim")));
    if (p.ae.latent_dim == 0) config_fail(join(ae_path, "latent_dim"), "must be >= 1");
    if (const json* v = find(ae, "hidden")) {
        p.ae.encoder_hidden = as_size_list(*v, join(ae_path, "hidden"));
    }
    if (const json* v = find(ae, "lr")) {
        p.ae.train.learning_rate = static_cast<float>(as_number(*v, join(ae_path, "lr")));
        if (!(p.ae.train.learning_rate > 0.0f)) config_fail(join(ae_path, "lr"), "must be > 0");
    }
    if (const json* v = find(ae, "epochs")) {
        p.ae.train.epochs = static_cast<std::size_t>(as_uint(*v, join(ae_path, "epochs")));
        if (p.ae.train.epochs == 0) config_fail(join(ae_path, "epochs"), "must be >= 1");
    }
    if (const json* v = find(ae, "batch_size")) {
        p.ae.train.batch_size = static_cast<std::size_t>(as_uint(*v, join(ae_path, "batch_size")));
        if (p.ae.train.batch_size == 0) config_fail(join(ae_path, "batch_size"), "must be >= 1");
    }
    return p;
}

FederatedRunConfig parse_federated(const json& node, const std::string& path) {
    require_object(node, path);
    reject_unknown_keys(node, path, {"rounds", "local_epochs", "collaborators", "compression", "seed"});
    FederatedRunConfig f;
    f.rounds = static_cast<std::size_t>(as_uint(require_key(node, path, "rounds"), join(path, "rounds")));
    if (f.rounds == 0) config_fail(join(path, "rounds"), "must be >= 1");
    f.local_epochs = static_cast<std::size_t>(
        as_uint(require_key(node, path, "local_epochs"), join(path, "local_epochs")));
    if (f.local_epochs == 0) config_fail(join(path, "local_epochs"), "must be >= 1");
    f.collaborators = static_cast<std::size_t>(
        as_uint(require_key(node, path, "collaborators"), join(path, "collaborators")));
    if (f.collaborators == 0) config_fail(join(path, "collaborators"), "must be >= 1");

    const std::string mode =
        as_string(require_key(node, path, "compression"), join(path, "compression"));
    if (mode == "on") {
        f.compression = Compression::autoencoder;
    } else {
        try {
            f.compression = compression_from_name(mode);
        } catch (const ConfigError&) {
            config_fail(join(path, "compression"), "expected on|off|autoencoder|identity");
        }
    }
    f.seed = as_uint(require_key(node, path, "seed"), join(path, "seed"));
    return f;
}

ValidateRunConfig parse_validate(const json& node, const std::string& path) {
    require_object(node, path);
    reject_unknown_keys(node, path, {"max_mean_acc_delta", "max_max_acc_delta", "identity_codec"});
    ValidateRunConfig v;
    if (const json* n = find(node, "max_mean_acc_delta")) {
        v.thresholds.max_mean_acc_delta =
            static_cast<float>(as_number(*n, join(path, "max_mean_acc_delta")));
        if (v.thresholds.max_mean_acc_delta < 0.0f) {
            config_fail(join(path, "max_mean_acc_delta"), "must be >= 0");
        }
    }
    if (const json* n = find(node, "max_max_acc_delta")) {
        v.thresholds.max_max_acc_delta =
            static_cast<float>(as_number(*n, join(path, "max_max_acc_delta")));
        if (v.thresholds.max_max_acc_delta < 0.0f) {
            config_fail(join(path, "max_max_acc_delta"), "must be >= 0");
        }
    }
    if (const json* n = find(node, "identity_codec")) {
        v.identity_codec = as_bool(*n, join(path, "identity_codec"));
    }
    return v;
}

// ---------------------------------------------------------------------------
// Filesystem helpers

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_text_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot open " + p.string() + " for writing");
    return out;
}

// ---------------------------------------------------------------------------
// Shared pipeline construction

struct Pipeline {
    std::shared_ptr<const ModelShape> shape;
    std::vector<CollaboratorState> collaborators;
    AggregatorState agg;
};

std::shared_ptr<const ModelShape> shape_for(const ModelConfig& model, std::size_t input_dim,
                                            std::size_t classes) {
    std::vector<std::size_t> dims{input_dim};
    dims.insert(dims.end(), model.hidden.begin(), model.hidden.end());
    dims.push_back(classes);

    auto shape = std::make_shared<ModelShape>();
    for (std::size_t li = 0; li + 1 < dims.size(); ++li) {
        const Activation act =
            li + 2 == dims.size() ? Activation::softmax : model.hidden_activation;
        shape->layers.push_back({static_cast<std::uint32_t>(dims[li]),
                                 static_cast<std::uint32_t>(dims[li + 1]), act});
    }
    return shape;
}

Pipeline build_pipeline(const ExperimentConfig& cfg) {
    const std::size_t count = cfg.federated.collaborators;
    std::vector<LabeledDataset> parts;
    parts.reserve(count);
    for (std::size_t i = 0; i < count; ++i) parts.push_back(load_fwda(partition_path(cfg, i)));

    Pipeline p;
    p.shape = shape_for(cfg.model, parts.front().dim(), parts.front().classes());

    TrainConfig local;
    local.learning_rate = cfg.model.learning_rate;
    local.batch_size = cfg.model.batch_size;
    local.loss = Loss::cross_entropy;

    const std::uint64_t root = cfg.federated.seed;
    p.collaborators.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        p.collaborators.push_back(make_collaborator(static_cast<std::uint32_t>(i),
                                                    std::move(parts[i]), p.shape, local,
                                                    derive_seed(root, seed_stream::collaborator + i)));
    }
    p.agg = make_aggregator(p.shape, derive_seed(root, seed_stream::global_model), p.collaborators);
    return p;
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& source) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(source + ": invalid JSON: " + e.what());
    }
    require_object(root, "");
    reject_unknown_keys(root, "", {"data", "model", "prepass", "federated", "validate", "output"});

    ExperimentConfig cfg;
    cfg.data = parse_data(require_key(root, "", "data"), "/data");
    cfg.model = parse_model(require_key(root, "", "model"), "/model");
    cfg.prepass = parse_prepass(require_key(root, "", "prepass"), "/prepass");
    cfg.federated = parse_federated(require_key(root, "", "federated"), "/federated");
    if (const json* v = find(root, "validate")) cfg.validate = parse_validate(*v, "/validate");
    if (const json* v = find(root, "output")) {
        require_object(*v, "/output");
        reject_unknown_keys(*v, "/output", {"dir"});
        const std::string dir = as_string(require_key(*v, "/output", "dir"), "/output/dir");
        if (dir.empty()) config_fail("/output/dir", "must not be empty");
        cfg.output_dir = dir;
    }

    for (std::size_t g : cfg.data.grayscale) {
        if (g >= cfg.federated.collaborators) {
            config_fail("/data/grayscale",
                        "partition index " + std::to_string(g) + " out of range");
        }
        if (cfg.data.channels != 3) {
            config_fail("/data/grayscale", "grayscale conversion needs 3-channel image data");
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path.string());
}

std::filesystem::path partition_path(const ExperimentConfig& cfg, std::size_t i) {
    return cfg.output_dir / "data" / ("part_" + std::to_string(i) + ".fwda");
}

std::filesystem::path weights_log_path(const ExperimentConfig& cfg, std::size_t i) {
    return cfg.output_dir / "prepass" / ("weights_" + std::to_string(i) + ".fwds");
}

std::filesystem::path decoder_path(const ExperimentConfig& cfg, std::size_t i) {
    return cfg.output_dir / "prepass" / ("decoder_" + std::to_string(i) + ".bin");
}

std::filesystem::path ae_checkpoint_path(const ExperimentConfig& cfg, std::size_t i) {
    return cfg.output_dir / "prepass" / ("ae_" + std::to_string(i) + ".fwck");
}

void cmd_gen_data(const ExperimentConfig& cfg, const RunOptions&) {
    const std::uint64_t root = cfg.federated.seed;
    LabeledDataset full = gen_blobs(cfg.data.n, cfg.data.feature_dim(), cfg.data.classes,
                                    cfg.data.spread, derive_seed(root, seed_stream::data));
    if (cfg.data.channels == 3) {
        full = as_rgb_image(std::move(full), static_cast<std::uint32_t>(cfg.data.height),
                            static_cast<std::uint32_t>(cfg.data.width));
    } else if (cfg.data.channels == 1) {
        full.layout = ChannelLayout::gray;
        full.height = static_cast<std::uint32_t>(cfg.data.height);
        full.width = static_cast<std::uint32_t>(cfg.data.width);
    }

    std::vector<LabeledDataset> parts =
        partition(full, cfg.federated.collaborators, derive_seed(root, seed_stream::partition));
    for (std::size_t g : cfg.data.grayscale) parts[g] = to_grayscale(parts[g]);

    ensure_dir(cfg.output_dir / "data");
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto path = partition_path(cfg, i);
        save_fwda(path, parts[i]);
        std::cout << "partition " << i << ": " << parts[i].size() << " rows -> " << path.string()
                  << '\n';
    }
}

void cmd_prepass(const ExperimentConfig& cfg, const RunOptions& opt) {
    Pipeline p = build_pipeline(cfg);
    run_prepass(p.collaborators, p.agg, cfg.prepass.epochs, cfg.prepass.ae, SnapshotInterval{},
                opt.threads);

    ensure_dir(cfg.output_dir / "prepass");
    std::ofstream history = open_text_out(cfg.output_dir / "prepass" / "ae_history.csv");
    history << "collab_id,epoch,loss,recreation_acc,holdout_loss,holdout_recreation_acc\n";

    json per = json::array();
    for (const CollaboratorState& c : p.collaborators) {
        save_dataset(weights_log_path(cfg, c.id), c.weights_log);
        save_decoder_shipment(decoder_path(cfg, c.id), c.ae);
        save_checkpoint(ae_checkpoint_path(cfg, c.id), c.ae.net);

        const AEHistory& h = c.ae_history;
        for (std::size_t e = 0; e < h.loss.size(); ++e) {
            history << c.id << ',' << (e + 1) << ',' << g9(h.loss[e]) << ','
                    << g9(h.recreation_accuracy[e]) << ',';
            if (e < h.holdout_loss.size()) history << g9(h.holdout_loss[e]);
            history << ',';
            if (e < h.holdout_recreation_accuracy.size()) {
                history << g9(h.holdout_recreation_accuracy[e]);
            }
            history << '\n';
        }
        per.push_back({{"collab_id", c.id},
                       {"snapshots", c.weights_log.count()},
                       {"ae_params", param_count(c.ae.net)},
                       {"latent_dim", c.ae.latent_dim()},
                       {"initial_loss", h.initial_loss},
                       {"final_loss", h.loss.empty() ? 0.0f : h.loss.back()},
                       {"final_recreation_acc",
                        h.recreation_accuracy.empty() ? 0.0f : h.recreation_accuracy.back()},
                       {"holdout_count", h.holdout_count}});
        std::cout << "collaborator " << c.id << ": " << c.weights_log.count() << " snapshots, "
                  << "autoencoder " << param_count(c.ae.net) << " params, reconstruction mse "
                  << g9(h.initial_loss) << " -> " << g9(h.loss.empty() ? 0.0f : h.loss.back())
                  << '\n';
    }

    json summary;
    summary["model_params"] = p.shape->total_params();
    summary["prepass_epochs"] = cfg.prepass.epochs;
    summary["compression_ratio"] =
        compression_ratio(p.shape->total_params(), cfg.prepass.ae.latent_dim);
    summary["collaborators"] = per;
    std::ofstream js = open_text_out(cfg.output_dir / "prepass" / "summary.json");
    js << summary.dump(2) << '\n';
}

void cmd_federate(const ExperimentConfig& cfg, const RunOptions& opt) {
    Pipeline p = build_pipeline(cfg);
    const std::size_t params = p.shape->total_params();
    std::uint32_t latent_dim = 0;

    if (cfg.federated.compression == Compression::autoencoder) {
        for (CollaboratorState& c : p.collaborators) {
            const auto dec_file = decoder_path(cfg, c.id);
            const auto ae_file = ae_checkpoint_path(cfg, c.id);
            if (!std::filesystem::exists(dec_file) || !std::filesystem::exists(ae_file)) {
                throw ProtocolError("no decoder shipped for collaborator " + std::to_string(c.id) +
                                    "; run prepass first");
            }
            DecoderShipment shipment = load_decoder_shipment(dec_file);
            c.ae.net = load_checkpoint(ae_file);
            c.ae.split_index = funnel_split_index(c.ae.net);
            c.ae.stats = shipment.stats;
            c.ae.shape = p.shape;
            if (c.ae.input_dim() != params || c.ae.latent_dim() != shipment.latent_dim) {
                throw ProtocolError("autoencoder checkpoint for collaborator " +
                                    std::to_string(c.id) + " does not match its decoder shipment");
            }
            latent_dim = shipment.latent_dim;
            p.agg.decoders[c.id] = RegisteredDecoder{std::move(shipment.decoder),
                                                     std::move(shipment.stats), shipment.latent_dim};
        }
    }
    // The pre-pass consumed each collaborator's first local-training slot;
    // start after it so baseline and compressed runs draw the same shuffles.
    for (CollaboratorState& c : p.collaborators) c.rounds_trained = 1;

    FederatedOptions fopt;
    fopt.rounds = cfg.federated.rounds;
    fopt.local_epochs = cfg.federated.local_epochs;
    fopt.compression = cfg.federated.compression;
    fopt.threads = opt.threads;
    const std::vector<RoundRecord> records = run_federated(p.collaborators, p.agg, fopt);

    ensure_dir(cfg.output_dir / "federate");
    {
        std::ofstream csv = open_text_out(cfg.output_dir / "federate" / "rounds.csv");
        write_rounds_csv(csv, records);
    }

    std::uint64_t uplink = 0;
    std::uint64_t uplink_payload = 0;
    std::uint64_t downlink = 0;
    for (const RoundRecord& r : records) {
        uplink += r.uplink_bytes;
        uplink_payload += r.uplink_payload_bytes;
        downlink += r.downlink_bytes;
    }
    const std::uint64_t baseline_payload = static_cast<std::uint64_t>(records.size()) *
                                           p.collaborators.size() * params * sizeof(float);

    json summary;
    summary["rounds"] = records.size();
    summary["collaborators"] = p.collaborators.size();
    summary["compression"] = compression_name(cfg.federated.compression);
    summary["model_params"] = params;
    if (latent_dim != 0) summary["latent_dim"] = latent_dim;
    summary["total_uplink_bytes"] = uplink;
    summary["total_uplink_payload_bytes"] = uplink_payload;
    summary["total_downlink_bytes"] = downlink;
    summary["achieved_compression_ratio"] =
        uplink_payload == 0 ? 0.0
                            : static_cast<double>(baseline_payload) / static_cast<double>(uplink_payload);
    json finals = json::array();
    if (!records.empty()) {
        for (const CollaboratorRoundMetrics& m : records.back().collaborators) {
            finals.push_back({{"collab_id", m.collaborator_id},
                              {"accuracy", m.post_accuracy},
                              {"loss", m.post_loss}});
        }
    }
    summary["final"] = finals;

    std::ofstream js = open_text_out(cfg.output_dir / "federate" / "summary.json");
    js << summary.dump(2) << '\n';

    for (const auto& f : finals) {
        std::cout << "collaborator " << f["collab_id"] << ": final accuracy "
                  << g9(f["accuracy"].get<double>()) << '\n';
    }
    std::cout << "uplink " << uplink << " bytes (" << uplink_payload << " payload), downlink "
              << downlink << " bytes\n";
}

bool cmd_validate(const ExperimentConfig& cfg, const RunOptions& opt) {
    Pipeline p = build_pipeline(cfg);
    ensure_dir(cfg.output_dir / "validate");

    json per = json::array();
    bool all_ok = true;
    for (const CollaboratorState& c : p.collaborators) {
        WeightDataset ds = load_dataset(weights_log_path(cfg, c.id));
        ds.shape = p.shape;

        SymmetricAutoencoder ae;
        ReplayOptions ropt;
        ropt.identity_codec = cfg.validate.identity_codec;
        ropt.threads = opt.threads;
        if (!ropt.identity_codec) {
            const auto ae_file = ae_checkpoint_path(cfg, c.id);
            if (!std::filesystem::exists(ae_file)) {
                throw ProtocolError("no autoencoder checkpoint for collaborator " +
                                    std::to_string(c.id) + "; run prepass first");
            }
            ae.net = load_checkpoint(ae_file);
            ae.split_index = funnel_split_index(ae.net);
            ae.shape = p.shape;
            if (ds.stats.has_value()) ae.stats = *ds.stats;
        }

        const ValidationReport report = replay_validation(ds, ae, *p.shape, c.data, ropt);
        std::ofstream csv = open_text_out(cfg.output_dir / "validate" /
                                          ("replay_" + std::to_string(c.id) + ".csv"));
        write_validation_csv(csv, report);

        const bool ok = within_thresholds(report.summary, cfg.validate.thresholds);
        all_ok = all_ok && ok;
        per.push_back({{"collab_id", c.id},
                       {"max_acc_delta", report.summary.max_acc_delta},
                       {"mean_acc_delta", report.summary.mean_acc_delta},
                       {"max_loss_delta", report.summary.max_loss_delta},
                       {"mean_loss_delta", report.summary.mean_loss_delta},
                       {"pass", ok}});
        std::cout << "collaborator " << c.id << ": mean |d acc| "
                  << g9(report.summary.mean_acc_delta) << ", max |d acc| "
                  << g9(report.summary.max_acc_delta) << (ok ? " (pass)" : " (fail)") << '\n';
    }

    json summary;
    summary["identity_codec"] = cfg.validate.identity_codec;
    summary["thresholds"] = {{"max_mean_acc_delta", cfg.validate.thresholds.max_mean_acc_delta},
                             {"max_max_acc_delta", cfg.validate.thresholds.max_max_acc_delta}};
    summary["collaborators"] = per;
    summary["pass"] = all_ok;
    std::ofstream js = open_text_out(cfg.output_dir / "validate" / "summary.json");
    js << summary.dump(2) << '\n';
    return all_ok;
}

} // namespace fedae
