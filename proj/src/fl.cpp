#include "fedae/fl.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "fedae/binio.hpp"
#include "fedae/errors.hpp"
#include "fedae/parallel.hpp"
#include "fedae/rng.hpp"
#include "fedae/textio.hpp"

namespace fedae {

namespace {

constexpr std::uint16_t kUpdateVersion = 1;

std::string collab_tag(std::uint32_t id) {
    return "collaborator " + std::to_string(id);
}

/// Recovers the funnel configuration of an already-built autoencoder so it
/// can be rebuilt fresh for a mid-run retrain.
AEConfig config_of(const SymmetricAutoencoder& ae) {
    AEConfig cfg;
    for (std::size_t li = 0; li + 1 < ae.split_index; ++li) {
        cfg.encoder_hidden.push_back(ae.net.layers[li].out);
    }
    cfg.latent_dim = ae.latent_dim();
    cfg.hidden_activation = ae.net.layers.front().activation;
    cfg.output_activation = ae.net.layers.back().activation;
    cfg.train = ae.train;
    return cfg;
}

} // namespace

const char* compression_name(Compression c) {
    switch (c) {
        case Compression::off: return "off";
        case Compression::autoencoder: return "autoencoder";
        case Compression::identity: return "identity";
    }
    throw ConfigError("unknown compression mode");
}

Compression compression_from_name(const std::string& name) {
    if (name == "off") return Compression::off;
    if (name == "autoencoder") return Compression::autoencoder;
    if (name == "identity") return Compression::identity;
    throw ConfigError("unknown compression mode \"" + name + "\"");
}

std::vector<std::uint8_t> serialize_update(const CompressedUpdate& update) {
    std::ostringstream out(std::ios::binary);
    BinaryWriter w(out);
    w.magic("FWUP");
    w.u16(kUpdateVersion);
    w.u32(update.collaborator_id);
    w.u32(update.round);
    w.u32(static_cast<std::uint32_t>(update.latent.values.size()));
    w.f32_block(update.latent.values);
    const std::string buf = out.str();
    return {buf.begin(), buf.end()};
}

CompressedUpdate parse_update(std::span<const std::uint8_t> bytes) {
    std::string buf;
    if (!bytes.empty()) buf.assign(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    std::istringstream in(buf, std::ios::binary);
    BinaryReader r(in, "update");

    r.expect_magic("FWUP");
    const std::uint16_t version = r.u16();
    if (version != kUpdateVersion) {
        r.fail("unsupported version " + std::to_string(version), r.offset() - 2);
    }
    CompressedUpdate update;
    update.collaborator_id = r.u32();
    update.round = r.u32();
    const std::uint32_t latent = r.u32();
    update.latent.values.resize(latent);
    r.f32_block(update.latent.values);
    update.latent.round = update.round;
    update.latent.collaborator_id = update.collaborator_id;
    if (r.offset() != bytes.size()) r.fail("trailing data", r.offset());
    return update;
}

CollaboratorState make_collaborator(std::uint32_t id, LabeledDataset data,
                                    std::shared_ptr<const ModelShape> shape,
                                    const TrainConfig& local_train, std::uint64_t seed_base) {
    if (!shape || shape->layers.empty()) throw ConfigError("collaborator needs a model shape");
    if (data.size() == 0) throw ConfigError(collab_tag(id) + " has an empty dataset");
    if (data.dim() != shape->layers.front().in) {
        throw ConfigError(collab_tag(id) + ": dataset dim " + std::to_string(data.dim()) +
                          " does not match model input " + std::to_string(shape->layers.front().in));
    }
    if (data.classes() != shape->layers.back().out) {
        throw ConfigError(collab_tag(id) + ": dataset has " + std::to_string(data.classes()) +
                          " classes, model outputs " + std::to_string(shape->layers.back().out));
    }
    CollaboratorState c;
    c.id = id;
    c.shape = shape;
    c.model = shape->instantiate(seed_base);
    c.data = std::move(data);
    c.local_train = local_train;
    c.seed_base = seed_base;
    return c;
}

AggregatorState make_aggregator(std::shared_ptr<const ModelShape> shape, std::uint64_t global_seed,
                                std::span<const CollaboratorState> collaborators) {
    if (!shape || shape->layers.empty()) throw ConfigError("aggregator needs a model shape");
    if (collaborators.empty()) throw ConfigError("aggregator needs at least one collaborator");

    AggregatorState agg;
    agg.shape = shape;
    Network net = shape->instantiate(global_seed);
    agg.global_weights = flatten(net, shape);

    agg.collaborator_ids.reserve(collaborators.size());
    for (const CollaboratorState& c : collaborators) {
        if (!c.shape || *c.shape != *shape) {
            throw ConfigError(collab_tag(c.id) + " uses a different model shape");
        }
        agg.collaborator_ids.push_back(c.id);
    }
    std::sort(agg.collaborator_ids.begin(), agg.collaborator_ids.end());
    const auto dup = std::adjacent_find(agg.collaborator_ids.begin(), agg.collaborator_ids.end());
    if (dup != agg.collaborator_ids.end()) {
        throw ProtocolError("duplicate " + collab_tag(*dup));
    }
    return agg;
}

void run_prepass(std::vector<CollaboratorState>& collaborators, AggregatorState& agg,
                 std::size_t prepass_epochs, const AEConfig& ae_cfg, SnapshotInterval interval,
                 std::size_t threads) {
    if (collaborators.empty()) throw ConfigError("no collaborators");
    if (prepass_epochs < 2) {
        throw ConfigError("prepass needs at least 2 epochs to fit the autoencoder");
    }
    if (interval.cadence == SnapshotCadence::per_n_batches && interval.n == 0) {
        throw ConfigError("per-batch snapshot cadence needs n >= 1");
    }
    const std::size_t params = agg.shape->total_params();

    parallel_for_index(collaborators.size(), threads, [&](std::size_t i) {
        CollaboratorState& c = collaborators[i];
        load_weights(c.model, agg.global_weights);
        c.weights_log = WeightDataset::for_shape(agg.shape, interval);

        TrainConfig cfg = c.local_train;
        cfg.epochs = prepass_epochs;
        cfg.shuffle_seed = derive_seed(c.seed_base, seed_stream::local_shuffle + c.rounds_trained);

        EpochHook epoch_hook;
        BatchHook batch_hook;
        std::size_t batches_done = 0;
        if (interval.cadence == SnapshotCadence::per_epoch) {
            epoch_hook = [&c](std::size_t) { append_snapshot(c.weights_log, c.model); };
        } else {
            batch_hook = [&c, &batches_done, n = interval.n](std::size_t, std::size_t) {
                if (++batches_done % n == 0) append_snapshot(c.weights_log, c.model);
            };
        }
        train(c.model, c.data.inputs, c.data.targets, cfg, epoch_hook, batch_hook);
        ++c.rounds_trained;

        if (c.weights_log.count() < 2) {
            throw ProtocolError(collab_tag(c.id) + ": pre-pass captured " +
                                std::to_string(c.weights_log.count()) +
                                " snapshots, need at least 2");
        }
        c.weights_log.stats = fit_norm(c.weights_log);

        c.ae = build_ae(params, ae_cfg, derive_seed(c.seed_base, seed_stream::autoencoder));
        c.ae.shape = agg.shape;
        try {
            c.ae_history = train_ae(c.ae, c.weights_log, ae_cfg.tau);
        } catch (const NumericError& e) {
            throw ProtocolError(collab_tag(c.id) + ": autoencoder training diverged: " + e.what());
        }
    });

    // Ship every decoder through its serialized form so the wire format is
    // exercised end to end even when both sides live in one process.
    for (std::uint32_t id : agg.collaborator_ids) {
        const auto it = std::find_if(collaborators.begin(), collaborators.end(),
                                     [id](const CollaboratorState& c) { return c.id == id; });
        std::ostringstream out(std::ios::binary);
        write_decoder_shipment(out, it->ae);
        std::istringstream in(out.str(), std::ios::binary);
        DecoderShipment shipment = read_decoder_shipment(in, collab_tag(id) + " decoder");
        if (shipment.decoder.output_dim() != params) {
            throw ProtocolError(collab_tag(id) + ": decoder reconstructs " +
                                std::to_string(shipment.decoder.output_dim()) +
                                " parameters, expected " + std::to_string(params));
        }
        agg.decoders[id] = RegisteredDecoder{std::move(shipment.decoder),
                                             std::move(shipment.stats), shipment.latent_dim};
    }
}

FlatWeights local_round(CollaboratorState& c, const FlatWeights& global, std::size_t local_epochs) {
    load_weights(c.model, global);
    if (local_epochs == 0) return flatten(c.model, c.shape);

    TrainConfig cfg = c.local_train;
    cfg.epochs = local_epochs;
    cfg.shuffle_seed = derive_seed(c.seed_base, seed_stream::local_shuffle + c.rounds_trained);
    train(c.model, c.data.inputs, c.data.targets, cfg);
    ++c.rounds_trained;
    return flatten(c.model, c.shape);
}

CompressedUpdate compress_uplink(const CollaboratorState& c, const FlatWeights& weights,
                                 std::uint32_t round) {
    if (c.ae.split_index == 0 || c.ae.stats.empty()) {
        throw ProtocolError(collab_tag(c.id) + " has no trained autoencoder");
    }
    CompressedUpdate update;
    update.collaborator_id = c.id;
    update.round = round;
    update.latent = encode(c.ae, normalize(weights, c.ae.stats));
    update.latent.round = round;
    update.latent.collaborator_id = c.id;
    return update;
}

FlatWeights aggregate(AggregatorState& agg, const std::vector<CompressedUpdate>& updates,
                      Compression mode) {
    const std::size_t n = agg.collaborator_ids.size();
    if (updates.size() != n) {
        throw ProtocolError("expected " + std::to_string(n) + " updates, got " +
                            std::to_string(updates.size()));
    }
    const std::size_t params = agg.shape->total_params();

    std::unordered_map<std::uint32_t, const CompressedUpdate*> by_id;
    by_id.reserve(n);
    for (const CompressedUpdate& u : updates) {
        if (!std::binary_search(agg.collaborator_ids.begin(), agg.collaborator_ids.end(),
                                u.collaborator_id)) {
            throw ProtocolError("update from unknown " + collab_tag(u.collaborator_id));
        }
        if (u.round != agg.round) {
            throw ProtocolError(collab_tag(u.collaborator_id) + ": update stamped round " +
                                std::to_string(u.round) + ", aggregator is at round " +
                                std::to_string(agg.round));
        }
        if (!by_id.emplace(u.collaborator_id, &u).second) {
            throw ProtocolError("duplicate update from " + collab_tag(u.collaborator_id));
        }
    }

    // Component-wise mean in double, always in ascending id order so the
    // result does not depend on arrival order.
    std::vector<double> acc(params, 0.0);
    for (std::uint32_t id : agg.collaborator_ids) {
        const CompressedUpdate& u = *by_id.at(id);
        if (mode == Compression::autoencoder) {
            const auto it = agg.decoders.find(id);
            if (it == agg.decoders.end()) {
                throw ProtocolError("no decoder registered for " + collab_tag(id));
            }
            const RegisteredDecoder& dec = it->second;
            if (u.latent.values.size() != dec.latent_dim) {
                throw ProtocolError(collab_tag(id) + ": latent length " +
                                    std::to_string(u.latent.values.size()) + ", expected " +
                                    std::to_string(dec.latent_dim));
            }
            const Tensor out = forward(dec.decoder, Tensor::row(u.latent.values));
            FlatWeights normalized;
            normalized.values = out.values();
            const FlatWeights restored = denormalize(normalized, dec.stats);
            for (std::size_t k = 0; k < params; ++k) acc[k] += restored.values[k];
        } else {
            if (u.latent.values.size() != params) {
                throw ProtocolError(collab_tag(id) + ": raw update carries " +
                                    std::to_string(u.latent.values.size()) + " values, expected " +
                                    std::to_string(params));
            }
            for (std::size_t k = 0; k < params; ++k) acc[k] += u.latent.values[k];
        }
    }

    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < params; ++k) {
        agg.global_weights.values[k] = static_cast<float>(acc[k] * inv);
    }
    ++agg.round;
    return agg.global_weights;
}

std::vector<RoundRecord> run_federated(std::vector<CollaboratorState>& collaborators,
                                       AggregatorState& agg, const FederatedOptions& options) {
    if (collaborators.empty()) throw ConfigError("no collaborators");
    if (options.compression == Compression::autoencoder) {
        for (std::uint32_t id : agg.collaborator_ids) {
            if (agg.decoders.find(id) == agg.decoders.end()) {
                throw ProtocolError("no decoder registered for " + collab_tag(id) +
                                    "; run the pre-pass first");
            }
        }
    }

    const std::size_t n = collaborators.size();
    const std::size_t params = agg.shape->total_params();
    const std::uint64_t downlink_each = static_cast<std::uint64_t>(params) * sizeof(float);
    const bool log_weights = options.ae_retrain_every > 0;

    std::unordered_map<std::uint32_t, std::size_t> index_of;
    for (std::size_t i = 0; i < n; ++i) index_of[collaborators[i].id] = i;

    struct Slot {
        std::vector<std::uint8_t> wire;
        std::uint64_t payload_bytes = 0;
        std::uint64_t reship_bytes = 0;
        float pre_loss = 0.0f, pre_acc = 0.0f;
        float post_loss = 0.0f, post_acc = 0.0f;
    };

    std::vector<RoundRecord> records;
    records.reserve(options.rounds);

    for (std::size_t r = 0; r < options.rounds; ++r) {
        const std::uint32_t round_stamp = agg.round;
        const bool retrain_now = log_weights && (r + 1) % options.ae_retrain_every == 0;
        std::vector<Slot> slots(n);

        parallel_for_index(n, options.threads, [&](std::size_t i) {
            CollaboratorState& c = collaborators[i];
            Slot& s = slots[i];

            const FlatWeights trained = local_round(c, agg.global_weights, options.local_epochs);
            const EvalResult pre = evaluate(c.model, c.data.inputs, c.data.targets);
            s.pre_loss = pre.loss;
            s.pre_acc = pre.accuracy;

            if (log_weights) {
                append_snapshot(c.weights_log, c.model);
                if (retrain_now) {
                    c.weights_log.stats = fit_norm(c.weights_log);
                    c.ae = build_ae(params, config_of(c.ae),
                                    derive_seed(c.seed_base, seed_stream::autoencoder + 1 + r));
                    c.ae.shape = c.shape;
                    try {
                        c.ae_history = train_ae(c.ae, c.weights_log);
                    } catch (const NumericError& e) {
                        throw ProtocolError(collab_tag(c.id) +
                                            ": autoencoder retraining diverged: " + e.what());
                    }
                }
            }

            CompressedUpdate update;
            if (options.compression == Compression::autoencoder) {
                update = compress_uplink(c, trained, round_stamp);
            } else {
                update.collaborator_id = c.id;
                update.round = round_stamp;
                update.latent.values = trained.values;
                update.latent.round = round_stamp;
                update.latent.collaborator_id = c.id;
            }
            s.wire = serialize_update(update);
            s.payload_bytes = update.latent.values.size() * sizeof(float);
        });

        if (retrain_now) {
            // Fresh decoders travel with this round's traffic.
            for (std::uint32_t id : agg.collaborator_ids) {
                const std::size_t i = index_of.at(id);
                std::ostringstream out(std::ios::binary);
                write_decoder_shipment(out, collaborators[i].ae);
                std::istringstream in(out.str(), std::ios::binary);
                DecoderShipment shipment = read_decoder_shipment(in, collab_tag(id) + " decoder");
                slots[i].reship_bytes = out.str().size();
                agg.decoders[id] = RegisteredDecoder{std::move(shipment.decoder),
                                                     std::move(shipment.stats), shipment.latent_dim};
            }
        }

        std::vector<CompressedUpdate> updates;
        updates.reserve(n);
        for (const Slot& s : slots) updates.push_back(parse_update(s.wire));
        aggregate(agg, updates, options.compression);

        parallel_for_index(n, options.threads, [&](std::size_t i) {
            CollaboratorState& c = collaborators[i];
            load_weights(c.model, agg.global_weights);
            const EvalResult post = evaluate(c.model, c.data.inputs, c.data.targets);
            slots[i].post_loss = post.loss;
            slots[i].post_acc = post.accuracy;
        });

        RoundRecord rec;
        rec.round = round_stamp;
        rec.collaborators.reserve(n);
        for (std::uint32_t id : agg.collaborator_ids) {
            const std::size_t i = index_of.at(id);
            const Slot& s = slots[i];
            CollaboratorRoundMetrics m;
            m.collaborator_id = id;
            m.pre_loss = s.pre_loss;
            m.pre_accuracy = s.pre_acc;
            m.post_loss = s.post_loss;
            m.post_accuracy = s.post_acc;
            m.uplink_bytes = s.wire.size() + s.reship_bytes;
            m.uplink_payload_bytes = s.payload_bytes;
            m.downlink_bytes = downlink_each;
            rec.uplink_bytes += m.uplink_bytes;
            rec.uplink_payload_bytes += m.uplink_payload_bytes;
            rec.downlink_bytes += m.downlink_bytes;
            rec.collaborators.push_back(m);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_rounds_csv(std::ostream& out, std::span<const RoundRecord> records) {
    out << "round,collab_id,phase,loss,accuracy,uplink_bytes,downlink_bytes\n";
    for (const RoundRecord& rec : records) {
        for (const CollaboratorRoundMetrics& m : rec.collaborators) {
            out << rec.round << ',' << m.collaborator_id << ",pre," << g9(m.pre_loss) << ','
                << g9(m.pre_accuracy) << ',' << m.uplink_bytes << ",0\n";
            out << rec.round << ',' << m.collaborator_id << ",post," << g9(m.post_loss) << ','
                << g9(m.post_accuracy) << ",0," << m.downlink_bytes << '\n';
        }
    }
}

} // namespace fedae
