#include "fedae/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "fedae/binio.hpp"
#include "fedae/errors.hpp"
#include "fedae/rng.hpp"

namespace fedae {

namespace {

Network slice(const Network& net, std::size_t first, std::size_t last) {
    Network out;
    out.rng_seed = net.rng_seed;
    out.layers.assign(net.layers.begin() + static_cast<std::ptrdiff_t>(first),
                      net.layers.begin() + static_cast<std::ptrdiff_t>(last));
    return out;
}

Tensor normalized_rows(const WeightDataset& ds, const NormStats& stats,
                       std::size_t first, std::size_t count) {
    Tensor rows(count, ds.params);
    for (std::size_t r = 0; r < count; ++r) {
        FlatWeights flat;
        flat.values.assign(ds.row(first + r).begin(), ds.row(first + r).end());
        const FlatWeights norm = normalize(flat, stats);
        std::copy_n(norm.values.data(), ds.params, rows.data() + r * ds.params);
    }
    return rows;
}

float mean_tolerance_fraction(const Network& net, const Tensor& rows, float tau) {
    const Tensor pred = forward(net, rows);
    double total = 0.0;
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        total += tolerance_fraction(pred.row_span(r), rows.row_span(r), tau);
    }
    return static_cast<float>(total / static_cast<double>(rows.rows()));
}

} // namespace

Network SymmetricAutoencoder::encoder_slice() const {
    return slice(net, 0, split_index);
}

Network SymmetricAutoencoder::decoder_slice() const {
    return slice(net, split_index, net.layers.size());
}

std::vector<std::size_t> ae_layer_dims(std::size_t params, const AEConfig& cfg) {
    if (cfg.latent_dim == 0) throw ConfigError("latent dim must be positive");
    if (cfg.latent_dim >= params) {
        throw ConfigError("latent dim " + std::to_string(cfg.latent_dim) +
                          " must be smaller than the parameter count " + std::to_string(params));
    }
    std::vector<std::size_t> dims;
    dims.push_back(params);
    for (std::size_t h : cfg.encoder_hidden) {
        if (h <= cfg.latent_dim || h >= dims.back()) {
            throw ConfigError("encoder hidden sizes must decrease strictly from the "
                              "parameter count toward the latent dim");
        }
        dims.push_back(h);
    }
    dims.push_back(cfg.latent_dim);
    for (auto it = cfg.encoder_hidden.rbegin(); it != cfg.encoder_hidden.rend(); ++it) {
        dims.push_back(*it);
    }
    dims.push_back(params);
    return dims;
}

std::uint64_t ae_param_count(std::size_t params, const AEConfig& cfg) {
    const std::vector<std::size_t> dims = ae_layer_dims(params, cfg);
    std::uint64_t total = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        total += std::uint64_t{dims[l]} * dims[l + 1] + dims[l + 1];
    }
    return total;
}

SymmetricAutoencoder build_ae(std::size_t params, const AEConfig& cfg, std::uint64_t seed) {
    const std::vector<std::size_t> dims = ae_layer_dims(params, cfg);
    std::vector<Activation> acts(dims.size() - 1, cfg.hidden_activation);
    acts.back() = cfg.output_activation;

    SymmetricAutoencoder ae;
    ae.net = make_network(dims, acts, seed);
    ae.split_index = cfg.encoder_hidden.size() + 1;
    ae.train = cfg.train;
    if (ae.train.shuffle_seed == 0) ae.train.shuffle_seed = derive_seed(seed, 0xAE);
    return ae;
}

std::size_t funnel_split_index(const Network& net) {
    if (net.layers.size() < 2) throw CodecError("network is too shallow to be a funnel");
    std::size_t narrowest = 0;
    std::size_t hits = 1;
    for (std::size_t li = 1; li < net.layers.size(); ++li) {
        if (net.layers[li].out < net.layers[narrowest].out) {
            narrowest = li;
            hits = 1;
        } else if (net.layers[li].out == net.layers[narrowest].out && li != narrowest) {
            ++hits;
        }
    }
    if (hits > 1 || net.layers[narrowest].out >= net.input_dim()) {
        throw CodecError("network widths do not form a funnel");
    }
    return narrowest + 1;
}

AEHistory train_ae(SymmetricAutoencoder& ae, const WeightDataset& ds, float tau) {
    const std::size_t S = ds.count();
    if (S < 2) throw ConfigError("autoencoder training needs at least 2 snapshots");
    if (ds.params != ae.input_dim()) {
        throw CodecError("dataset parameter count " + std::to_string(ds.params) +
                         " does not match autoencoder input " + std::to_string(ae.input_dim()));
    }
    if (ae.stats.empty()) {
        ae.stats = ds.stats ? *ds.stats : fit_norm(ds);
    }
    if (ae.stats.size() != ds.params) {
        throw CodecError("normalization stats length does not match the dataset");
    }
    if (!ae.shape) ae.shape = ds.shape;

    const std::size_t holdout = S / 5; // last fifth, by epoch order
    const std::size_t train_rows = S - holdout;
    const Tensor inputs = normalized_rows(ds, ae.stats, 0, train_rows);
    const Tensor holdout_inputs =
        holdout > 0 ? normalized_rows(ds, ae.stats, train_rows, holdout) : Tensor();

    AEHistory history;
    history.holdout_count = holdout;
    history.initial_loss = evaluate(ae.net, inputs, inputs, Loss::mse).loss;

    TrainConfig cfg = ae.train;
    cfg.loss = Loss::mse;
    cfg.batch_size = std::min(cfg.batch_size, train_rows);

    train(ae.net, inputs, inputs, cfg, [&](std::size_t) {
        history.loss.push_back(evaluate(ae.net, inputs, inputs, Loss::mse).loss);
        history.recreation_accuracy.push_back(mean_tolerance_fraction(ae.net, inputs, tau));
        if (holdout > 0) {
            history.holdout_loss.push_back(
                evaluate(ae.net, holdout_inputs, holdout_inputs, Loss::mse).loss);
            history.holdout_recreation_accuracy.push_back(
                mean_tolerance_fraction(ae.net, holdout_inputs, tau));
        }
    });
    return history;
}

LatentCode encode(const SymmetricAutoencoder& ae, const FlatWeights& normalized) {
    if (normalized.size() != ae.input_dim()) {
        throw CodecError("encode: expected length " + std::to_string(ae.input_dim()) +
                         ", got " + std::to_string(normalized.size()));
    }
    const Tensor out = forward_slice(ae.net, Tensor::row(normalized.values), 0, ae.split_index);
    LatentCode code;
    code.values.assign(out.values().begin(), out.values().end());
    return code;
}

FlatWeights decode(const SymmetricAutoencoder& ae, const LatentCode& code) {
    if (code.values.size() != ae.latent_dim()) {
        throw CodecError("decode: expected latent length " + std::to_string(ae.latent_dim()) +
                         ", got " + std::to_string(code.values.size()));
    }
    const Tensor out = forward_slice(ae.net, Tensor::row(code.values),
                                     ae.split_index, ae.net.layers.size());
    FlatWeights flat;
    flat.shape = ae.shape;
    flat.values.assign(out.values().begin(), out.values().end());
    return flat;
}

double compression_ratio(std::uint64_t params, std::uint64_t latent_dim) {
    if (latent_dim == 0) throw ConfigError("latent dim must be positive");
    return static_cast<double>(params) / static_cast<double>(latent_dim);
}

float tolerance_fraction(std::span<const float> a, std::span<const float> b, float tau) {
    if (a.size() != b.size()) throw CodecError("tolerance_fraction: length mismatch");
    if (a.empty()) throw ConfigError("tolerance_fraction: empty vectors");
    std::size_t within = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::fabs(a[i] - b[i]) <= tau) ++within;
    }
    return static_cast<float>(within) / static_cast<float>(a.size());
}

float recreation_accuracy(const FlatWeights& original, const FlatWeights& predicted,
                          const NormStats& stats, float tau) {
    if (tau <= 0.0f) throw ConfigError("tau must be positive");
    const FlatWeights a = normalize(original, stats);
    const FlatWeights b = normalize(predicted, stats);
    return tolerance_fraction(a.values, b.values, tau);
}

void write_decoder_shipment(std::ostream& out, const SymmetricAutoencoder& ae) {
    if (ae.stats.empty()) throw CodecError("cannot ship a decoder without fitted stats");
    if (ae.stats.size() != ae.input_dim()) {
        throw CodecError("stats length does not match the autoencoder input dim");
    }
    write_checkpoint(out, ae.decoder_slice());
    BinaryWriter w(out);
    w.f32_block(ae.stats.min);
    w.f32_block(ae.stats.max);
    w.u32(static_cast<std::uint32_t>(ae.latent_dim()));
}

DecoderShipment read_decoder_shipment(std::istream& in, const std::string& source) {
    DecoderShipment shipment;
    shipment.decoder = read_checkpoint(in, source);
    if (shipment.decoder.layers.empty()) {
        throw ParseError(source + ": shipment holds an empty decoder");
    }
    const std::size_t params = shipment.decoder.output_dim();
    BinaryReader r(in, source);
    shipment.stats.min.resize(params);
    shipment.stats.max.resize(params);
    r.f32_block(shipment.stats.min);
    r.f32_block(shipment.stats.max);
    shipment.latent_dim = r.u32();
    if (shipment.latent_dim != shipment.decoder.input_dim()) {
        throw ParseError(source + ": latent dim " + std::to_string(shipment.latent_dim) +
                         " does not match the decoder input " +
                         std::to_string(shipment.decoder.input_dim()));
    }
    return shipment;
}

void save_decoder_shipment(const std::filesystem::path& path, const SymmetricAutoencoder& ae) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_decoder_shipment(out, ae);
    if (!out) throw IoError("write failed for " + path.string());
}

DecoderShipment load_decoder_shipment(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_decoder_shipment(in, path.filename().string());
}

} // namespace fedae
