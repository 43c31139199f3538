#include "fedae/codec.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include "fedae/binio.hpp"
#include "fedae/errors.hpp"

namespace fedae {

namespace {

void check_length(std::size_t expected, std::size_t actual, const char* what) {
    if (expected != actual) {
        throw CodecError(std::string(what) + ": expected length " + std::to_string(expected) +
                         ", got " + std::to_string(actual));
    }
}

} // namespace

ModelShape ModelShape::of(const Network& net) {
    ModelShape shape;
    shape.layers.reserve(net.layers.size());
    for (const DenseLayer& layer : net.layers) {
        shape.layers.push_back({static_cast<std::uint32_t>(layer.in),
                                static_cast<std::uint32_t>(layer.out),
                                layer.activation});
    }
    return shape;
}

std::uint64_t ModelShape::total_params() const {
    std::uint64_t total = 0;
    for (const LayerSpec& l : layers) {
        total += std::uint64_t{l.out} * l.in + l.out;
    }
    return total;
}

bool ModelShape::matches(const Network& net) const {
    if (net.layers.size() != layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const DenseLayer& a = net.layers[i];
        const LayerSpec& b = layers[i];
        if (a.in != b.in || a.out != b.out || a.activation != b.activation) return false;
    }
    return true;
}

Network ModelShape::instantiate(std::uint64_t seed) const {
    std::vector<std::size_t> dims;
    std::vector<Activation> acts;
    dims.reserve(layers.size() + 1);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (i == 0) {
            dims.push_back(layers[i].in);
        } else if (layers[i].in != layers[i - 1].out) {
            throw ConfigError("model shape layers are not dimension-compatible");
        }
        dims.push_back(layers[i].out);
        acts.push_back(layers[i].activation);
    }
    return make_network(dims, acts, seed);
}

FlatWeights flatten(const Network& net) {
    return flatten(net, std::make_shared<const ModelShape>(ModelShape::of(net)));
}

FlatWeights flatten(const Network& net, std::shared_ptr<const ModelShape> shape) {
    if (shape && !shape->matches(net)) {
        throw CodecError("network does not conform to the given model shape");
    }
    FlatWeights flat;
    flat.shape = std::move(shape);
    flat.values.reserve(static_cast<std::size_t>(param_count(net)));
    for (const DenseLayer& layer : net.layers) {
        flat.values.insert(flat.values.end(), layer.weights.begin(), layer.weights.end());
        flat.values.insert(flat.values.end(), layer.bias.begin(), layer.bias.end());
    }
    return flat;
}

void load_weights(Network& net, const FlatWeights& flat) {
    check_length(static_cast<std::size_t>(param_count(net)), flat.values.size(), "unflatten");
    const float* src = flat.values.data();
    for (DenseLayer& layer : net.layers) {
        std::copy_n(src, layer.weights.size(), layer.weights.data());
        src += layer.weights.size();
        std::copy_n(src, layer.bias.size(), layer.bias.data());
        src += layer.bias.size();
    }
}

Network unflatten(const ModelShape& shape, const FlatWeights& flat) {
    check_length(static_cast<std::size_t>(shape.total_params()), flat.values.size(), "unflatten");
    Network net = shape.instantiate(0);
    load_weights(net, flat);
    return net;
}

WeightDataset WeightDataset::for_shape(std::shared_ptr<const ModelShape> shape,
                                       SnapshotInterval interval) {
    WeightDataset ds;
    ds.params = shape ? static_cast<std::size_t>(shape->total_params()) : 0;
    ds.shape = std::move(shape);
    ds.interval = interval;
    return ds;
}

void append_snapshot(WeightDataset& ds, const Network& net) {
    if (ds.shape && !ds.shape->matches(net)) {
        throw CodecError("snapshot network does not conform to the dataset shape");
    }
    if (ds.params == 0) ds.params = static_cast<std::size_t>(param_count(net));
    check_length(ds.params, static_cast<std::size_t>(param_count(net)), "append_snapshot");
    ds.snapshots.reserve(ds.snapshots.size() + ds.params);
    for (const DenseLayer& layer : net.layers) {
        ds.snapshots.insert(ds.snapshots.end(), layer.weights.begin(), layer.weights.end());
        ds.snapshots.insert(ds.snapshots.end(), layer.bias.begin(), layer.bias.end());
    }
}

NormStats fit_norm(const WeightDataset& ds) {
    const std::size_t S = ds.count();
    if (S == 0) throw ConfigError("fit_norm needs at least one snapshot");
    NormStats stats;
    stats.min.assign(ds.params, 0.0f);
    stats.max.assign(ds.params, 0.0f);
    std::copy_n(ds.snapshots.data(), ds.params, stats.min.data());
    std::copy_n(ds.snapshots.data(), ds.params, stats.max.data());
    for (std::size_t s = 1; s < S; ++s) {
        const float* row = ds.snapshots.data() + s * ds.params;
        for (std::size_t i = 0; i < ds.params; ++i) {
            stats.min[i] = std::min(stats.min[i], row[i]);
            stats.max[i] = std::max(stats.max[i], row[i]);
        }
    }
    return stats;
}

FlatWeights normalize(const FlatWeights& flat, const NormStats& stats) {
    check_length(stats.size(), flat.values.size(), "normalize");
    FlatWeights out;
    out.shape = flat.shape;
    out.values.resize(flat.values.size());
    for (std::size_t i = 0; i < flat.values.size(); ++i) {
        if (stats.degenerate(i)) {
            out.values[i] = 0.5f;
        } else {
            const double range = static_cast<double>(stats.max[i]) - static_cast<double>(stats.min[i]);
            double y = (static_cast<double>(flat.values[i]) - static_cast<double>(stats.min[i])) / range;
            y = std::clamp(y, 0.0, 1.0);
            out.values[i] = static_cast<float>(y);
        }
    }
    return out;
}

FlatWeights denormalize(const FlatWeights& flat, const NormStats& stats) {
    check_length(stats.size(), flat.values.size(), "denormalize");
    FlatWeights out;
    out.shape = flat.shape;
    out.values.resize(flat.values.size());
    for (std::size_t i = 0; i < flat.values.size(); ++i) {
        if (stats.degenerate(i)) {
            out.values[i] = stats.min[i];
        } else {
            const double range = static_cast<double>(stats.max[i]) - static_cast<double>(stats.min[i]);
            out.values[i] = static_cast<float>(static_cast<double>(stats.min[i]) +
                                               static_cast<double>(flat.values[i]) * range);
        }
    }
    return out;
}

void write_dataset(std::ostream& out, const WeightDataset& ds) {
    BinaryWriter w(out);
    w.magic("FWDS");
    w.u16(1);
    w.u32(static_cast<std::uint32_t>(ds.params));
    w.u32(static_cast<std::uint32_t>(ds.count()));
    w.u8(ds.stats ? 1 : 0);
    if (ds.stats) {
        if (ds.stats->size() != ds.params) {
            throw CodecError("dataset stats length does not match parameter count");
        }
        w.f32_block(ds.stats->min);
        w.f32_block(ds.stats->max);
    }
    w.f32_block(ds.snapshots);
}

WeightDataset read_dataset(std::istream& in, const std::string& source) {
    BinaryReader r(in, source);
    r.expect_magic("FWDS");
    const std::uint16_t version = r.u16();
    if (version != 1) r.fail("unsupported version " + std::to_string(version), r.offset() - 2);
    WeightDataset ds;
    ds.params = r.u32();
    const std::uint32_t S = r.u32();
    const std::uint8_t has_stats = r.u8();
    if (has_stats > 1) r.fail("bad normalization flag", r.offset() - 1);
    if (has_stats) {
        NormStats stats;
        stats.min.resize(ds.params);
        stats.max.resize(ds.params);
        r.f32_block(stats.min);
        r.f32_block(stats.max);
        ds.stats = std::move(stats);
    }
    ds.snapshots.resize(static_cast<std::size_t>(S) * ds.params);
    r.f32_block(ds.snapshots);
    return ds;
}

void save_dataset(const std::filesystem::path& path, const WeightDataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_dataset(out, ds);
    if (!out) throw IoError("write failed for " + path.string());
}

WeightDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_dataset(in, path.filename().string());
}

} // namespace fedae
