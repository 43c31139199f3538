#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fedae/nn.hpp"

namespace fedae {

/// Architecture schema that makes flattening invertible.
struct LayerSpec {
    std::uint32_t in = 0;
    std::uint32_t out = 0;
    Activation activation = Activation::identity;

    bool operator==(const LayerSpec&) const = default;
};

struct ModelShape {
    std::vector<LayerSpec> layers;

    static ModelShape of(const Network& net);

    std::uint64_t total_params() const;
    bool matches(const Network& net) const;

    /// Fresh network with this architecture and seeded initial weights.
    Network instantiate(std::uint64_t seed) const;

    bool operator==(const ModelShape&) const = default;
};

/// One-dimensional snapshot of all model parameters. Layer order is fixed:
/// layer 0 weights row-major, layer 0 bias, layer 1 weights, ... This order
/// is part of the wire contract.
struct FlatWeights {
    std::vector<float> values;
    std::shared_ptr<const ModelShape> shape; // may be null for free vectors

    std::size_t size() const { return values.size(); }
};

FlatWeights flatten(const Network& net);
FlatWeights flatten(const Network& net, std::shared_ptr<const ModelShape> shape);

/// Overwrites the parameters of an existing conforming network.
void load_weights(Network& net, const FlatWeights& flat);

/// Builds a network from the shape and assigns the flat weights to it.
Network unflatten(const ModelShape& shape, const FlatWeights& flat);

/// Per-parameter min/max over a snapshot set. A component is degenerate when
/// its min equals its max; it normalizes to 0.5 and decodes back exactly.
struct NormStats {
    std::vector<float> min;
    std::vector<float> max;

    std::size_t size() const { return min.size(); }
    bool empty() const { return min.empty(); }
    bool degenerate(std::size_t i) const { return !(min[i] < max[i]); }
};

enum class SnapshotCadence : std::uint8_t { per_epoch = 0, per_n_batches = 1 };

struct SnapshotInterval {
    SnapshotCadence cadence = SnapshotCadence::per_epoch;
    std::uint32_t n = 0; // batches between snapshots when per_n_batches
};

/// S x P matrix of flattened parameter snapshots captured during training.
struct WeightDataset {
    std::shared_ptr<const ModelShape> shape;
    std::size_t params = 0;         // P
    std::vector<float> snapshots;   // row-major, count() x params
    SnapshotInterval interval;
    std::optional<NormStats> stats;

    std::size_t count() const { return params == 0 ? 0 : snapshots.size() / params; }
    std::span<const float> row(std::size_t i) const { return {snapshots.data() + i * params, params}; }

    static WeightDataset for_shape(std::shared_ptr<const ModelShape> shape,
                                   SnapshotInterval interval = {});
};

void append_snapshot(WeightDataset& ds, const Network& net);

NormStats fit_norm(const WeightDataset& ds);

/// Affine map to [0,1] (clamped) using the per-parameter stats.
FlatWeights normalize(const FlatWeights& flat, const NormStats& stats);

/// Inverse of normalize; degenerate components decode to their constant.
FlatWeights denormalize(const FlatWeights& flat, const NormStats& stats);

// FWDS weight-dataset file: "FWDS", u16 version=1, u32 P, u32 S,
// u8 stats flag, optional stats (P mins then P maxes, f32 LE), then the
// raw S*P little-endian f32 snapshots row-major.
void write_dataset(std::ostream& out, const WeightDataset& ds);
WeightDataset read_dataset(std::istream& in, const std::string& source = "dataset");
void save_dataset(const std::filesystem::path& path, const WeightDataset& ds);
WeightDataset load_dataset(const std::filesystem::path& path);

} // namespace fedae
