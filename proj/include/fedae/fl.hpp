#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "fedae/autoencoder.hpp"
#include "fedae/codec.hpp"
#include "fedae/data.hpp"
#include "fedae/nn.hpp"

namespace fedae {

enum class Compression : std::uint8_t {
    off = 0,          // raw weight vectors on the uplink (plain FedAvg)
    autoencoder = 1,  // encoder at the collaborator, decoder at the aggregator
    identity = 2,     // codec seam exercised with identity maps (diagnostics)
};

const char* compression_name(Compression c);
Compression compression_from_name(const std::string& name);

struct CollaboratorState {
    std::uint32_t id = 0;
    Network model;
    std::shared_ptr<const ModelShape> shape;
    LabeledDataset data;
    TrainConfig local_train;    // epochs field is overridden per call
    std::uint64_t seed_base = 0;
    std::uint32_t rounds_trained = 0;

    SymmetricAutoencoder ae;    // populated by the pre-pass
    WeightDataset weights_log;  // pre-pass snapshot capture
    AEHistory ae_history;
};

/// Decoder + stats as reconstructed from a collaborator's shipment.
struct RegisteredDecoder {
    Network decoder;
    NormStats stats;
    std::uint32_t latent_dim = 0;
};

struct AggregatorState {
    std::shared_ptr<const ModelShape> shape;
    FlatWeights global_weights;
    std::vector<std::uint32_t> collaborator_ids; // ascending
    std::map<std::uint32_t, RegisteredDecoder> decoders;
    std::uint32_t round = 0;
};

/// The uplink wire unit. With compression off the payload is the raw weight
/// vector (latent length P); the framing is identical either way.
struct CompressedUpdate {
    std::uint32_t collaborator_id = 0;
    std::uint32_t round = 0;
    LatentCode latent;
};

// FWUP wire format: "FWUP", u16 version=1, u32 collaborator_id, u32 round,
// u32 L, then L little-endian f32. The header is 18 bytes.
constexpr std::size_t kUpdateHeaderBytes = 18;
std::vector<std::uint8_t> serialize_update(const CompressedUpdate& update);
CompressedUpdate parse_update(std::span<const std::uint8_t> bytes);

CollaboratorState make_collaborator(std::uint32_t id, LabeledDataset data,
                                    std::shared_ptr<const ModelShape> shape,
                                    const TrainConfig& local_train, std::uint64_t seed_base);

AggregatorState make_aggregator(std::shared_ptr<const ModelShape> shape,
                                std::uint64_t global_seed,
                                std::span<const CollaboratorState> collaborators);

/// Pre-pass round: every collaborator trains the global model locally without
/// federation, captures a weight snapshot at each epoch boundary, trains its
/// autoencoder on that log, and ships the decoder (with stats) to the
/// aggregator through the serialized shipment format.
void run_prepass(std::vector<CollaboratorState>& collaborators, AggregatorState& agg,
                 std::size_t prepass_epochs, const AEConfig& ae_cfg,
                 SnapshotInterval interval = {}, std::size_t threads = 1);

/// Loads the global weights and trains locally; returns the trained weights.
FlatWeights local_round(CollaboratorState& c, const FlatWeights& global,
                        std::size_t local_epochs);

/// normalize -> encode, stamped with round and collaborator id.
CompressedUpdate compress_uplink(const CollaboratorState& c, const FlatWeights& weights,
                                 std::uint32_t round);

/// Reconstructs every update (decode + denormalize under AE compression),
/// averages component-wise in ascending collaborator order, installs the mean
/// as the new global weights, and advances the round counter.
FlatWeights aggregate(AggregatorState& agg, const std::vector<CompressedUpdate>& updates,
                      Compression mode);

struct CollaboratorRoundMetrics {
    std::uint32_t collaborator_id = 0;
    float pre_loss = 0.0f;   // after local training, before aggregation
    float pre_accuracy = 0.0f;
    float post_loss = 0.0f;  // after loading the aggregated global
    float post_accuracy = 0.0f;
    std::uint64_t uplink_bytes = 0;          // wire bytes incl. FWUP header
    std::uint64_t uplink_payload_bytes = 0;  // payload floats only
    std::uint64_t downlink_bytes = 0;        // broadcast share, P*4
};

struct RoundRecord {
    std::uint32_t round = 0;
    std::vector<CollaboratorRoundMetrics> collaborators;
    std::uint64_t uplink_bytes = 0;
    std::uint64_t uplink_payload_bytes = 0;
    std::uint64_t downlink_bytes = 0;
};

struct FederatedOptions {
    std::size_t rounds = 1;
    std::size_t local_epochs = 1;
    Compression compression = Compression::autoencoder;
    std::size_t threads = 1;
    /// 0 keeps autoencoders frozen after the pre-pass. A positive k appends
    /// each round's trained weights to the snapshot log, retrains every k-th
    /// round, and re-ships the decoder (counted as uplink traffic).
    std::size_t ae_retrain_every = 0;
};

std::vector<RoundRecord> run_federated(std::vector<CollaboratorState>& collaborators,
                                       AggregatorState& agg, const FederatedOptions& options);

/// CSV schema: round,collab_id,phase,loss,accuracy,uplink_bytes,downlink_bytes.
/// `pre` rows carry that collaborator's uplink bytes for the round, `post`
/// rows its downlink share, so column sums give totals.
void write_rounds_csv(std::ostream& out, std::span<const RoundRecord> records);

} // namespace fedae
