#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "fedae/codec.hpp"
#include "fedae/nn.hpp"

namespace fedae {

struct AEConfig {
    std::vector<std::size_t> encoder_hidden; // strictly decreasing, may be empty
    std::size_t latent_dim = 32;
    Activation hidden_activation = Activation::tanh;
    Activation output_activation = Activation::sigmoid;
    TrainConfig train{.learning_rate = 0.05f, .batch_size = 4, .epochs = 400, .loss = Loss::mse};
    float tau = 0.05f;  // tolerance for the recreation-accuracy metric
};

/// Funnel network P -> hidden... -> L -> reversed hidden... -> P.
/// Layers [0, split_index) form the encoder, the rest the decoder.
struct SymmetricAutoencoder {
    Network net;
    std::size_t split_index = 0;
    NormStats stats;                         // fitted on the pre-pass dataset
    std::shared_ptr<const ModelShape> shape; // of the model being compressed
    TrainConfig train;                       // carried over from AEConfig

    std::size_t input_dim() const { return net.input_dim(); }
    std::size_t latent_dim() const {
        return split_index == 0 ? 0 : net.layers[split_index - 1].out;
    }

    Network encoder_slice() const;
    Network decoder_slice() const;
};

/// The L-dimensional code transmitted uplink in place of the weight vector.
struct LatentCode {
    std::vector<float> values;
    std::uint32_t round = 0;
    std::uint32_t collaborator_id = 0;
};

/// Layer widths of the funnel, input through output.
std::vector<std::size_t> ae_layer_dims(std::size_t params, const AEConfig& cfg);

/// Parameter count of the funnel without building it. For the default
/// no-hidden architecture this is 2*P*L + L + P.
std::uint64_t ae_param_count(std::size_t params, const AEConfig& cfg);

SymmetricAutoencoder build_ae(std::size_t params, const AEConfig& cfg, std::uint64_t seed);

/// Index just past the narrowest layer — the encoder/decoder boundary of a
/// funnel network reloaded from a checkpoint.
std::size_t funnel_split_index(const Network& net);

struct AEHistory {
    float initial_loss = 0.0f;               // before the first update
    std::vector<float> loss;                 // reconstruction mse per epoch
    std::vector<float> recreation_accuracy;  // tolerance fraction per epoch
    std::vector<float> holdout_loss;
    std::vector<float> holdout_recreation_accuracy;
    std::size_t holdout_count = 0;
};

/// Trains the funnel to reproduce the normalized snapshots (inputs == targets)
/// under reconstruction mse. The last fifth of the snapshots is held out for
/// reporting and never trained on. ae.stats must be fitted beforehand; when
/// empty they are adopted from the dataset (or fitted from it).
AEHistory train_ae(SymmetricAutoencoder& ae, const WeightDataset& ds, float tau = 0.05f);

/// Encoder slice only. The input must already be normalized.
LatentCode encode(const SymmetricAutoencoder& ae, const FlatWeights& normalized);

/// Decoder slice only. The output lives in the normalized domain.
FlatWeights decode(const SymmetricAutoencoder& ae, const LatentCode& code);

/// P / L: original parameter count over latent width.
double compression_ratio(std::uint64_t params, std::uint64_t latent_dim);

/// Fraction of components whose normalized values agree within tau.
float recreation_accuracy(const FlatWeights& original, const FlatWeights& predicted,
                          const NormStats& stats, float tau = 0.05f);

/// Fraction of components of two already-normalized vectors within tau.
float tolerance_fraction(std::span<const float> a, std::span<const float> b, float tau);

/// What a collaborator ships to the aggregator at the end of the pre-pass:
/// the decoder slice, the normalization stats, and the latent width.
struct DecoderShipment {
    Network decoder;
    NormStats stats;
    std::uint32_t latent_dim = 0;
};

// Shipment file: FWCK checkpoint of the decoder slice, then the stats block
// (P mins then P maxes, f32 LE), then a u32 latent dim.
void write_decoder_shipment(std::ostream& out, const SymmetricAutoencoder& ae);
DecoderShipment read_decoder_shipment(std::istream& in, const std::string& source = "decoder");
void save_decoder_shipment(const std::filesystem::path& path, const SymmetricAutoencoder& ae);
DecoderShipment load_decoder_shipment(const std::filesystem::path& path);

} // namespace fedae
