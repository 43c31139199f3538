#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedae/tensor.hpp"

namespace fedae {

enum class Activation : std::uint8_t {
    identity = 0,
    sigmoid = 1,
    tanh = 2,
    relu = 3,
    softmax = 4,
};

enum class Loss : std::uint8_t {
    mse = 0,
    cross_entropy = 1,
};

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);
const char* loss_name(Loss l);
Loss loss_from_name(const std::string& name);

/// Fully connected layer: y = act(W x + b), W stored row-major [out x in].
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<float> weights;
    std::vector<float> bias;
    Activation activation = Activation::identity;

    std::size_t param_count() const { return out * in + out; }
};

struct Network {
    std::vector<DenseLayer> layers;
    std::uint64_t rng_seed = 0;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out; }
};

/// Builds a seeded MLP. Weights are uniform in +-sqrt(6/(in+out)), biases zero.
/// Softmax is accepted on the final layer only.
Network make_network(const std::vector<std::size_t>& dims,
                     const std::vector<Activation>& activations,
                     std::uint64_t seed);

struct TrainConfig {
    float learning_rate = 0.1f;
    std::size_t batch_size = 32;
    std::size_t epochs = 1;
    Loss loss = Loss::mse;
    std::uint64_t shuffle_seed = 0;
};

std::uint64_t param_count(const Network& net);

Tensor forward(const Network& net, const Tensor& batch);

/// Applies layers [first, last) only. Used for encoder/decoder slices.
Tensor forward_slice(const Network& net, const Tensor& batch,
                     std::size_t first, std::size_t last);

/// mse: mean over batch rows of the squared L2 norm of (pred - target).
/// cross_entropy: mean over batch rows of -sum(target * log(pred)).
float loss_value(const Tensor& pred, const Tensor& target, Loss kind);

struct LayerGrads {
    std::vector<float> weights;
    std::vector<float> bias;
};

/// Backpropagated gradients of the batch loss w.r.t. every parameter.
std::vector<LayerGrads> gradients(const Network& net, const Tensor& batch,
                                  const Tensor& targets, Loss kind);

/// One SGD step over the whole batch. Returns the pre-update batch loss.
float train_step(Network& net, const Tensor& batch, const Tensor& targets,
                 const TrainConfig& cfg);

struct TrainingHistory {
    std::vector<float> loss;      // full-dataset loss at end of each epoch
    std::vector<float> accuracy;  // argmax accuracy at end of each epoch
};

using EpochHook = std::function<void(std::size_t epoch)>;
using BatchHook = std::function<void(std::size_t epoch, std::size_t batch)>;

/// Mini-batch SGD for cfg.epochs epochs. The batch order is reshuffled each
/// epoch from a seed derived from cfg.shuffle_seed and the epoch index, so a
/// run is reproducible from the config alone. The epoch hook fires after the
/// last batch of every epoch, the batch hook after every parameter update.
TrainingHistory train(Network& net, const Tensor& inputs, const Tensor& targets,
                      const TrainConfig& cfg, const EpochHook& hook = {},
                      const BatchHook& batch_hook = {});

struct EvalResult {
    float loss = 0.0f;
    float accuracy = 0.0f;
};

/// Pure metrics pass, no parameter updates. Accuracy compares argmax of
/// prediction and target rows; ties resolve to the lowest index.
EvalResult evaluate(const Network& net, const Tensor& inputs, const Tensor& targets, Loss kind);

/// Loss kind inferred from the final activation (softmax -> cross-entropy).
EvalResult evaluate(const Network& net, const Tensor& inputs, const Tensor& targets);

// FWCK checkpoint: "FWCK", u16 version=1, u16 layer count, then one
// (u32 in, u32 out, u8 activation) header per layer, then per layer the
// row-major weights followed by the bias, all little-endian f32.
void write_checkpoint(std::ostream& out, const Network& net);
Network read_checkpoint(std::istream& in, const std::string& source = "checkpoint");
void save_checkpoint(const std::filesystem::path& path, const Network& net);
Network load_checkpoint(const std::filesystem::path& path);

} // namespace fedae
