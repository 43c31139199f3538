#include "fedae/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fedae/binio.hpp"
#include "fedae/errors.hpp"
#include "fedae/rng.hpp"

namespace fedae {

namespace {

constexpr float kLogFloor = 1e-12f;

float sigmoid(float x) {
    if (x >= 0.0f) return 1.0f / (1.0f + std::exp(-x));
    const float e = std::exp(x);
    return e / (1.0f + e);
}

void apply_activation(Activation act, std::span<float> row) {
    switch (act) {
        case Activation::identity:
            break;
        case Activation::sigmoid:
            for (float& v : row) v = sigmoid(v);
            break;
        case Activation::tanh:
            for (float& v : row) v = std::tanh(v);
            break;
        case Activation::relu:
            for (float& v : row) v = v > 0.0f ? v : 0.0f;
            break;
        case Activation::softmax: {
            float mx = row[0];
            for (float v : row) mx = std::max(mx, v);
            float sum = 0.0f;
            for (float& v : row) {
                v = std::exp(v - mx);
                sum += v;
            }
            for (float& v : row) v /= sum;
            break;
        }
    }
}

// Derivative of an elementwise activation expressed through its output value.
float activation_derivative(Activation act, float a) {
    switch (act) {
        case Activation::identity: return 1.0f;
        case Activation::sigmoid: return a * (1.0f - a);
        case Activation::tanh: return 1.0f - a * a;
        case Activation::relu: return a > 0.0f ? 1.0f : 0.0f;
        case Activation::softmax: break; // handled with the full Jacobian
    }
    return 0.0f;
}

Tensor layer_forward(const DenseLayer& layer, const Tensor& input, std::size_t layer_index) {
    if (input.cols() != layer.in) {
        std::ostringstream msg;
        msg << "layer " << layer_index << " expects input dim " << layer.in
            << ", got " << input.cols();
        throw DimensionError(msg.str());
    }
    const std::size_t batch = input.rows();
    Tensor out(batch, layer.out);
    for (std::size_t b = 0; b < batch; ++b) {
        const float* x = input.data() + b * layer.in;
        float* y = out.data() + b * layer.out;
        for (std::size_t j = 0; j < layer.out; ++j) {
            const float* w = layer.weights.data() + j * layer.in;
            float acc = layer.bias[j];
            for (std::size_t i = 0; i < layer.in; ++i) acc += w[i] * x[i];
            y[j] = acc;
        }
        apply_activation(layer.activation, out.row_span(b));
    }
    return out;
}

std::size_t argmax_row(std::span<const float> row) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < row.size(); ++i) {
        if (row[i] > row[best]) best = i; // strict: ties keep the lowest index
    }
    return best;
}

void check_same_shape(const Tensor& pred, const Tensor& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        std::ostringstream msg;
        msg << "prediction " << pred.rows() << "x" << pred.cols()
            << " vs target " << target.rows() << "x" << target.cols();
        throw DimensionError(msg.str());
    }
}

struct BackpropResult {
    std::vector<LayerGrads> grads;
    float batch_loss = 0.0f;
};

BackpropResult backprop(const Network& net, const Tensor& batch,
                        const Tensor& targets, Loss kind) {
    const std::size_t n_layers = net.layers.size();
    const std::size_t B = batch.rows();

    // forward pass keeping every post-activation
    std::vector<Tensor> acts;
    acts.reserve(n_layers + 1);
    acts.push_back(batch);
    for (std::size_t l = 0; l < n_layers; ++l) {
        acts.push_back(layer_forward(net.layers[l], acts.back(), l));
    }
    const Tensor& out = acts.back();
    check_same_shape(out, targets);

    BackpropResult result;
    result.batch_loss = loss_value(out, targets, kind);
    result.grads.resize(n_layers);

    const float inv_b = 1.0f / static_cast<float>(B);
    const std::size_t out_dim = out.cols();
    const bool softmax_ce = kind == Loss::cross_entropy &&
                            net.layers.back().activation == Activation::softmax;

    // delta = dL/d(pre-activation) of the current layer
    Tensor delta(B, out_dim);
    for (std::size_t b = 0; b < B; ++b) {
        const float* p = out.data() + b * out_dim;
        const float* t = targets.data() + b * out_dim;
        float* d = delta.data() + b * out_dim;
        if (softmax_ce) {
            // softmax + cross-entropy collapse to p - t
            for (std::size_t k = 0; k < out_dim; ++k) d[k] = (p[k] - t[k]) * inv_b;
        } else {
            std::vector<float> gbuf(out_dim);
            for (std::size_t k = 0; k < out_dim; ++k) {
                gbuf[k] = kind == Loss::mse
                              ? 2.0f * (p[k] - t[k]) * inv_b
                              : -t[k] / std::max(p[k], kLogFloor) * inv_b;
            }
            if (net.layers.back().activation == Activation::softmax) {
                float dot = 0.0f;
                for (std::size_t k = 0; k < out_dim; ++k) dot += gbuf[k] * p[k];
                for (std::size_t k = 0; k < out_dim; ++k) d[k] = p[k] * (gbuf[k] - dot);
            } else {
                for (std::size_t k = 0; k < out_dim; ++k) {
                    d[k] = gbuf[k] * activation_derivative(net.layers.back().activation, p[k]);
                }
            }
        }
    }

    for (std::size_t l = n_layers; l-- > 0;) {
        const DenseLayer& layer = net.layers[l];
        const Tensor& input = acts[l];
        LayerGrads& g = result.grads[l];
        g.weights.assign(layer.weights.size(), 0.0f);
        g.bias.assign(layer.bias.size(), 0.0f);

        for (std::size_t b = 0; b < B; ++b) {
            const float* d = delta.data() + b * layer.out;
            const float* x = input.data() + b * layer.in;
            for (std::size_t j = 0; j < layer.out; ++j) {
                const float dj = d[j];
                if (dj == 0.0f) continue;
                float* gw = g.weights.data() + j * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) gw[i] += dj * x[i];
                g.bias[j] += dj;
            }
        }

        if (l > 0) {
            // propagate to the previous layer's post-activation, then through
            // its elementwise derivative
            const DenseLayer& prev = net.layers[l - 1];
            Tensor next_delta(B, layer.in);
            for (std::size_t b = 0; b < B; ++b) {
                const float* d = delta.data() + b * layer.out;
                float* nd = next_delta.data() + b * layer.in;
                for (std::size_t j = 0; j < layer.out; ++j) {
                    const float dj = d[j];
                    if (dj == 0.0f) continue;
                    const float* w = layer.weights.data() + j * layer.in;
                    for (std::size_t i = 0; i < layer.in; ++i) nd[i] += dj * w[i];
                }
                const float* a = input.data() + b * layer.in;
                if (prev.activation == Activation::softmax) {
                    throw ConfigError("softmax is only supported on the final layer");
                }
                for (std::size_t i = 0; i < layer.in; ++i) {
                    nd[i] *= activation_derivative(prev.activation, a[i]);
                }
            }
            delta = std::move(next_delta);
        }
    }

    for (std::size_t l = 0; l < n_layers; ++l) {
        const LayerGrads& g = result.grads[l];
        const bool ok = std::all_of(g.weights.begin(), g.weights.end(),
                                    [](float v) { return std::isfinite(v); }) &&
                        std::all_of(g.bias.begin(), g.bias.end(),
                                    [](float v) { return std::isfinite(v); });
        if (!ok) {
            throw NumericError("non-finite gradient in layer " + std::to_string(l));
        }
    }
    return result;
}

} // namespace

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
        case Activation::softmax: return "softmax";
    }
    return "?";
}

Activation activation_from_name(const std::string& name) {
    for (Activation a : {Activation::identity, Activation::sigmoid, Activation::tanh,
                         Activation::relu, Activation::softmax}) {
        if (name == activation_name(a)) return a;
    }
    throw ConfigError("unknown activation \"" + name + "\"");
}

const char* loss_name(Loss l) {
    return l == Loss::mse ? "mse" : "cross_entropy";
}

Loss loss_from_name(const std::string& name) {
    if (name == "mse") return Loss::mse;
    if (name == "cross_entropy") return Loss::cross_entropy;
    throw ConfigError("unknown loss \"" + name + "\"");
}

Network make_network(const std::vector<std::size_t>& dims,
                     const std::vector<Activation>& activations,
                     std::uint64_t seed) {
    if (dims.size() < 2) throw ConfigError("a network needs at least one layer");
    if (activations.size() != dims.size() - 1) {
        throw ConfigError("expected one activation per layer");
    }
    for (std::size_t d : dims) {
        if (d == 0) throw ConfigError("layer dims must be positive");
    }
    for (std::size_t l = 0; l + 1 < activations.size(); ++l) {
        if (activations[l] == Activation::softmax) {
            throw ConfigError("softmax is only supported on the final layer");
        }
    }

    Network net;
    net.rng_seed = seed;
    net.layers.resize(dims.size() - 1);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        DenseLayer& layer = net.layers[l];
        layer.in = dims[l];
        layer.out = dims[l + 1];
        layer.activation = activations[l];
        layer.weights.resize(layer.out * layer.in);
        layer.bias.assign(layer.out, 0.0f);
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        Rng rng(derive_seed(seed, l));
        for (float& w : layer.weights) w = static_cast<float>(rng.uniform(-limit, limit));
    }
    return net;
}

std::uint64_t param_count(const Network& net) {
    std::uint64_t total = 0;
    for (const DenseLayer& layer : net.layers) total += layer.param_count();
    return total;
}

Tensor forward(const Network& net, const Tensor& batch) {
    return forward_slice(net, batch, 0, net.layers.size());
}

Tensor forward_slice(const Network& net, const Tensor& batch,
                     std::size_t first, std::size_t last) {
    if (first > last || last > net.layers.size()) {
        throw DimensionError("invalid layer range");
    }
    Tensor a = batch;
    for (std::size_t l = first; l < last; ++l) {
        a = layer_forward(net.layers[l], a, l);
    }
    return a;
}

float loss_value(const Tensor& pred, const Tensor& target, Loss kind) {
    check_same_shape(pred, target);
    const std::size_t B = pred.rows();
    const std::size_t D = pred.cols();
    double total = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        const float* p = pred.data() + b * D;
        const float* t = target.data() + b * D;
        double row = 0.0;
        if (kind == Loss::mse) {
            for (std::size_t k = 0; k < D; ++k) {
                const double d = static_cast<double>(p[k]) - static_cast<double>(t[k]);
                row += d * d;
            }
        } else {
            for (std::size_t k = 0; k < D; ++k) {
                if (t[k] != 0.0f) row -= t[k] * std::log(std::max(p[k], kLogFloor));
            }
        }
        total += row;
    }
    return static_cast<float>(total / static_cast<double>(B));
}

std::vector<LayerGrads> gradients(const Network& net, const Tensor& batch,
                                  const Tensor& targets, Loss kind) {
    return backprop(net, batch, targets, kind).grads;
}

float train_step(Network& net, const Tensor& batch, const Tensor& targets,
                 const TrainConfig& cfg) {
    BackpropResult r = backprop(net, batch, targets, cfg.loss);
    const float lr = cfg.learning_rate;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        DenseLayer& layer = net.layers[l];
        const LayerGrads& g = r.grads[l];
        for (std::size_t i = 0; i < layer.weights.size(); ++i) layer.weights[i] -= lr * g.weights[i];
        for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= lr * g.bias[i];
    }
    return r.batch_loss;
}

TrainingHistory train(Network& net, const Tensor& inputs, const Tensor& targets,
                      const TrainConfig& cfg, const EpochHook& hook, const BatchHook& batch_hook) {
    if (inputs.rows() != targets.rows()) {
        throw DimensionError("inputs and targets row counts differ");
    }
    const std::size_t n = inputs.rows();
    if (n == 0) throw ConfigError("empty training set");
    if (cfg.epochs == 0) throw ConfigError("epochs must be >= 1");
    if (cfg.batch_size == 0 || cfg.batch_size > n) {
        throw ConfigError("batch_size must be in [1, dataset size]");
    }

    TrainingHistory history;
    history.loss.reserve(cfg.epochs);
    history.accuracy.reserve(cfg.epochs);

    std::vector<std::size_t> order(n);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(cfg.shuffle_seed, epoch));
        rng.shuffle(order);

        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, n - start);
            Tensor batch(count, inputs.cols());
            Tensor batch_targets(count, targets.cols());
            for (std::size_t r = 0; r < count; ++r) {
                const std::size_t src = order[start + r];
                std::copy_n(inputs.data() + src * inputs.cols(), inputs.cols(),
                            batch.data() + r * inputs.cols());
                std::copy_n(targets.data() + src * targets.cols(), targets.cols(),
                            batch_targets.data() + r * targets.cols());
            }
            train_step(net, batch, batch_targets, cfg);
            if (batch_hook) batch_hook(epoch, batch_index);
            ++batch_index;
        }

        if (hook) hook(epoch);
        const EvalResult eval = evaluate(net, inputs, targets, cfg.loss);
        history.loss.push_back(eval.loss);
        history.accuracy.push_back(eval.accuracy);
    }
    return history;
}

EvalResult evaluate(const Network& net, const Tensor& inputs, const Tensor& targets, Loss kind) {
    if (inputs.rows() == 0) throw ConfigError("cannot evaluate an empty dataset");
    if (inputs.rows() != targets.rows()) {
        throw DimensionError("inputs and targets row counts differ");
    }
    const Tensor pred = forward(net, inputs);
    check_same_shape(pred, targets);

    std::size_t hits = 0;
    for (std::size_t b = 0; b < pred.rows(); ++b) {
        if (argmax_row(pred.row_span(b)) == argmax_row(targets.row_span(b))) ++hits;
    }
    EvalResult result;
    result.loss = loss_value(pred, targets, kind);
    result.accuracy = static_cast<float>(hits) / static_cast<float>(pred.rows());
    return result;
}

EvalResult evaluate(const Network& net, const Tensor& inputs, const Tensor& targets) {
    const Loss kind = !net.layers.empty() &&
                              net.layers.back().activation == Activation::softmax
                          ? Loss::cross_entropy
                          : Loss::mse;
    return evaluate(net, inputs, targets, kind);
}

void write_checkpoint(std::ostream& out, const Network& net) {
    BinaryWriter w(out);
    w.magic("FWCK");
    w.u16(1);
    w.u16(static_cast<std::uint16_t>(net.layers.size()));
    for (const DenseLayer& layer : net.layers) {
        w.u32(static_cast<std::uint32_t>(layer.in));
        w.u32(static_cast<std::uint32_t>(layer.out));
        w.u8(static_cast<std::uint8_t>(layer.activation));
    }
    for (const DenseLayer& layer : net.layers) {
        w.f32_block(layer.weights);
        w.f32_block(layer.bias);
    }
}

Network read_checkpoint(std::istream& in, const std::string& source) {
    BinaryReader r(in, source);
    r.expect_magic("FWCK");
    const std::uint16_t version = r.u16();
    if (version != 1) r.fail("unsupported version " + std::to_string(version), r.offset() - 2);
    const std::uint16_t n_layers = r.u16();

    Network net;
    net.layers.resize(n_layers);
    for (DenseLayer& layer : net.layers) {
        layer.in = r.u32();
        layer.out = r.u32();
        const std::uint8_t tag = r.u8();
        if (tag > static_cast<std::uint8_t>(Activation::softmax)) {
            r.fail("unknown activation tag " + std::to_string(tag), r.offset() - 1);
        }
        layer.activation = static_cast<Activation>(tag);
        if (layer.in == 0 || layer.out == 0) r.fail("zero layer dimension", r.offset() - 9);
    }
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        if (l > 0 && net.layers[l].in != net.layers[l - 1].out) {
            throw ParseError(source + ": layer " + std::to_string(l) + " input dim " +
                             std::to_string(net.layers[l].in) + " does not match previous output " +
                             std::to_string(net.layers[l - 1].out));
        }
    }
    for (DenseLayer& layer : net.layers) {
        layer.weights.resize(layer.out * layer.in);
        layer.bias.resize(layer.out);
        r.f32_block(layer.weights);
        r.f32_block(layer.bias);
    }
    return net;
}

void save_checkpoint(const std::filesystem::path& path, const Network& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_checkpoint(out, net);
    if (!out) throw IoError("write failed for " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_checkpoint(in, path.filename().string());
}

} // namespace fedae
