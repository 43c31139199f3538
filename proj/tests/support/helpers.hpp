#pragma once

// Shared test utilities. The numeric helpers here are deliberately written in
// double precision from first principles so they can serve as independent
// oracles for the float32 engine under test.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fedae/codec.hpp"
#include "fedae/nn.hpp"
#include "fedae/rng.hpp"
#include "fedae/tensor.hpp"

namespace testsupport {

// ---------------------------------------------------------------------------
// Double-precision reference network
// ---------------------------------------------------------------------------

struct RefLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;  // row-major out x in
    std::vector<double> bias;
    fedae::Activation activation = fedae::Activation::identity;
};

struct RefNet {
    std::vector<RefLayer> layers;
};

inline RefNet ref_from(const fedae::Network& net) {
    RefNet ref;
    ref.layers.reserve(net.layers.size());
    for (const fedae::DenseLayer& l : net.layers) {
        RefLayer r;
        r.in = l.in;
        r.out = l.out;
        r.activation = l.activation;
        r.weights.assign(l.weights.begin(), l.weights.end());
        r.bias.assign(l.bias.begin(), l.bias.end());
        ref.layers.push_back(std::move(r));
    }
    return ref;
}

/// Parameters in flattening order: per layer the row-major weights, then the
/// bias. Matches the order used by the engine's weight codec.
inline std::vector<double> ref_params(const RefNet& net) {
    std::vector<double> flat;
    for (const RefLayer& l : net.layers) {
        flat.insert(flat.end(), l.weights.begin(), l.weights.end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
}

inline void ref_assign(RefNet& net, const std::vector<double>& flat) {
    std::size_t pos = 0;
    for (RefLayer& l : net.layers) {
        for (double& w : l.weights) w = flat[pos++];
        for (double& b : l.bias) b = flat[pos++];
    }
}

inline void ref_activate(fedae::Activation act, std::vector<double>& row) {
    switch (act) {
        case fedae::Activation::identity:
            break;
        case fedae::Activation::sigmoid:
            for (double& v : row) {
                v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                             : std::exp(v) / (1.0 + std::exp(v));
            }
            break;
        case fedae::Activation::tanh:
            for (double& v : row) v = std::tanh(v);
            break;
        case fedae::Activation::relu:
            for (double& v : row) v = v > 0.0 ? v : 0.0;
            break;
        case fedae::Activation::softmax: {
            double mx = row[0];
            for (double v : row) mx = std::max(mx, v);
            double sum = 0.0;
            for (double& v : row) {
                v = std::exp(v - mx);
                sum += v;
            }
            for (double& v : row) v /= sum;
            break;
        }
    }
}

inline std::vector<double> ref_forward_row(const RefNet& net, std::vector<double> x) {
    for (const RefLayer& l : net.layers) {
        std::vector<double> y(l.out);
        for (std::size_t j = 0; j < l.out; ++j) {
            double acc = l.bias[j];
            for (std::size_t i = 0; i < l.in; ++i) acc += l.weights[j * l.in + i] * x[i];
            y[j] = acc;
        }
        ref_activate(l.activation, y);
        x = std::move(y);
    }
    return x;
}

/// Batch loss with the engine's conventions: mse sums squared component
/// differences per row, cross-entropy sums -t*log(max(p, 1e-12)) per row, and
/// both average over rows only.
inline double ref_loss(const RefNet& net, const fedae::Tensor& inputs,
                       const fedae::Tensor& targets, fedae::Loss kind) {
    const std::size_t B = inputs.rows();
    const std::size_t D = inputs.cols();
    const std::size_t K = targets.cols();
    double total = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        std::vector<double> x(D);
        for (std::size_t i = 0; i < D; ++i) x[i] = inputs(b, i);
        const std::vector<double> p = ref_forward_row(net, std::move(x));
        double row = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double t = targets(b, k);
            if (kind == fedae::Loss::mse) {
                const double d = p[k] - t;
                row += d * d;
            } else if (t != 0.0) {
                row -= t * std::log(std::max(p[k], 1e-12));
            }
        }
        total += row;
    }
    return total / static_cast<double>(B);
}

/// Central finite differences of the batch loss, fully in double precision.
inline std::vector<double> fd_gradient(const fedae::Network& net, const fedae::Tensor& inputs,
                                       const fedae::Tensor& targets, fedae::Loss kind,
                                       double eps = 1e-3) {
    RefNet ref = ref_from(net);
    std::vector<double> theta = ref_params(ref);
    std::vector<double> grad(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double saved = theta[i];
        theta[i] = saved + eps;
        ref_assign(ref, theta);
        const double up = ref_loss(ref, inputs, targets, kind);
        theta[i] = saved - eps;
        ref_assign(ref, theta);
        const double down = ref_loss(ref, inputs, targets, kind);
        theta[i] = saved;
        grad[i] = (up - down) / (2.0 * eps);
    }
    ref_assign(ref, theta);
    return grad;
}

/// Engine gradients in the same flattening order as ref_params.
inline std::vector<double> flat_gradients(const fedae::Network& net, const fedae::Tensor& inputs,
                                          const fedae::Tensor& targets, fedae::Loss kind) {
    std::vector<double> flat;
    for (const fedae::LayerGrads& g : fedae::gradients(net, inputs, targets, kind)) {
        flat.insert(flat.end(), g.weights.begin(), g.weights.end());
        flat.insert(flat.end(), g.bias.begin(), g.bias.end());
    }
    return flat;
}

/// All components agree within a relative tolerance (absolute floor for the
/// near-zero case). Returns the number of failing components.
inline std::size_t count_gradient_mismatches(const std::vector<double>& analytic,
                                             const std::vector<double>& reference,
                                             double rel = 1e-3, double abs_floor = 1e-6) {
    std::size_t bad = 0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic[i];
        const double r = reference[i];
        const double tol = std::max(rel * std::max(std::abs(a), std::abs(r)), abs_floor);
        if (std::abs(a - r) > tol) ++bad;
    }
    return bad;
}

// ---------------------------------------------------------------------------
// Random fixtures
// ---------------------------------------------------------------------------

inline fedae::Tensor random_tensor(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                   double lo = -1.0, double hi = 1.0) {
    fedae::Rng rng(seed);
    fedae::Tensor t(rows, cols);
    for (float& v : t.values()) v = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

inline fedae::Tensor one_hot_rows(std::size_t rows, std::size_t classes, std::uint64_t seed) {
    fedae::Rng rng(seed);
    fedae::Tensor t(rows, classes);
    for (std::size_t r = 0; r < rows; ++r) {
        t(r, static_cast<std::size_t>(rng.uniform_index(classes))) = 1.0f;
    }
    return t;
}

// ---------------------------------------------------------------------------
// Filesystem helpers
// ---------------------------------------------------------------------------

/// Fresh per-test scratch directory, wiped on creation and on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& name)
        : path_(std::filesystem::temp_directory_path() / ("fedae-test-" + name)) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

private:
    std::filesystem::path path_;
};

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) {
        if (c == '\n') ++n;
    }
    return n;
}

/// Runs a shell command and returns its exit code (Linux wait semantics).
inline int run_cmd(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WEXITSTATUS(status);
}

} // namespace testsupport
