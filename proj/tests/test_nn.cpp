#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fedae/errors.hpp"
#include "fedae/nn.hpp"
#include "support/helpers.hpp"

using namespace fedae;
using namespace testsupport;

namespace {

Network checked_net(const std::vector<std::size_t>& dims,
                    const std::vector<Activation>& acts, std::uint64_t seed) {
    Network net = make_network(dims, acts, seed);
    REQUIRE(param_count(net) <= 50); // oracle nets stay tiny by design
    return net;
}

/// Asserts that every analytic gradient component matches central finite
/// differences computed by the double-precision reference implementation.
void check_gradients(const Network& net, const Tensor& inputs, const Tensor& targets,
                     Loss kind) {
    const std::vector<double> analytic = flat_gradients(net, inputs, targets, kind);
    const std::vector<double> reference = fd_gradient(net, inputs, targets, kind);
    REQUIRE(analytic.size() == reference.size());
    CHECK(count_gradient_mismatches(analytic, reference, 1e-3, 1e-6) == 0);
}

} // namespace

TEST_CASE("activation and loss names round-trip") {
    for (Activation a : {Activation::identity, Activation::sigmoid, Activation::tanh,
                         Activation::relu, Activation::softmax}) {
        CHECK(activation_from_name(activation_name(a)) == a);
    }
    CHECK_THROWS_AS(activation_from_name("swish"), ConfigError);
    CHECK(loss_from_name("mse") == Loss::mse);
    CHECK(loss_from_name("cross_entropy") == Loss::cross_entropy);
    CHECK_THROWS_AS(loss_from_name("hinge"), ConfigError);
}

TEST_CASE("make_network validates its arguments") {
    CHECK_THROWS_AS(make_network({4}, {}, 0), ConfigError);
    CHECK_THROWS_AS(make_network({4, 2}, {}, 0), ConfigError);
    CHECK_THROWS_AS(make_network({4, 0, 2}, {Activation::tanh, Activation::identity}, 0),
                    ConfigError);
    // softmax anywhere but the final layer is rejected
    CHECK_THROWS_AS(
        make_network({4, 3, 2}, {Activation::softmax, Activation::identity}, 0),
        ConfigError);
}

TEST_CASE("make_network sizes, zero biases, and bounded weights") {
    Network net = make_network({5, 7, 3}, {Activation::tanh, Activation::softmax}, 9);
    CHECK(net.input_dim() == 5);
    CHECK(net.output_dim() == 3);
    CHECK(param_count(net) == 5 * 7 + 7 + 7 * 3 + 3);

    for (const DenseLayer& l : net.layers) {
        const double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
        for (float b : l.bias) CHECK(b == 0.0f);
        for (float w : l.weights) {
            CHECK(std::abs(w) <= limit);
        }
    }

    // same seed reproduces, different seed does not
    Network again = make_network({5, 7, 3}, {Activation::tanh, Activation::softmax}, 9);
    CHECK(net.layers[0].weights == again.layers[0].weights);
    Network other = make_network({5, 7, 3}, {Activation::tanh, Activation::softmax}, 10);
    CHECK(net.layers[0].weights != other.layers[0].weights);
}

TEST_CASE("forward computes an affine map with hand-checked values") {
    Network net;
    DenseLayer layer;
    layer.in = 2;
    layer.out = 2;
    layer.weights = {1.0f, 2.0f, 3.0f, 4.0f}; // rows [1,2] and [3,4]
    layer.bias = {0.5f, -0.5f};
    layer.activation = Activation::identity;
    net.layers.push_back(layer);

    const Tensor out = forward(net, Tensor::row({1.0f, 1.0f}));
    CHECK(out(0, 0) == doctest::Approx(3.5).epsilon(1e-6));
    CHECK(out(0, 1) == doctest::Approx(6.5).epsilon(1e-6));

    net.layers[0].activation = Activation::sigmoid;
    net.layers[0].weights = {1.0f, 0.0f, 0.0f, 1.0f};
    net.layers[0].bias = {0.0f, 0.0f};
    const Tensor s = forward(net, Tensor::row({0.0f, std::log(3.0f)}));
    CHECK(s(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(s(0, 1) == doctest::Approx(0.75).epsilon(1e-6));
}

TEST_CASE("softmax rows are a probability simplex") {
    Network net = make_network({4, 3}, {Activation::softmax}, 1);
    const Tensor out = forward(net, random_tensor(6, 4, 2));
    for (std::size_t r = 0; r < out.rows(); ++r) {
        float sum = 0.0f;
        for (std::size_t c = 0; c < out.cols(); ++c) {
            CHECK(out(r, c) > 0.0f);
            sum += out(r, c);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("forward rejects mismatched input dimensions") {
    Network net = make_network({3, 2}, {Activation::identity}, 0);
    CHECK_THROWS_AS(forward(net, Tensor::row({1.0f, 2.0f})), DimensionError);
}

TEST_CASE("forward_slice composes to the full forward pass") {
    Network net = make_network({3, 5, 2}, {Activation::tanh, Activation::sigmoid}, 4);
    const Tensor x = random_tensor(4, 3, 8);
    const Tensor full = forward(net, x);
    const Tensor mid = forward_slice(net, x, 0, 1);
    const Tensor composed = forward_slice(net, mid, 1, 2);
    for (std::size_t i = 0; i < full.size(); ++i) {
        CHECK(full.values()[i] == composed.values()[i]);
    }
    CHECK_THROWS_AS(forward_slice(net, x, 2, 1), DimensionError);
    CHECK_THROWS_AS(forward_slice(net, x, 0, 3), DimensionError);
}

TEST_CASE("loss values match hand arithmetic") {
    Tensor pred(2, 2, {1.0f, 2.0f, 0.0f, 1.0f});
    Tensor target(2, 2, {0.0f, 0.0f, 0.0f, 0.0f});
    // rows contribute 5 and 1; mean over rows is 3
    CHECK(loss_value(pred, target, Loss::mse) == doctest::Approx(3.0).epsilon(1e-6));

    Tensor p2(1, 2, {0.25f, 0.75f});
    Tensor t2(1, 2, {0.0f, 1.0f});
    CHECK(loss_value(p2, t2, Loss::cross_entropy) ==
          doctest::Approx(-std::log(0.75)).epsilon(1e-6));

    CHECK_THROWS_AS(loss_value(pred, t2, Loss::mse), DimensionError);
}

TEST_CASE("gradients match finite differences: sigmoid into softmax, cross-entropy") {
    Network net = checked_net({3, 4, 2}, {Activation::sigmoid, Activation::softmax}, 21);
    check_gradients(net, random_tensor(5, 3, 22), one_hot_rows(5, 2, 23), Loss::cross_entropy);
}

TEST_CASE("gradients match finite differences: tanh into sigmoid, mse") {
    Network net = checked_net({4, 5, 3}, {Activation::tanh, Activation::sigmoid}, 31);
    check_gradients(net, random_tensor(6, 4, 32), random_tensor(6, 3, 33, 0.0, 1.0), Loss::mse);
}

TEST_CASE("gradients match finite differences: relu into identity, mse") {
    Network net = checked_net({3, 4, 2}, {Activation::relu, Activation::identity}, 41);
    check_gradients(net, random_tensor(5, 3, 42), random_tensor(5, 2, 43), Loss::mse);
}

TEST_CASE("gradients match finite differences: softmax under mse uses the full Jacobian") {
    Network net = checked_net({3, 4, 3}, {Activation::tanh, Activation::softmax}, 51);
    check_gradients(net, random_tensor(5, 3, 52), one_hot_rows(5, 3, 53), Loss::mse);
}

TEST_CASE("gradients match finite differences: cross-entropy without softmax") {
    Network net = checked_net({3, 4, 2}, {Activation::sigmoid, Activation::sigmoid}, 61);
    check_gradients(net, random_tensor(5, 3, 62), one_hot_rows(5, 2, 63), Loss::cross_entropy);
}

TEST_CASE("train_step returns the pre-update loss and descends") {
    Network net = make_network({3, 6, 2}, {Activation::tanh, Activation::sigmoid}, 71);
    const Tensor x = random_tensor(8, 3, 72);
    const Tensor t = random_tensor(8, 2, 73, 0.0, 1.0);

    TrainConfig cfg;
    cfg.learning_rate = 0.1f;
    cfg.loss = Loss::mse;

    const float before = loss_value(forward(net, x), t, Loss::mse);
    const float reported = train_step(net, x, t, cfg);
    CHECK(reported == doctest::Approx(before).epsilon(1e-6));

    float last = before;
    for (int i = 0; i < 20; ++i) last = train_step(net, x, t, cfg);
    CHECK(last < before);
}

TEST_CASE("training solves XOR") {
    Tensor inputs(4, 2, {0, 0, 0, 1, 1, 0, 1, 1});
    Tensor targets(4, 2, {1, 0, 0, 1, 0, 1, 1, 0});

    Network net = make_network({2, 8, 2}, {Activation::sigmoid, Activation::softmax}, 3);
    TrainConfig cfg;
    cfg.learning_rate = 0.5f;
    cfg.batch_size = 4;
    cfg.epochs = 2000;
    cfg.loss = Loss::cross_entropy;
    cfg.shuffle_seed = 1;

    const TrainingHistory h = train(net, inputs, targets, cfg);
    REQUIRE(h.loss.size() == cfg.epochs);
    REQUIRE(h.accuracy.size() == cfg.epochs);
    CHECK(h.accuracy.back() == 1.0f);
    CHECK(h.loss.back() < h.loss.front());
}

TEST_CASE("training is reproducible from config and seed") {
    const Tensor x = random_tensor(32, 4, 81);
    const Tensor t = one_hot_rows(32, 3, 82);
    TrainConfig cfg;
    cfg.learning_rate = 0.2f;
    cfg.batch_size = 8;
    cfg.epochs = 5;
    cfg.loss = Loss::cross_entropy;
    cfg.shuffle_seed = 7;

    Network a = make_network({4, 6, 3}, {Activation::sigmoid, Activation::softmax}, 5);
    Network b = make_network({4, 6, 3}, {Activation::sigmoid, Activation::softmax}, 5);
    const TrainingHistory ha = train(a, x, t, cfg);
    const TrainingHistory hb = train(b, x, t, cfg);
    CHECK(ha.loss == hb.loss);
    CHECK(ha.accuracy == hb.accuracy);
    CHECK(a.layers[0].weights == b.layers[0].weights);

    // a different shuffle seed changes the trajectory
    Network c = make_network({4, 6, 3}, {Activation::sigmoid, Activation::softmax}, 5);
    cfg.shuffle_seed = 8;
    const TrainingHistory hc = train(c, x, t, cfg);
    CHECK(ha.loss != hc.loss);
}

TEST_CASE("training hooks fire per epoch and per batch") {
    const Tensor x = random_tensor(10, 3, 91);
    const Tensor t = one_hot_rows(10, 2, 92);
    TrainConfig cfg;
    cfg.batch_size = 4; // 3 batches per epoch (4+4+2)
    cfg.epochs = 2;
    cfg.loss = Loss::cross_entropy;

    Network net = make_network({3, 4, 2}, {Activation::sigmoid, Activation::softmax}, 6);
    std::size_t epochs_seen = 0;
    std::size_t batches_seen = 0;
    train(
        net, x, t, cfg, [&](std::size_t) { ++epochs_seen; },
        [&](std::size_t, std::size_t) { ++batches_seen; });
    CHECK(epochs_seen == 2);
    CHECK(batches_seen == 6);
}

TEST_CASE("train validates its configuration") {
    const Tensor x = random_tensor(4, 2, 93);
    const Tensor t = one_hot_rows(4, 2, 94);
    Network net = make_network({2, 2}, {Activation::softmax}, 0);

    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(train(net, x, t, cfg), ConfigError);
    cfg.epochs = 1;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(train(net, x, t, cfg), ConfigError);
    cfg.batch_size = 5;
    CHECK_THROWS_AS(train(net, x, t, cfg), ConfigError);
    cfg.batch_size = 4;
    CHECK_THROWS_AS(train(net, Tensor(0, 2), Tensor(0, 2), cfg), ConfigError);
    CHECK_THROWS_AS(train(net, x, one_hot_rows(3, 2, 95), cfg), DimensionError);
}

TEST_CASE("evaluate reports argmax accuracy with low-index tie-breaks") {
    Network net;
    DenseLayer layer;
    layer.in = 2;
    layer.out = 2;
    layer.weights = {1.0f, 0.0f, 0.0f, 1.0f}; // identity map: predictions == inputs
    layer.bias = {0.0f, 0.0f};
    layer.activation = Activation::identity;
    net.layers.push_back(layer);

    Tensor inputs(2, 2, {0.9f, 0.1f, 0.2f, 0.8f});
    Tensor targets(2, 2, {1.0f, 0.0f, 1.0f, 0.0f});
    CHECK(evaluate(net, inputs, targets, Loss::mse).accuracy == 0.5f);

    Tensor tie(1, 2, {0.5f, 0.5f});
    Tensor tie_target(1, 2, {1.0f, 0.0f});
    CHECK(evaluate(net, tie, tie_target, Loss::mse).accuracy == 1.0f);

    CHECK_THROWS_AS(evaluate(net, Tensor(0, 2), Tensor(0, 2), Loss::mse), ConfigError);
}

TEST_CASE("evaluate infers cross-entropy from a softmax head") {
    Network net = make_network({3, 2}, {Activation::softmax}, 2);
    const Tensor x = random_tensor(6, 3, 96);
    const Tensor t = one_hot_rows(6, 2, 97);
    const EvalResult inferred = evaluate(net, x, t);
    const EvalResult explicit_ce = evaluate(net, x, t, Loss::cross_entropy);
    CHECK(inferred.loss == explicit_ce.loss);
    CHECK(inferred.accuracy == explicit_ce.accuracy);
}

TEST_CASE("checkpoints reload bit-exactly") {
    TempDir dir("checkpoint");
    Network net = make_network({4, 6, 3}, {Activation::relu, Activation::softmax}, 12);
    const std::filesystem::path path = dir / "model.fwck";
    save_checkpoint(path, net);
    const Network back = load_checkpoint(path);

    REQUIRE(back.layers.size() == net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        CHECK(back.layers[l].in == net.layers[l].in);
        CHECK(back.layers[l].out == net.layers[l].out);
        CHECK(back.layers[l].activation == net.layers[l].activation);
        CHECK(back.layers[l].weights == net.layers[l].weights);
        CHECK(back.layers[l].bias == net.layers[l].bias);
    }
}

TEST_CASE("malformed checkpoints are rejected with parse errors") {
    Network net = make_network({2, 3, 2}, {Activation::sigmoid, Activation::softmax}, 13);
    std::ostringstream out;
    write_checkpoint(out, net);
    const std::string good = out.str();

    SUBCASE("bad magic") {
        std::string bad = good;
        bad[0] = 'X';
        std::istringstream in(bad);
        CHECK_THROWS_AS(read_checkpoint(in), ParseError);
    }
    SUBCASE("unsupported version") {
        std::string bad = good;
        bad[4] = 2; // version u16 little-endian low byte
        std::istringstream in(bad);
        CHECK_THROWS_AS(read_checkpoint(in), ParseError);
    }
    SUBCASE("truncated payload") {
        std::istringstream in(good.substr(0, good.size() - 3));
        CHECK_THROWS_AS(read_checkpoint(in), ParseError);
    }
    SUBCASE("unknown activation tag") {
        std::string bad = good;
        bad[16] = 9; // layer 0 activation byte (magic 4 + u16 + u16 + u32 + u32)
        std::istringstream in(bad);
        CHECK_THROWS_AS(read_checkpoint(in), ParseError);
    }
    SUBCASE("incompatible layer chain") {
        std::string bad = good;
        bad[17] = 4; // second layer's input dim (was 3): breaks the chain
        std::istringstream in(bad);
        CHECK_THROWS_AS(read_checkpoint(in), ParseError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_checkpoint("/nonexistent/nope.fwck"), IoError);
    }
}
