#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fedae/autoencoder.hpp"
#include "fedae/codec.hpp"
#include "fedae/data.hpp"
#include "fedae/errors.hpp"
#include "fedae/nn.hpp"
#include "fedae/savings.hpp"
#include "fedae/tensor.hpp"

namespace py = pybind11;
using namespace fedae;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor tensor_from_2d(const FloatArray& arr, const char* what) {
    const py::buffer_info info = arr.request();
    if (info.ndim != 2) throw DimensionError(std::string(what) + " must be a 2-D float array");
    Tensor t(static_cast<std::size_t>(info.shape[0]), static_cast<std::size_t>(info.shape[1]));
    std::copy_n(static_cast<const float*>(info.ptr), t.size(), t.data());
    return t;
}

std::vector<float> vector_from_1d(const FloatArray& arr, const char* what) {
    const py::buffer_info info = arr.request();
    if (info.ndim != 1) throw DimensionError(std::string(what) + " must be a 1-D float array");
    const float* p = static_cast<const float*>(info.ptr);
    return {p, p + info.shape[0]};
}

py::array_t<float> array_from_tensor(const Tensor& t) {
    py::array_t<float> arr({t.rows(), t.cols()});
    std::copy_n(t.data(), t.size(), arr.mutable_data());
    return arr;
}

py::array_t<float> array_from_vector(const std::vector<float>& v) {
    // The (ssize_t count) constructor in pybind11 3.0 leaves the stride at 0,
    // so every index would alias element 0; spell the shape out instead.
    return py::array_t<float>(py::array::ShapeContainer{static_cast<py::ssize_t>(v.size())},
                              v.data());
}

TrainConfig train_config(float lr, std::size_t batch_size, std::size_t epochs,
                         const std::string& loss, std::uint64_t shuffle_seed) {
    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.batch_size = batch_size;
    cfg.epochs = epochs;
    cfg.loss = loss_from_name(loss);
    cfg.shuffle_seed = shuffle_seed;
    return cfg;
}

AEConfig ae_config(std::size_t latent_dim, const std::vector<std::size_t>& hidden, float lr,
                   std::size_t batch_size, std::size_t epochs) {
    AEConfig cfg;
    cfg.latent_dim = latent_dim;
    cfg.encoder_hidden = hidden;
    cfg.train.learning_rate = lr;
    cfg.train.batch_size = batch_size;
    cfg.train.epochs = epochs;
    return cfg;
}

WeightDataset dataset_from_rows(const FloatArray& rows) {
    const py::buffer_info info = rows.request();
    if (info.ndim != 2) throw DimensionError("snapshots must be a 2-D float array");
    WeightDataset ds;
    ds.params = static_cast<std::size_t>(info.shape[1]);
    const float* p = static_cast<const float*>(info.ptr);
    ds.snapshots.assign(p, p + info.shape[0] * info.shape[1]);
    return ds;
}

SavingsScenario scenario(double original, double compressed, double rounds, double collabs,
                         double ae_size, double decoders, const std::string& mode,
                         double decoder_size, bool zero_cost) {
    SavingsScenario s;
    s.original_size = original;
    s.compressed_size = compressed;
    s.comm_rounds = rounds;
    s.collabs = collabs;
    s.ae_size = ae_size;
    s.num_decoders = decoders;
    s.mode = decoder_size_mode_from_name(mode);
    s.decoder_size = decoder_size;
    s.zero_cost = zero_cost;
    return s;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Federated-learning simulator with autoencoder-compressed weight updates";

    const py::object base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<CodecError>(m, "CodecError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());
    py::register_exception<ProtocolError>(m, "ProtocolError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());

    py::class_<Network>(m, "Network")
        .def_property_readonly("input_dim", &Network::input_dim)
        .def_property_readonly("output_dim", &Network::output_dim)
        .def_property_readonly("param_count", [](const Network& net) { return param_count(net); })
        .def("__repr__", [](const Network& net) {
            std::string repr = "Network(";
            if (!net.layers.empty()) {
                repr += std::to_string(net.input_dim());
                for (const DenseLayer& layer : net.layers) {
                    repr += " -> " + std::to_string(layer.out);
                }
            }
            return repr + ")";
        });

    m.def(
        "make_network",
        [](const std::vector<std::size_t>& dims, const std::vector<std::string>& activations,
           std::uint64_t seed) {
            std::vector<Activation> acts;
            acts.reserve(activations.size());
            for (const std::string& a : activations) acts.push_back(activation_from_name(a));
            return make_network(dims, acts, seed);
        },
        py::arg("dims"), py::arg("activations"), py::arg("seed") = 0,
        "Seeded MLP; activation names: identity, sigmoid, tanh, relu, softmax");

    m.def(
        "forward",
        [](const Network& net, const FloatArray& x) {
            return array_from_tensor(forward(net, tensor_from_2d(x, "inputs")));
        },
        py::arg("net"), py::arg("inputs"));

    m.def(
        "train",
        [](Network& net, const FloatArray& x, const FloatArray& y, float lr,
           std::size_t batch_size, std::size_t epochs, const std::string& loss,
           std::uint64_t shuffle_seed) {
            const TrainingHistory h =
                train(net, tensor_from_2d(x, "inputs"), tensor_from_2d(y, "targets"),
                      train_config(lr, batch_size, epochs, loss, shuffle_seed));
            py::dict out;
            out["loss"] = array_from_vector(h.loss);
            out["accuracy"] = array_from_vector(h.accuracy);
            return out;
        },
        py::arg("net"), py::arg("inputs"), py::arg("targets"), py::arg("lr") = 0.1f,
        py::arg("batch_size") = 32, py::arg("epochs") = 1, py::arg("loss") = "mse",
        py::arg("shuffle_seed") = 0);

    m.def(
        "evaluate",
        [](const Network& net, const FloatArray& x, const FloatArray& y) {
            const EvalResult r =
                evaluate(net, tensor_from_2d(x, "inputs"), tensor_from_2d(y, "targets"));
            return py::make_tuple(r.loss, r.accuracy);
        },
        py::arg("net"), py::arg("inputs"), py::arg("targets"),
        "Returns (loss, argmax accuracy); loss kind inferred from the final activation");

    m.def(
        "flatten", [](const Network& net) { return array_from_vector(flatten(net).values); },
        py::arg("net"));

    m.def(
        "load_weights",
        [](Network& net, const FloatArray& values) {
            FlatWeights flat;
            flat.values = vector_from_1d(values, "weights");
            load_weights(net, flat);
        },
        py::arg("net"), py::arg("values"));

    py::class_<SymmetricAutoencoder>(m, "Autoencoder")
        .def_property_readonly("input_dim", &SymmetricAutoencoder::input_dim)
        .def_property_readonly("latent_dim", &SymmetricAutoencoder::latent_dim)
        .def_property_readonly("param_count",
                               [](const SymmetricAutoencoder& ae) { return param_count(ae.net); })
        .def("__repr__", [](const SymmetricAutoencoder& ae) {
            return "Autoencoder(P=" + std::to_string(ae.input_dim()) +
                   ", L=" + std::to_string(ae.latent_dim()) + ")";
        });

    m.def(
        "build_autoencoder",
        [](std::size_t params, std::size_t latent_dim, const std::vector<std::size_t>& hidden,
           std::uint64_t seed, float lr, std::size_t batch_size, std::size_t epochs) {
            return build_ae(params, ae_config(latent_dim, hidden, lr, batch_size, epochs), seed);
        },
        py::arg("params"), py::arg("latent_dim") = 32,
        py::arg("hidden") = std::vector<std::size_t>{}, py::arg("seed") = 0,
        py::arg("lr") = 0.05f, py::arg("batch_size") = 4, py::arg("epochs") = 400);

    m.def(
        "autoencoder_param_count",
        [](std::size_t params, std::size_t latent_dim, const std::vector<std::size_t>& hidden) {
            return ae_param_count(params, ae_config(latent_dim, hidden, 0.05f, 4, 1));
        },
        py::arg("params"), py::arg("latent_dim") = 32,
        py::arg("hidden") = std::vector<std::size_t>{});

    m.def(
        "train_autoencoder",
        [](SymmetricAutoencoder& ae, const FloatArray& snapshots, float tau) {
            const AEHistory h = train_ae(ae, dataset_from_rows(snapshots), tau);
            py::dict out;
            out["initial_loss"] = h.initial_loss;
            out["loss"] = array_from_vector(h.loss);
            out["recreation_accuracy"] = array_from_vector(h.recreation_accuracy);
            out["holdout_loss"] = array_from_vector(h.holdout_loss);
            out["holdout_recreation_accuracy"] = array_from_vector(h.holdout_recreation_accuracy);
            out["holdout_count"] = h.holdout_count;
            return out;
        },
        py::arg("ae"), py::arg("snapshots"), py::arg("tau") = 0.05f,
        "Fits the autoencoder to reproduce the given S x P snapshot rows");

    m.def(
        "encode_weights",
        [](const SymmetricAutoencoder& ae, const FloatArray& weights) {
            FlatWeights w;
            w.values = vector_from_1d(weights, "weights");
            return array_from_vector(encode(ae, normalize(w, ae.stats)).values);
        },
        py::arg("ae"), py::arg("weights"),
        "normalize + encode: the latent vector a collaborator would transmit");

    m.def(
        "decode_latent",
        [](const SymmetricAutoencoder& ae, const FloatArray& latent) {
            LatentCode code;
            code.values = vector_from_1d(latent, "latent");
            return array_from_vector(denormalize(decode(ae, code), ae.stats).values);
        },
        py::arg("ae"), py::arg("latent"),
        "decode + denormalize: the weight vector the aggregator reconstructs");

    m.def("compression_ratio", &compression_ratio, py::arg("params"), py::arg("latent_dim"));

    m.def(
        "gen_blobs",
        [](std::size_t n, std::size_t d, std::size_t k, float spread, std::uint64_t seed) {
            const LabeledDataset ds = gen_blobs(n, d, k, spread, seed);
            return py::make_tuple(array_from_tensor(ds.inputs), array_from_tensor(ds.targets));
        },
        py::arg("n"), py::arg("d"), py::arg("k"), py::arg("spread") = 0.1f, py::arg("seed") = 0,
        "Seeded Gaussian clusters; returns (inputs, one-hot targets)");

    m.def(
        "decoder_cost",
        [](double original, double compressed, double rounds, double collabs, double ae_size,
           double decoders, const std::string& mode, double decoder_size, bool zero_cost) {
            return decoder_cost(scenario(original, compressed, rounds, collabs, ae_size, decoders,
                                         mode, decoder_size, zero_cost));
        },
        py::arg("original"), py::arg("compressed"), py::arg("rounds") = 1.0,
        py::arg("collabs") = 1.0, py::arg("ae_size") = 0.0, py::arg("decoders") = 1.0,
        py::arg("mode") = "half_ae", py::arg("decoder_size") = 0.0, py::arg("zero_cost") = false);

    m.def(
        "savings_ratio",
        [](double original, double compressed, double rounds, double collabs, double ae_size,
           double decoders, const std::string& mode, double decoder_size, bool zero_cost) {
            return savings_ratio(scenario(original, compressed, rounds, collabs, ae_size, decoders,
                                          mode, decoder_size, zero_cost));
        },
        py::arg("original"), py::arg("compressed"), py::arg("rounds") = 1.0,
        py::arg("collabs") = 1.0, py::arg("ae_size") = 0.0, py::arg("decoders") = 1.0,
        py::arg("mode") = "half_ae", py::arg("decoder_size") = 0.0, py::arg("zero_cost") = false);

    m.def(
        "break_even_rounds",
        [](double original, double compressed, double collabs, double ae_size, double decoders,
           const std::string& mode, double decoder_size) {
            return break_even_rounds(
                scenario(original, compressed, 1.0, collabs, ae_size, decoders, mode, decoder_size,
                         false));
        },
        py::arg("original"), py::arg("compressed"), py::arg("collabs") = 1.0,
        py::arg("ae_size") = 0.0, py::arg("decoders") = 1.0, py::arg("mode") = "half_ae",
        py::arg("decoder_size") = 0.0);

    m.def(
        "break_even_collaborators",
        [](double original, double compressed, double rounds, double ae_size, double decoders,
           const std::string& mode, double decoder_size) {
            return break_even_collaborators(
                scenario(original, compressed, rounds, 1.0, ae_size, decoders, mode, decoder_size,
                         false));
        },
        py::arg("original"), py::arg("compressed"), py::arg("rounds") = 1.0,
        py::arg("ae_size") = 0.0, py::arg("decoders") = 1.0, py::arg("mode") = "half_ae",
        py::arg("decoder_size") = 0.0);
}
