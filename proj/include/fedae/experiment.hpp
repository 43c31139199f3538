#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fedae/autoencoder.hpp"
#include "fedae/data.hpp"
#include "fedae/fl.hpp"
#include "fedae/validation.hpp"

namespace fedae {

struct DataConfig {
    std::size_t n = 0;
    std::size_t classes = 0;
    float spread = 0.1f;
    // Either a flat feature dimension or an image geometry, never both.
    std::size_t dim = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<std::size_t> grayscale;  // partitions converted to grayscale

    std::size_t feature_dim() const { return dim != 0 ? dim : height * width * channels; }
};

struct ModelConfig {
    std::vector<std::size_t> hidden;
    Activation hidden_activation = Activation::sigmoid;
    float learning_rate = 0.1f;
    std::size_t batch_size = 32;
};

struct PrepassConfig {
    std::size_t epochs = 0;
    AEConfig ae;  // carries the recreation tolerance tau
};

struct FederatedRunConfig {
    std::size_t rounds = 1;
    std::size_t local_epochs = 1;
    std::size_t collaborators = 1;
    Compression compression = Compression::autoencoder;
    std::uint64_t seed = 0;
};

struct ValidateRunConfig {
    ValidationThresholds thresholds;
    bool identity_codec = false;
};

struct ExperimentConfig {
    DataConfig data;
    ModelConfig model;
    PrepassConfig prepass;
    FederatedRunConfig federated;
    ValidateRunConfig validate;
    std::filesystem::path output_dir = "out";
};

/// Parses and validates the JSON config document. Unknown keys and type
/// mismatches are rejected with the offending path in the message.
ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunOptions {
    std::size_t threads = 1;
};

// Artifact paths under the config's output directory.
std::filesystem::path partition_path(const ExperimentConfig& cfg, std::size_t i);
std::filesystem::path weights_log_path(const ExperimentConfig& cfg, std::size_t i);
std::filesystem::path decoder_path(const ExperimentConfig& cfg, std::size_t i);
std::filesystem::path ae_checkpoint_path(const ExperimentConfig& cfg, std::size_t i);

/// Generates the synthetic task, partitions it across collaborators, applies
/// the configured grayscale transforms, and writes one FWDA file per
/// partition.
void cmd_gen_data(const ExperimentConfig& cfg, const RunOptions& opt = {});

/// Runs the pre-pass round over the generated partitions and writes each
/// collaborator's weight log, decoder shipment, autoencoder checkpoint, and a
/// combined training-history CSV.
void cmd_prepass(const ExperimentConfig& cfg, const RunOptions& opt = {});

/// Runs the federated rounds (loading pre-pass artifacts when compression is
/// on) and writes rounds.csv plus summary.json.
void cmd_federate(const ExperimentConfig& cfg, const RunOptions& opt = {});

/// Replays every collaborator's weight log through its autoencoder and writes
/// per-collaborator CSVs plus summary.json. Returns false when any
/// collaborator misses the configured thresholds.
bool cmd_validate(const ExperimentConfig& cfg, const RunOptions& opt = {});

} // namespace fedae
