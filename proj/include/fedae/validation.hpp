#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "fedae/autoencoder.hpp"
#include "fedae/codec.hpp"
#include "fedae/data.hpp"

namespace fedae {

struct ValidationRow {
    std::size_t epoch = 0;  // snapshot index, in capture order
    float orig_loss = 0.0f;
    float orig_acc = 0.0f;
    float pred_loss = 0.0f;
    float pred_acc = 0.0f;
};

struct ValidationSummary {
    float max_acc_delta = 0.0f;
    float mean_acc_delta = 0.0f;
    float max_loss_delta = 0.0f;
    float mean_loss_delta = 0.0f;
};

struct ValidationReport {
    std::vector<ValidationRow> rows;  // one per snapshot
    ValidationSummary summary;
};

struct ReplayOptions {
    /// Skip the autoencoder and replay each snapshot against itself; every
    /// delta is exactly zero. Dry-run mode for pipeline checks.
    bool identity_codec = false;
    std::size_t threads = 1;
};

/// Pushes every stored snapshot through the round trip
/// denormalize(decode(encode(normalize(x)))) and evaluates both the original
/// and the reconstruction in a frozen clone of the model on eval_data. Nothing
/// is trained and no argument is modified. Under identity_codec the
/// autoencoder may be default-constructed; it is never touched.
ValidationReport replay_validation(const WeightDataset& ds, const SymmetricAutoencoder& ae,
                                   const ModelShape& shape, const LabeledDataset& eval_data,
                                   const ReplayOptions& options = {});

struct ValidationThresholds {
    float max_mean_acc_delta = 0.05f;
    float max_max_acc_delta = 0.15f;
};

bool within_thresholds(const ValidationSummary& summary, const ValidationThresholds& t);

/// CSV schema: epoch,orig_loss,orig_acc,pred_loss,pred_acc.
void write_validation_csv(std::ostream& out, const ValidationReport& report);

} // namespace fedae
