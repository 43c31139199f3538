#include "fedae/validation.hpp"

#include <cmath>
#include <ostream>

#include "fedae/errors.hpp"
#include "fedae/parallel.hpp"
#include "fedae/textio.hpp"

namespace fedae {

ValidationReport replay_validation(const WeightDataset& ds, const SymmetricAutoencoder& ae,
                                   const ModelShape& shape, const LabeledDataset& eval_data,
                                   const ReplayOptions& options) {
    const std::size_t snapshots = ds.count();
    if (snapshots == 0) throw ConfigError("weight dataset has no snapshots to replay");
    if (ds.params != shape.total_params()) {
        throw CodecError("dataset rows carry " + std::to_string(ds.params) +
                         " parameters, model shape has " + std::to_string(shape.total_params()));
    }
    if (eval_data.dim() != shape.layers.front().in ||
        eval_data.classes() != shape.layers.back().out) {
        throw CodecError("evaluation data does not match the model shape");
    }

    NormStats stats;
    if (!options.identity_codec) {
        if (ae.input_dim() != ds.params) {
            throw CodecError("autoencoder reconstructs " + std::to_string(ae.input_dim()) +
                             " parameters, dataset rows carry " + std::to_string(ds.params));
        }
        if (!ae.stats.empty()) {
            stats = ae.stats;
        } else if (ds.stats.has_value()) {
            stats = *ds.stats;
        } else {
            stats = fit_norm(ds);
        }
    }

    ValidationReport report;
    report.rows.resize(snapshots);
    parallel_for_index(snapshots, options.threads, [&](std::size_t i) {
        FlatWeights original;
        const auto row = ds.row(i);
        original.values.assign(row.begin(), row.end());

        // Frozen clone: weights are installed, never trained, so "an epoch
        // with everything frozen" is exactly one metrics pass.
        Network clone = shape.instantiate(0);
        load_weights(clone, original);
        const EvalResult orig = evaluate(clone, eval_data.inputs, eval_data.targets);

        EvalResult pred = orig;
        if (!options.identity_codec) {
            const LatentCode code = encode(ae, normalize(original, stats));
            const FlatWeights restored = denormalize(decode(ae, code), stats);
            load_weights(clone, restored);
            pred = evaluate(clone, eval_data.inputs, eval_data.targets);
        }
        report.rows[i] = {i, orig.loss, orig.accuracy, pred.loss, pred.accuracy};
    });

    double acc_sum = 0.0;
    double loss_sum = 0.0;
    ValidationSummary& s = report.summary;
    for (const ValidationRow& r : report.rows) {
        const float acc_delta = std::fabs(r.pred_acc - r.orig_acc);
        const float loss_delta = std::fabs(r.pred_loss - r.orig_loss);
        s.max_acc_delta = std::max(s.max_acc_delta, acc_delta);
        s.max_loss_delta = std::max(s.max_loss_delta, loss_delta);
        acc_sum += acc_delta;
        loss_sum += loss_delta;
    }
    s.mean_acc_delta = static_cast<float>(acc_sum / static_cast<double>(snapshots));
    s.mean_loss_delta = static_cast<float>(loss_sum / static_cast<double>(snapshots));
    return report;
}

bool within_thresholds(const ValidationSummary& summary, const ValidationThresholds& t) {
    return summary.mean_acc_delta <= t.max_mean_acc_delta &&
           summary.max_acc_delta <= t.max_max_acc_delta;
}

void write_validation_csv(std::ostream& out, const ValidationReport& report) {
    out << "epoch,orig_loss,orig_acc,pred_loss,pred_acc\n";
    for (const ValidationRow& r : report.rows) {
        out << r.epoch << ',' << g9(r.orig_loss) << ',' << g9(r.orig_acc) << ','
            << g9(r.pred_loss) << ',' << g9(r.pred_acc) << '\n';
    }
}

} // namespace fedae
