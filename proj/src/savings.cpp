#include "fedae/savings.hpp"

#include <ostream>

#include "fedae/errors.hpp"
#include "fedae/textio.hpp"

namespace fedae {

namespace {

void check_scenario(const SavingsScenario& s) {
    if (!(s.compressed_size >= 1.0)) throw ConfigError("compressed size must be >= 1");
    if (!(s.original_size >= s.compressed_size)) {
        throw ConfigError("original size must be >= compressed size");
    }
    if (!(s.comm_rounds >= 1.0)) throw ConfigError("comm rounds must be >= 1");
    if (!(s.collabs >= 1.0)) throw ConfigError("collaborator count must be >= 1");
    if (!(s.num_decoders >= 1.0)) throw ConfigError("decoder count must be >= 1");
    if (!s.zero_cost) {
        if (s.mode == DecoderSizeMode::half_ae && !(s.ae_size > 0.0)) {
            throw ConfigError("autoencoder size must be positive");
        }
        if (s.mode == DecoderSizeMode::exact && !(s.decoder_size > 0.0)) {
            throw ConfigError("decoder size must be positive in exact mode");
        }
    }
}

void check_compressing(const SavingsScenario& s) {
    if (!(s.original_size > s.compressed_size)) {
        throw ConfigError("break-even is infeasible: original size must exceed compressed size");
    }
}

} // namespace

const char* decoder_size_mode_name(DecoderSizeMode m) {
    switch (m) {
        case DecoderSizeMode::half_ae: return "half_ae";
        case DecoderSizeMode::exact: return "exact";
    }
    throw ConfigError("unknown decoder size mode");
}

DecoderSizeMode decoder_size_mode_from_name(const std::string& name) {
    if (name == "half_ae") return DecoderSizeMode::half_ae;
    if (name == "exact") return DecoderSizeMode::exact;
    throw ConfigError("unknown decoder size mode \"" + name + "\"");
}

double decoder_cost(const SavingsScenario& s) {
    check_scenario(s);
    if (s.zero_cost) return 0.0;
    const double per_decoder =
        s.mode == DecoderSizeMode::half_ae ? s.ae_size / 2.0 : s.decoder_size;
    return per_decoder * s.num_decoders;
}

double savings_ratio(const SavingsScenario& s) {
    const double cost = decoder_cost(s);
    const double traffic = s.comm_rounds * s.collabs;
    return (s.original_size * traffic) / (s.compressed_size * traffic + cost);
}

double break_even_rounds(const SavingsScenario& s) {
    const double cost = decoder_cost(s);
    check_compressing(s);
    return cost / (s.collabs * (s.original_size - s.compressed_size));
}

double break_even_collaborators(const SavingsScenario& s) {
    const double cost = decoder_cost(s);
    check_compressing(s);
    return cost / (s.comm_rounds * (s.original_size - s.compressed_size));
}

const char* sweep_axis_name(SweepAxis a) {
    switch (a) {
        case SweepAxis::rounds: return "rounds";
        case SweepAxis::collabs: return "collabs";
    }
    throw ConfigError("unknown sweep axis");
}

std::vector<SweepPoint> sweep(SavingsScenario s, SweepAxis axis, double lo, double hi,
                              std::size_t steps) {
    if (steps == 0) throw ConfigError("sweep needs at least one step");
    if (!(lo > 0.0) || !(hi >= lo)) throw ConfigError("sweep range must be positive and ordered");

    std::vector<SweepPoint> table;
    table.reserve(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
        const double value = lo + t * (hi - lo);
        (axis == SweepAxis::rounds ? s.comm_rounds : s.collabs) = value;
        table.push_back({value, savings_ratio(s)});
    }
    return table;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> table, SweepAxis axis) {
    out << sweep_axis_name(axis) << ",sr\n";
    for (const SweepPoint& p : table) {
        out << g9(p.axis) << ',' << g9(p.ratio) << '\n';
    }
}

} // namespace fedae
