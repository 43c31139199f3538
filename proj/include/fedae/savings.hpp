#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fedae {

enum class DecoderSizeMode : std::uint8_t {
    half_ae = 0,  // decoder approximated as half the autoencoder
    exact = 1,    // caller supplies the true decoder parameter count
};

const char* decoder_size_mode_name(DecoderSizeMode m);
DecoderSizeMode decoder_size_mode_from_name(const std::string& name);

/// Inputs of the savings-ratio model. All sizes are parameter counts; with a
/// uniform bytes-per-parameter the ratio is dimensionless either way.
struct SavingsScenario {
    double original_size = 0.0;    // O: parameters per uncompressed update
    double compressed_size = 0.0;  // C: latent floats per compressed update
    double comm_rounds = 1.0;      // R
    double collabs = 1.0;          // N
    double ae_size = 0.0;          // full autoencoder parameter count
    double num_decoders = 1.0;     // D
    DecoderSizeMode mode = DecoderSizeMode::half_ae;
    double decoder_size = 0.0;     // used when mode == exact
    bool zero_cost = false;        // what-if switch: ignore the decoder overhead
};

/// One-time overhead of shipping the decoder(s): (ae_size/2)*D in half_ae
/// mode, decoder_size*D in exact mode, 0 when zero_cost is set.
double decoder_cost(const SavingsScenario& s);

/// (O*R*N) / (C*R*N + cost). Accepts O == C so the no-compression case can be
/// inspected; it is then < 1 for any positive cost.
double savings_ratio(const SavingsScenario& s);

/// Smallest R with ratio >= 1: cost / (N * (O - C)). Requires O > C.
double break_even_rounds(const SavingsScenario& s);

/// Smallest N with ratio >= 1: cost / (R * (O - C)). Requires O > C.
double break_even_collaborators(const SavingsScenario& s);

enum class SweepAxis : std::uint8_t { rounds = 0, collabs = 1 };

const char* sweep_axis_name(SweepAxis a);

struct SweepPoint {
    double axis = 0.0;
    double ratio = 0.0;
};

/// Evaluates the ratio along rounds or collaborators, the other inputs held
/// fixed. steps == 1 yields the single point at lo.
std::vector<SweepPoint> sweep(SavingsScenario s, SweepAxis axis, double lo, double hi,
                              std::size_t steps);

/// CSV schema: <axis>,sr  (axis column named "rounds" or "collabs").
void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> table, SweepAxis axis);

} // namespace fedae
