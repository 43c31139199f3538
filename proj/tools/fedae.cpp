#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedae/errors.hpp"
#include "fedae/experiment.hpp"
#include "fedae/savings.hpp"
#include "fedae/textio.hpp"

namespace {

using nlohmann::json;

struct SavingsArgs {
    double original = 0.0;
    double compressed = 0.0;
    double ae_size = 0.0;
    double decoder_size = 0.0;
    double decoders = 1.0;
    double rounds = 1.0;
    double collabs = 1.0;
    std::string mode = "half_ae";
    std::string break_even;
    std::string sweep_rounds;
    std::string sweep_collabs;
    bool per_collab_decoders = false;
    bool zero_cost = false;
};

struct SweepRange {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t steps = 0;
};

SweepRange parse_sweep_range(const std::string& text, const char* flag) {
    SweepRange r;
    if (std::sscanf(text.c_str(), "%lf:%lf:%zu", &r.lo, &r.hi, &r.steps) != 3) {
        throw fedae::ConfigError(std::string(flag) + " expects lo:hi:steps, got \"" + text + "\"");
    }
    return r;
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw fedae::IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_text_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw fedae::IoError("cannot open " + p.string() + " for writing");
    return out;
}

int run_savings(const SavingsArgs& a, const std::filesystem::path& out_dir) {
    fedae::SavingsScenario s;
    s.original_size = a.original;
    s.compressed_size = a.compressed;
    s.comm_rounds = a.rounds;
    s.collabs = a.collabs;
    s.ae_size = a.ae_size;
    s.num_decoders = a.per_collab_decoders ? a.collabs : a.decoders;
    s.mode = fedae::decoder_size_mode_from_name(a.mode);
    s.decoder_size = a.decoder_size;
    s.zero_cost = a.zero_cost;

    const std::filesystem::path dir = out_dir / "savings";
    ensure_dir(dir);

    json summary;
    summary["original_size"] = s.original_size;
    summary["compressed_size"] = s.compressed_size;
    summary["comm_rounds"] = s.comm_rounds;
    summary["collabs"] = s.collabs;
    summary["num_decoders"] = s.num_decoders;
    summary["mode"] = a.mode;
    summary["zero_cost"] = s.zero_cost;
    summary["decoder_cost"] = fedae::decoder_cost(s);
    const double ratio = fedae::savings_ratio(s);
    summary["savings_ratio"] = ratio;
    std::cout << "savings ratio: " << fedae::g9(ratio) << '\n';

    if (a.break_even == "rounds") {
        const double r = fedae::break_even_rounds(s);
        summary["break_even_rounds"] = r;
        std::cout << "break-even rounds: " << fedae::g9(r) << '\n';
    } else if (a.break_even == "collabs") {
        const double n = fedae::break_even_collaborators(s);
        summary["break_even_collabs"] = n;
        std::cout << "break-even collaborators: " << fedae::g9(n) << '\n';
    } else if (!a.break_even.empty()) {
        throw fedae::ConfigError("--break-even expects rounds or collabs");
    }

    if (!a.sweep_rounds.empty()) {
        const SweepRange r = parse_sweep_range(a.sweep_rounds, "--sweep-rounds");
        const auto table = fedae::sweep(s, fedae::SweepAxis::rounds, r.lo, r.hi, r.steps);
        std::ofstream csv = open_text_out(dir / "sweep_rounds.csv");
        fedae::write_sweep_csv(csv, table, fedae::SweepAxis::rounds);
        std::cout << "wrote " << (dir / "sweep_rounds.csv").string() << '\n';
    }
    if (!a.sweep_collabs.empty()) {
        const SweepRange r = parse_sweep_range(a.sweep_collabs, "--sweep-collabs");
        const auto table = fedae::sweep(s, fedae::SweepAxis::collabs, r.lo, r.hi, r.steps);
        std::ofstream csv = open_text_out(dir / "sweep_collabs.csv");
        fedae::write_sweep_csv(csv, table, fedae::SweepAxis::collabs);
        std::cout << "wrote " << (dir / "sweep_collabs.csv").string() << '\n';
    }

    std::ofstream js = open_text_out(dir / "summary.json");
    js << summary.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated-learning simulator with autoencoder-compressed weight updates"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t threads = 1;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory (overrides config output.dir)");
        sub->add_option_function<std::uint64_t>(
            "--seed",
            [&](std::uint64_t v) {
                seed = v;
                seed_set = true;
            },
            "root RNG seed (overrides config federated.seed)");
        sub->add_option("--threads", threads, "worker threads for per-collaborator work (0 = auto)");
    };

    CLI::App* gen = app.add_subcommand("gen-data", "generate and partition the synthetic dataset");
    add_common(gen);
    CLI::App* pre = app.add_subcommand(
        "prepass", "local training, autoencoder fitting, and decoder shipment");
    add_common(pre);
    CLI::App* fed = app.add_subcommand("federate", "run the federated rounds and emit metrics");
    add_common(fed);
    CLI::App* val = app.add_subcommand("validate",
                                       "replay weight snapshots through the autoencoder");
    add_common(val);

    CLI::App* sav = app.add_subcommand("savings", "savings-ratio and break-even analysis");
    SavingsArgs sargs;
    sav->add_option("--original", sargs.original, "uncompressed update size O (parameters)")
        ->required();
    sav->add_option("--compressed", sargs.compressed, "compressed update size C (latent floats)")
        ->required();
    sav->add_option("--ae", sargs.ae_size, "autoencoder parameter count");
    sav->add_option("--decoder-size", sargs.decoder_size, "exact decoder parameter count");
    sav->add_option("--mode", sargs.mode, "decoder cost model: half_ae|exact (default half_ae)");
    sav->add_option("--decoders", sargs.decoders, "number of decoders D (default 1)");
    sav->add_flag("--per-collab-decoders", sargs.per_collab_decoders,
                  "one decoder per collaborator (D = N)");
    sav->add_option("--rounds", sargs.rounds, "communication rounds R (default 1)");
    sav->add_option("--collabs", sargs.collabs, "collaborator count N (default 1)");
    sav->add_option("--sweep-rounds", sargs.sweep_rounds, "sweep R over lo:hi:steps, write CSV");
    sav->add_option("--sweep-collabs", sargs.sweep_collabs, "sweep N over lo:hi:steps, write CSV");
    sav->add_option("--break-even", sargs.break_even, "solve the break-even point: rounds|collabs");
    sav->add_flag("--zero-cost", sargs.zero_cost, "ignore the decoder shipment cost");
    sav->add_option("--out", out_dir, "output directory (default out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (app.got_subcommand(sav)) {
            return run_savings(sargs, out_dir.empty() ? "out" : out_dir);
        }

        fedae::ExperimentConfig cfg = fedae::load_config(config_path);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (seed_set) cfg.federated.seed = seed;

        fedae::RunOptions opt;
        opt.threads = threads == 0
                          ? std::max<std::size_t>(1, std::thread::hardware_concurrency())
                          : threads;

        if (app.got_subcommand(gen)) {
            fedae::cmd_gen_data(cfg, opt);
        } else if (app.got_subcommand(pre)) {
            fedae::cmd_prepass(cfg, opt);
        } else if (app.got_subcommand(fed)) {
            fedae::cmd_federate(cfg, opt);
        } else if (app.got_subcommand(val)) {
            if (!fedae::cmd_validate(cfg, opt)) {
                std::cerr << "error: validation thresholds not met\n";
                return 4;
            }
        }
        return 0;
    } catch (const fedae::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const fedae::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const fedae::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const fedae::ProtocolError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
