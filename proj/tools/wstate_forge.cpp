// wstate-forge: command-line front end for sweeps and quick estimates.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wsf/config.hpp"
#include "wsf/rates.hpp"
#include "wsf/sweep.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_all_failed = 3;

struct SweepArgs {
    std::string config;
    std::string output;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> solver;
    std::optional<int> manifolds;
    unsigned threads{0};
};

int run_sweep_command(const SweepArgs& args) {
    wsf::SweepConfig cfg = wsf::load_config(args.config);
    if (args.seed) {
        if (!cfg.disorder) {
            wsf::warn("--seed given but the config has no disorder block; ignoring it");
        } else {
            cfg.disorder->seed = *args.seed;
        }
    }
    if (args.solver) cfg.solver = wsf::parse_solver_choice(*args.solver);
    if (args.manifolds) cfg.manifolds = *args.manifolds;
    cfg.validate();

    const wsf::SweepResult result = wsf::run_sweep(cfg, {args.threads});
    wsf::write_csv(result, args.output);
    std::cerr << result.rows.size() << " rows written to " << args.output << '\n';
    if (!result.rows.empty() && result.failures() == result.rows.size()) {
        std::cerr << "error: every sweep point failed\n";
        return exit_all_failed;
    }
    return 0;
}

int run_optimal_command(const std::string& path, int target, std::optional<int> mode) {
    const wsf::SweepConfig cfg = wsf::load_config(path);
    const int n = cfg.system.n_sites;
    if (target < 0 || target >= n || (mode && (*mode < 0 || *mode >= n))) {
        throw wsf::ConfigError("target and mode must lie in [0, n_sites)");
    }
    const int q0 = mode.value_or(target);
    const wsf::DriveProfile drive = cfg.drive.profile(n, cfg.system.omega_q);
    const double w = wsf::optimal_drive_frequency(cfg.system, drive, target, q0);
    std::printf("%.12g\n", wsf::to_ghz(w));
    return 0;
}

int run_scalability_command(const std::string& path) {
    const wsf::SweepConfig cfg = wsf::load_config(path);
    std::cout << wsf::scalability_report(cfg.system).to_string();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Steady-state W-state stabilization in driven cavity arrays"};
    app.require_subcommand(1);

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Sweep the drive frequency and write a CSV");
    sweep_cmd->add_option("--config", sweep.config, "JSON configuration")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--output", sweep.output, "CSV output path")->required();
    sweep_cmd->add_option("--seed", sweep.seed, "Disorder seed override");
    sweep_cmd->add_option("--solver", sweep.solver, "rate or lindblad")
        ->check(CLI::IsMember({"rate", "lindblad"}));
    sweep_cmd->add_option("--manifolds", sweep.manifolds, "Excitation manifolds kept by the Lindblad solver")
        ->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--threads", sweep.threads, "Worker threads (0 = all cores)");

    std::string opt_config;
    int target = 0;
    std::optional<int> mode;
    auto* opt_cmd = app.add_subcommand("optimal-wd", "Print the optimal drive frequency in GHz");
    opt_cmd->add_option("--config", opt_config, "JSON configuration")->required()->check(CLI::ExistingFile);
    opt_cmd->add_option("--target", target, "Target mode slot k")->required();
    opt_cmd->add_option("--mode", mode, "Photon mode q0 (defaults to the target)");

    std::string scal_config;
    auto* scal_cmd = app.add_subcommand("scalability", "Print resolvability limits and fidelity ceilings");
    scal_cmd->add_option("--config", scal_config, "JSON configuration")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        if (*sweep_cmd) return run_sweep_command(sweep);
        if (*opt_cmd) return run_optimal_command(opt_config, target, mode);
        if (*scal_cmd) return run_scalability_command(scal_config);
    } catch (const wsf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
