// config.hpp - JSON sweep configuration (GHz on disk, rad/ns in memory)

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wsf/model.hpp"

namespace wsf {

enum class DriveKind { Uniform, SingleSite, Custom };
enum class SolverChoice { Rate, Lindblad };

struct DriveSpec {
    DriveKind kind{DriveKind::Uniform};
    double amplitude{0.0};   // epsilon^d
    int site{0};             // SingleSite only
    Eigen::VectorXcd custom; // Custom only, relative weights multiplied by amplitude

    DriveProfile profile(int n_sites, double omega_d) const;
};

struct FrequencyRange {
    bool automatic{false};
    double start{0.0};
    double stop{0.0};
    double step{0.0};
    // Auto mode: centred on the optimum for (target slot, mode q0).
    int target{0};
    int mode{0};
    double span_kappa{50.0};
    double step_kappa{0.05};
};

struct DisorderSpec {
    double sigma_omega_c{0.0}; // relative standard deviations
    double sigma_omega_q{0.0};
    double sigma_g{0.0};
    double sigma_J{0.0};
    int n_samples{1};
    std::uint64_t seed{0};
};

struct SweepConfig {
    SystemParams system;
    DriveSpec drive;
    FrequencyRange range;
    SolverChoice solver{SolverChoice::Rate};
    int manifolds{1};
    std::vector<int> targets; // mode slots; empty means all
    std::optional<DisorderSpec> disorder;

    void validate() const;
    std::vector<int> target_slots() const;
};

// Throws ConfigError with the offending key on malformed input.
SweepConfig parse_config(const std::string& json_text);
SweepConfig load_config(const std::string& path);

const char* solver_choice_name(SolverChoice s);
SolverChoice parse_solver_choice(const std::string& name);

} // namespace wsf
