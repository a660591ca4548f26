// sweep.hpp - drive-frequency sweeps, disorder ensembles and CSV output

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wsf/config.hpp"
#include "wsf/dynamics.hpp"

namespace wsf {

// Steady-state observables at a single drive frequency.
struct PointResult {
    SolverKind solver{SolverKind::RateClosedForm};
    double residual{0.0};
    Eigen::VectorXd fidelities; // by mode slot
    double ground_fidelity{0.0};
    double manifold2_population{0.0};
    double max_coherence{0.0}; // largest off-diagonal |rho_ab| in the eigenbasis
};

PointResult evaluate_point(const SystemParams& params, const DriveSpec& drive, double omega_d,
                           SolverChoice solver, int manifolds);

struct SweepRow {
    double omega_d{0.0};
    int sample_id{0};
    bool failed{false};
    std::string error;
    PointResult point;
};

struct SweepResult {
    int n_slots{0};
    std::vector<SweepRow> rows; // sorted by (sample_id, omega_d)

    std::size_t failures() const;
    // Largest fidelity to `slot` within one sample, ignoring failed rows.
    double peak_fidelity(int sample_id, int slot) const;
};

struct RunOptions {
    unsigned threads{0}; // 0 = hardware concurrency
};

// The drive-frequency grid for a parameter set; Auto ranges are centred on the
// optimum for these parameters.
std::vector<double> drive_grid(const SweepConfig& config, const SystemParams& params);

// One sample per disorder draw (or just the clean system without disorder).
std::vector<SystemParams> ensemble_parameters(const SweepConfig& config);

SweepResult run_sweep(const SweepConfig& config, const RunOptions& options = {});

std::string format_csv(const SweepResult& result);
void write_csv(const SweepResult& result, const std::string& path);

struct EnsembleSummary {
    std::vector<int> targets;
    Eigen::VectorXd clean_peak;
    Eigen::VectorXd mean_peak;
    Eigen::VectorXd min_peak;
    Eigen::VectorXd max_peak;
};

struct EnsembleReport {
    SweepResult clean;
    SweepResult samples;
    EnsembleSummary summary;
};

EnsembleReport disorder_ensemble(const SweepConfig& config, const RunOptions& options = {});

// Multiplicative Gaussian disorder drawn from a 64-bit Mersenne Twister with
// explicit Box-Muller, so the stream is identical on every platform.
class DisorderSampler {
public:
    explicit DisorderSampler(std::uint64_t seed) : engine_(seed) {}
    // Standard normal deviate, redrawn until it lies within +-5.
    double truncated_normal();
    SystemParams sample(const SystemParams& clean, const DisorderSpec& spec);

private:
    double uniform();
    std::mt19937_64 engine_;
};

std::uint64_t sample_seed(std::uint64_t seed, int sample_id);

struct ScalabilityReport {
    double max_sites{0.0};            // 2 pi J / kappa
    double single_site_spacing{0.0};  // 2 pi J (g/Delta)^2 / N
    double uniform_spacing{0.0};      // 2 pi J / N
    bool single_site_resolvable{false};
    bool uniform_resolvable{false};
    std::vector<std::pair<int, double>> ceiling; // (N, n_max)
    double ceiling_limit{0.0};                   // gamma / (gamma + 2 gamma_phi)

    std::string to_string() const;
};

ScalabilityReport scalability_report(const SystemParams& params);

// Indices of local maxima whose prominence is at least `min_prominence`.
std::vector<std::size_t> find_peaks(const std::vector<double>& y, double min_prominence);

} // namespace wsf
