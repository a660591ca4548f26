#include "wsf/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "wsf/effective.hpp"
#include "wsf/rates.hpp"

namespace wsf {
namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

PointResult evaluate_rate(const SystemParams& params, const DriveProfile& drive) {
    const RatePipeline p = compute_rates(params, drive);
    const Dissipation diss{params.gamma, params.gamma_phi, params.n_sites};
    const PopulationState ness = ness_closed_form(p.rates, diss);
    PointResult out;
    out.solver = SolverKind::RateClosedForm;
    out.residual = rate_equation_rhs(ness, p.rates, diss).nk.cwiseAbs().maxCoeff();
    out.fidelities = Eigen::VectorXd::Constant(params.n_sites, nan);
    for (int slot = 0; slot < params.n_sites; ++slot) {
        const int s = p.eigensystem.slot_index(slot);
        for (std::size_t t = 0; t < p.rates.targets.size(); ++t) {
            if (p.rates.targets[t] == s) out.fidelities(slot) = ness.nk(Eigen::Index(t));
        }
    }
    out.ground_fidelity = ness.n0;
    out.manifold2_population = 0.0;
    return out;
}

PointResult evaluate_lindblad(const SystemParams& params, const DriveProfile& drive, int manifolds) {
    const ModeSet modes = build_mode_set(params);
    const EffectiveSpinModel model = build_effective_model(params, drive);
    const EigenSystem es = exact_diagonalization(model, modes, {manifolds, 20000});
    const TransitionElements el = transition_matrix_elements(modes, drive, params, es);
    const RateTable rates =
        pump_rates(el, SpectralFunction{modes.frequencies, params.kappa}, es, drive.omega_d);

    LindbladOptions lopt;
    lopt.dissipation = Dissipation{params.gamma, params.gamma_phi, params.n_sites};
    lopt.secular_window = 100.0 * params.kappa;
    const Eigen::MatrixXcd L = build_liouvillian(es, rates, lopt);
    NessOptions nopt;
    nopt.initial_state = es.ground_index();
    const NessSolution sol = solve_ness(L, nopt);

    PointResult out;
    out.solver = sol.solver;
    out.residual = sol.residual;
    out.fidelities = Eigen::VectorXd::Constant(params.n_sites, nan);
    const Eigen::VectorXd diag = sol.rho.entries.diagonal().real();
    for (int slot = 0; slot < params.n_sites; ++slot) {
        const int s = es.slot_index(slot);
        if (s >= 0) out.fidelities(slot) = std::clamp(diag(s), 0.0, 1.0);
    }
    out.ground_fidelity = std::clamp(diag(es.ground_index()), 0.0, 1.0);
    double higher = 0.0;
    for (int m = 2; m <= es.max_excitations(); ++m) {
        for (int s : es.manifold(m)) higher += diag(s);
    }
    out.manifold2_population = higher;
    Eigen::MatrixXd off = sol.rho.entries.cwiseAbs();
    off.diagonal().setZero();
    out.max_coherence = off.maxCoeff();
    if (higher > 1e-3) {
        warn_once("manifold-convergence", "population above the single-excitation manifold exceeds 1e-3");
    }
    return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

} // namespace

PointResult evaluate_point(const SystemParams& params, const DriveSpec& drive, double omega_d,
                           SolverChoice solver, int manifolds) {
    const DriveProfile profile = drive.profile(params.n_sites, omega_d);
    return solver == SolverChoice::Rate ? evaluate_rate(params, profile)
                                        : evaluate_lindblad(params, profile, manifolds);
}

std::size_t SweepResult::failures() const {
    return std::size_t(std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.failed; }));
}

double SweepResult::peak_fidelity(int sample_id, int slot) const {
    double best = nan;
    for (const auto& r : rows) {
        if (r.sample_id != sample_id || r.failed) continue;
        const double f = r.point.fidelities(slot);
        if (std::isnan(f)) continue;
        if (std::isnan(best) || f > best) best = f;
    }
    return best;
}

std::vector<double> drive_grid(const SweepConfig& config, const SystemParams& params) {
    std::vector<double> grid;
    if (!config.range.automatic) {
        const auto& r = config.range;
        const auto count = std::size_t(std::floor((r.stop - r.start) / r.step + 1e-9)) + 1;
        grid.reserve(count);
        for (std::size_t i = 0; i < count; ++i) grid.push_back(r.start + double(i) * r.step);
        return grid;
    }
    const auto& r = config.range;
    const DriveProfile profile = config.drive.profile(params.n_sites, params.omega_q);
    const double centre =
        config.solver == SolverChoice::Rate
            ? optimal_drive_frequency(params, profile, r.target, r.mode)
            : optimal_drive_frequency_exact(params, profile, r.target, r.mode, config.manifolds);
    const auto half = long(std::lround(r.span_kappa / r.step_kappa));
    const double step = r.step_kappa * params.kappa;
    for (long i = -half; i <= half; ++i) grid.push_back(centre + double(i) * step);
    return grid;
}

double DisorderSampler::uniform() {
    // 53 random bits in (0, 1].
    return (double(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double DisorderSampler::truncated_normal() {
    for (;;) {
        const double u1 = uniform();
        const double u2 = uniform();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
        if (std::abs(z) <= 5.0) return z;
    }
}

SystemParams DisorderSampler::sample(const SystemParams& clean, const DisorderSpec& spec) {
    const int n = clean.n_sites;
    SiteOverrides o;
    o.d_omega_c = Eigen::VectorXd::Zero(n);
    o.d_omega_q = Eigen::VectorXd::Zero(n);
    o.d_g = Eigen::VectorXd::Zero(n);
    o.d_J = Eigen::VectorXd::Zero(n);
    // Fixed draw order: all cavities, then qubits, couplings and bonds.
    for (int i = 0; i < n; ++i) o.d_omega_c(i) = clean.omega_c * spec.sigma_omega_c * truncated_normal();
    for (int i = 0; i < n; ++i) o.d_omega_q(i) = clean.omega_q * spec.sigma_omega_q * truncated_normal();
    for (int i = 0; i < n; ++i) o.d_g(i) = clean.g * spec.sigma_g * truncated_normal();
    for (int i = 0; i < n; ++i) o.d_J(i) = clean.J * spec.sigma_J * truncated_normal();
    SystemParams out = clean;
    out.overrides = o;
    return out;
}

std::uint64_t sample_seed(std::uint64_t seed, int sample_id) {
    return splitmix64(seed ^ splitmix64(std::uint64_t(sample_id)));
}

std::vector<SystemParams> ensemble_parameters(const SweepConfig& config) {
    if (!config.disorder) return {config.system};
    std::vector<SystemParams> out;
    for (int s = 0; s < config.disorder->n_samples; ++s) {
        DisorderSampler sampler(sample_seed(config.disorder->seed, s));
        out.push_back(sampler.sample(config.system, *config.disorder));
    }
    return out;
}

SweepResult run_sweep(const SweepConfig& config, const RunOptions& options) {
    config.validate();
    const std::vector<SystemParams> samples = ensemble_parameters(config);

    std::vector<double> clean_grid = drive_grid(config, config.system);
    std::vector<std::vector<double>> grids;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        if (!config.range.automatic || !config.disorder) {
            grids.push_back(clean_grid);
            continue;
        }
        try {
            grids.push_back(drive_grid(config, samples[s]));
        } catch (const Error& e) {
            warn("sample " + std::to_string(s) + ": optimum not found (" + e.what() +
                 "); using the clean grid");
            grids.push_back(clean_grid);
        }
    }

    SweepResult result;
    result.n_slots = config.system.n_sites;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        for (double w : grids[s]) {
            SweepRow row;
            row.omega_d = w;
            row.sample_id = int(s);
            result.rows.push_back(row);
        }
    }

    std::vector<std::size_t> row_sample(result.rows.size());
    for (std::size_t i = 0; i < result.rows.size(); ++i) row_sample[i] = std::size_t(result.rows[i].sample_id);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= result.rows.size()) return;
            SweepRow& row = result.rows[i];
            try {
                row.point = evaluate_point(samples[row_sample[i]], config.drive, row.omega_d, config.solver,
                                           config.manifolds);
            } catch (const std::exception& e) {
                row.failed = true;
                row.error = e.what();
                row.point = PointResult{};
                row.point.residual = nan;
                row.point.fidelities = Eigen::VectorXd::Constant(result.n_slots, nan);
                row.point.ground_fidelity = nan;
                row.point.manifold2_population = nan;
            }
        }
    };
    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = unsigned(std::min<std::size_t>(threads, std::max<std::size_t>(1, result.rows.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::stable_sort(result.rows.begin(), result.rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return a.sample_id != b.sample_id ? a.sample_id < b.sample_id : a.omega_d < b.omega_d;
    });
    if (const auto failed = result.failures(); failed > 0) {
        const auto first = std::find_if(result.rows.begin(), result.rows.end(),
                                        [](const SweepRow& r) { return r.failed; });
        warn(std::to_string(failed) + " of " + std::to_string(result.rows.size()) +
             " sweep points failed; first error: " + first->error);
    }
    return result;
}

std::string format_csv(const SweepResult& result) {
    std::ostringstream out;
    out << "omega_d_ghz,sample_id,solver,residual";
    for (int k = 0; k < result.n_slots; ++k) out << ",fid_k" << k;
    out << ",fid_gs,pop_manifold2\n";
    for (const auto& r : result.rows) {
        out << format_number(to_ghz(r.omega_d)) << ',' << r.sample_id << ','
            << (r.failed ? "failed" : solver_name(r.point.solver)) << ',' << format_number(r.point.residual);
        for (int k = 0; k < result.n_slots; ++k) out << ',' << format_number(r.point.fidelities(k));
        out << ',' << format_number(r.point.ground_fidelity) << ','
            << format_number(r.point.manifold2_population) << '\n';
    }
    return out.str();
}

void write_csv(const SweepResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << format_csv(result);
    if (!out) throw Error("write to " + path + " failed");
}

EnsembleReport disorder_ensemble(const SweepConfig& config, const RunOptions& options) {
    if (!config.disorder) throw ConfigError("disorder_ensemble needs a disorder block");
    EnsembleReport report;
    SweepConfig clean = config;
    clean.disorder.reset();
    report.clean = run_sweep(clean, options);
    report.samples = run_sweep(config, options);

    auto& s = report.summary;
    s.targets = config.target_slots();
    const auto nt = Eigen::Index(s.targets.size());
    s.clean_peak.resize(nt);
    s.mean_peak.resize(nt);
    s.min_peak.resize(nt);
    s.max_peak.resize(nt);
    for (Eigen::Index t = 0; t < nt; ++t) {
        const int slot = s.targets[std::size_t(t)];
        s.clean_peak(t) = report.clean.peak_fidelity(0, slot);
        double sum = 0.0, lo = nan, hi = nan;
        int count = 0;
        for (int id = 0; id < config.disorder->n_samples; ++id) {
            const double p = report.samples.peak_fidelity(id, slot);
            if (std::isnan(p)) continue;
            sum += p;
            lo = std::isnan(lo) ? p : std::min(lo, p);
            hi = std::isnan(hi) ? p : std::max(hi, p);
            ++count;
        }
        s.mean_peak(t) = count ? sum / count : nan;
        s.min_peak(t) = lo;
        s.max_peak(t) = hi;
    }
    return report;
}

ScalabilityReport scalability_report(const SystemParams& params) {
    ScalabilityReport r;
    const double n = params.n_sites;
    const double ratio = params.dispersive_ratio();
    r.max_sites = two_pi * params.J / params.kappa;
    r.single_site_spacing = two_pi * params.J * ratio * ratio / n;
    r.uniform_spacing = two_pi * params.J / n;
    r.single_site_resolvable = params.kappa < r.single_site_spacing;
    r.uniform_resolvable = params.kappa < r.uniform_spacing;
    for (int m = 1; m <= std::max(params.n_sites, 1); ++m) {
        r.ceiling.emplace_back(m, fidelity_ceiling(Dissipation{params.gamma, params.gamma_phi, m}));
    }
    r.ceiling_limit = params.gamma / (params.gamma + 2.0 * params.gamma_phi);
    return r;
}

std::string ScalabilityReport::to_string() const {
    std::ostringstream out;
    out << "N_max (2 pi J / kappa): " << format_number(max_sites) << '\n'
        << "single-site drive spacing 2 pi J (g/Delta)^2 / N: " << format_number(to_ghz(single_site_spacing))
        << " x 2pi GHz, resolvable: " << (single_site_resolvable ? "yes" : "no") << '\n'
        << "uniform drive spacing 2 pi J / N: " << format_number(to_ghz(uniform_spacing))
        << " x 2pi GHz, resolvable: " << (uniform_resolvable ? "yes" : "no") << '\n'
        << "fidelity ceiling n_max(N):\n";
    for (const auto& [n, v] : ceiling) out << "  N = " << n << ": " << format_number(v) << '\n';
    out << "  N -> infinity: " << format_number(ceiling_limit) << '\n';
    return out.str();
}

std::vector<std::size_t> find_peaks(const std::vector<double>& y, double min_prominence) {
    std::vector<std::size_t> peaks;
    const std::size_t n = y.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(y[i])) continue;
        // Flat tops count once, at their left edge.
        std::size_t j = i;
        while (j + 1 < n && y[j + 1] == y[i]) ++j;
        const bool left_ok = i == 0 || y[i - 1] < y[i];
        const bool right_ok = j + 1 == n || y[j + 1] < y[i];
        if (!(left_ok && right_ok) || n < 2) {
            i = j;
            continue;
        }
        double left_min = y[i];
        for (std::size_t a = i; a-- > 0;) {
            if (y[a] > y[i]) break;
            left_min = std::min(left_min, y[a]);
        }
        double right_min = y[i];
        for (std::size_t b = j + 1; b < n; ++b) {
            if (y[b] > y[i]) break;
            right_min = std::min(right_min, y[b]);
        }
        if (y[i] - std::max(left_min, right_min) >= min_prominence) peaks.push_back(i);
        i = j;
    }
    return peaks;
}

} // namespace wsf
