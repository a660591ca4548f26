// Acceptance suite: one PASS/FAIL line per criterion, with the measured numbers.
//
// Usage: acceptance [--allow-fail id1,id2,...] [--only id]
// Criteria named in --allow-fail still print FAIL when they fail but do not
// change the exit status; every such criterion is a documented open issue.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wsf/dynamics.hpp"
#include "wsf/effective.hpp"
#include "wsf/general_em.hpp"
#include "wsf/rates.hpp"
#include "wsf/sweep.hpp"

using namespace wsf;

namespace {

struct Outcome {
    bool pass{false};
    std::string detail;
};

SystemParams lattice(int n, Boundary b = Boundary::Open) {
    SystemParams p;
    p.n_sites = n;
    p.omega_c = from_ghz(6.0);
    p.omega_q = from_ghz(7.0);
    p.g = from_ghz(0.1);
    p.J = from_ghz(0.1);
    p.kappa = from_ghz(1e-4);
    p.gamma = from_ghz(1e-5);
    p.gamma_phi = from_ghz(1e-6);
    p.boundary = b;
    return p;
}

const double eps_ghz = 0.3;

DriveSpec drive_spec(DriveKind kind) {
    DriveSpec d;
    d.kind = kind;
    d.amplitude = from_ghz(eps_ghz);
    d.site = 0;
    return d;
}

SweepConfig full_range(DriveKind kind, double step_ghz = 5e-6) {
    SweepConfig c;
    c.system = lattice(5);
    c.drive = drive_spec(kind);
    c.range.start = from_ghz(6.40);
    c.range.stop = from_ghz(6.62);
    c.range.step = from_ghz(step_ghz);
    return c;
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

std::vector<double> column(const SweepResult& r, int slot) {
    std::vector<double> y;
    y.reserve(r.rows.size());
    for (const auto& row : r.rows) y.push_back(row.failed ? 0.0 : row.point.fidelities(slot));
    return y;
}

// Shared full sweeps of the five-site chain.
struct Panels {
    SweepResult uniform;
    SweepResult single;
};

const Panels& panels() {
    static const Panels p{run_sweep(full_range(DriveKind::Uniform)), run_sweep(full_range(DriveKind::SingleSite))};
    return p;
}

Outcome check_fidelity_ceiling() {
    const SystemParams p = lattice(5);
    const double bound = wsf::fidelity_ceiling(Dissipation{p.gamma, p.gamma_phi, 5});
    double worst = 0.0;
    for (const SweepResult* r : {&panels().uniform, &panels().single}) {
        for (const auto& row : r->rows) {
            if (!row.failed) worst = std::max(worst, row.point.fidelities.maxCoeff());
        }
    }
    // Lindblad sweeps around every uniform-drive optimum.
    double worst_lindblad = 0.0;
    for (int k = 0; k < 5; ++k) {
        SweepConfig c = full_range(DriveKind::Uniform);
        c.solver = SolverChoice::Lindblad;
        c.manifolds = 2;
        c.range.automatic = true;
        c.range.target = k;
        c.range.mode = k;
        c.range.span_kappa = 5;
        c.range.step_kappa = 0.25;
        for (const auto& row : run_sweep(c).rows) {
            if (!row.failed) worst_lindblad = std::max(worst_lindblad, row.point.fidelities.maxCoeff());
        }
    }
    const bool pass = std::abs(bound - 0.8667) <= 1e-4 && worst <= bound + 1e-3 && worst_lindblad <= bound + 1e-3;
    return {pass, "n_max = " + fmt("%.6f", bound) + ", max rate-sweep fidelity " + fmt("%.6f", worst) +
                      ", max Lindblad fidelity " + fmt("%.6f", worst_lindblad)};
}

Outcome check_peak_structure() {
    const SystemParams p = lattice(5);
    const ModeSet modes = build_mode_set(p);
    const double r2 = p.dispersive_ratio() * p.dispersive_ratio();
    std::ostringstream out;
    bool pass = true;

    // Uniform drive: peaks of the envelope max_k F_k.
    const SweepResult& u = panels().uniform;
    std::vector<double> env(u.rows.size(), 0.0);
    for (std::size_t i = 0; i < u.rows.size(); ++i) {
        if (!u.rows[i].failed) env[i] = u.rows[i].point.fidelities.maxCoeff();
    }
    const auto peaks = find_peaks(env, 0.1);
    out << "uniform: " << peaks.size() << " peaks";
    if (peaks.size() != 5) pass = false;
    double worst_u = 0.0;
    for (std::size_t i = 1; i < peaks.size(); ++i) {
        int ka = 0, kb = 0;
        u.rows[peaks[i - 1]].point.fidelities.maxCoeff(&ka);
        u.rows[peaks[i]].point.fidelities.maxCoeff(&kb);
        const double measured = u.rows[peaks[i]].omega_d - u.rows[peaks[i - 1]].omega_d;
        const double predicted = std::abs(2 * p.J * (std::cos(modes.wavevectors(ka)) - std::cos(modes.wavevectors(kb))));
        const double ratio = measured / predicted;
        out << (i == 1 ? ", spacing/|2J dcos| = " : " ") << fmt("%.3f", ratio);
        worst_u = std::max(worst_u, std::abs(ratio - 1.0));
    }
    if (worst_u > 0.05) pass = false;

    // Single-site drive: one cluster per stabilizing mode q0, one peak per target inside it.
    const SweepResult& s = panels().single;
    const DriveProfile prof = drive_spec(DriveKind::SingleSite).profile(5, 0.0);
    std::vector<std::vector<std::size_t>> target_peaks(5);
    for (int k = 0; k < 5; ++k) target_peaks[std::size_t(k)] = find_peaks(column(s, k), 0.02);
    double lo = 1e9, hi = 0.0;
    int clusters = 0;
    for (int q0 = 0; q0 < 5; ++q0) {
        std::vector<std::pair<double, int>> cluster;
        for (int k = 0; k < 5; ++k) {
            const double guess = optimal_drive_frequency(p, prof, k, q0);
            double best = 0.0, dist = 1e300;
            for (std::size_t idx : target_peaks[std::size_t(k)]) {
                const double d = std::abs(s.rows[idx].omega_d - guess);
                if (d < dist) {
                    dist = d;
                    best = s.rows[idx].omega_d;
                }
            }
            if (dist < 10 * p.kappa) cluster.emplace_back(best, k);
        }
        if (cluster.size() < 2) continue;
        ++clusters;
        std::sort(cluster.begin(), cluster.end());
        for (std::size_t i = 1; i < cluster.size(); ++i) {
            const double measured = cluster[i].first - cluster[i - 1].first;
            const double predicted = std::abs(2 * p.J * r2 *
                                              (std::cos(modes.wavevectors(cluster[i].second)) -
                                               std::cos(modes.wavevectors(cluster[i - 1].second))));
            lo = std::min(lo, measured / predicted);
            hi = std::max(hi, measured / predicted);
        }
    }
    out << "; single-site: " << clusters << " clusters, intra-cluster spacing/|2J(g/D)^2 dcos| in ["
        << fmt("%.3f", lo) << ", " << fmt("%.3f", hi) << "]";
    if (clusters != 5 || lo < 0.9 || hi > 1.1) pass = false;
    return {pass, out.str()};
}

Outcome check_optimal_frequency() {
    int checked = 0, skipped = 0;
    double worst = 0.0;
    for (int n = 3; n <= 5; ++n) {
        for (Boundary b : {Boundary::Open, Boundary::Periodic}) {
            const SystemParams p = lattice(n, b);
            for (DriveKind kind : {DriveKind::Uniform, DriveKind::SingleSite}) {
                const DriveProfile d = drive_spec(kind).profile(n, 0.0);
                for (int k = 0; k < n; ++k) {
                    for (int q0 = 0; q0 < n; ++q0) {
                        double w = 0.0;
                        try {
                            w = optimal_drive_frequency(p, d, k, q0);
                        } catch (const Error&) {
                            ++skipped; // Lambda_{k q0} = 0
                            continue;
                        }
                        const double step = p.kappa / 100;
                        std::vector<double> gamma;
                        for (int i = -300; i <= 300; ++i) {
                            const RatePipeline rp = compute_rates(p, d.with_frequency(w + i * step));
                            const int s = rp.eigensystem.slot_index(k);
                            const auto& t = rp.rates.targets;
                            gamma.push_back(rp.rates.gamma_up(std::find(t.begin(), t.end(), s) - t.begin()));
                        }
                        const auto top = std::size_t(std::max_element(gamma.begin(), gamma.end()) - gamma.begin());
                        double best_w = w + (double(top) - 300.0) * step;
                        if (top > 0 && top + 1 < gamma.size()) {
                            // Parabolic refinement below the grid spacing.
                            const double a = gamma[top - 1], b = gamma[top], c = gamma[top + 1];
                            const double curvature = a - 2 * b + c;
                            if (curvature < 0.0) best_w += 0.5 * (a - c) / curvature * step;
                        }
                        worst = std::max(worst, std::abs(best_w - w) / p.kappa);
                        ++checked;
                    }
                }
            }
        }
    }
    return {worst <= 0.1, std::to_string(checked) + " (k, q0) pairs, " + std::to_string(skipped) +
                              " with Lambda = 0 skipped, max |argmax - optimum| = " + fmt("%.2e", worst) + " kappa"};
}

Outcome check_solver_cross_validation() {
    std::ostringstream out;
    bool pass = true;
    for (DriveKind kind : {DriveKind::Uniform, DriveKind::SingleSite}) {
        double worst = 0.0, worst_pop2 = 0.0;
        std::string where;
        for (int n = 2; n <= 5; ++n) {
            const SystemParams p = lattice(n);
            const DriveSpec spec = drive_spec(kind);
            const DriveProfile d = spec.profile(n, 0.0);
            for (int k = 0; k < n; ++k) {
                const double w_rate = optimal_drive_frequency(p, d, k, k);
                const double w_exact = optimal_drive_frequency_exact(p, d, k, k, 2);
                const PointResult rate = evaluate_point(p, spec, w_rate, SolverChoice::Rate, 1);
                const PointResult lind = evaluate_point(p, spec, w_exact, SolverChoice::Lindblad, 2);
                const double diff = (rate.fidelities - lind.fidelities).cwiseAbs().maxCoeff();
                if (diff > worst) {
                    worst = diff;
                    where = "N=" + std::to_string(n) + " k=" + std::to_string(k) + ": rate " +
                            fmt("%.4f", rate.fidelities(k)) + " vs Lindblad " + fmt("%.4f", lind.fidelities(k));
                }
                worst_pop2 = std::max(worst_pop2, lind.manifold2_population);
            }
        }
        out << (kind == DriveKind::Uniform ? "uniform" : "; single-site") << ": max |dF| = " << fmt("%.2e", worst)
            << " (" << where << "), max manifold-2 population " << fmt("%.1e", worst_pop2);
        if (worst > 0.02 || worst_pop2 >= 1e-3) pass = false;
    }
    return {pass, out.str()};
}

Outcome check_selection_rules() {
    double dark = 0.0, spread = 0.0, sqrt2 = 0.0, leak = 0.0;
    for (int n = 3; n <= 8; ++n) {
        const SystemParams p = lattice(n, Boundary::Periodic);
        const ModeSet modes = build_mode_set(p);
        const DriveProfile d = drive_spec(DriveKind::SingleSite).profile(n, from_ghz(6.5));
        const EigenSystem pairs = degenerate_pair_states(build_effective_model(p, d), modes);
        const TransitionElements el = transition_matrix_elements(modes, d, p, pairs);
        const double top = el.magnitudes.maxCoeff();
        double paired = -1.0, unpaired = -1.0;
        for (std::size_t t = 0; t < el.targets.size(); ++t) {
            const StateLabel& l = pairs.labels[std::size_t(el.targets[t])];
            const double k = *l.wavevector;
            const auto row = el.magnitudes.row(Eigen::Index(t));
            if (l.parity && *l.parity == -1) {
                dark = std::max(dark, row.maxCoeff() / top);
                continue;
            }
            const bool self_paired = std::abs(k) < 1e-12 || std::abs(k - std::numbers::pi) < 1e-12;
            for (Eigen::Index q = 0; q < row.size(); ++q) {
                double& ref = self_paired ? unpaired : paired;
                if (ref < 0.0) ref = row(q);
                spread = std::max(spread, std::abs(row(q) / ref - 1.0));
            }
        }
        sqrt2 = std::max(sqrt2, std::abs(paired / unpaired / std::sqrt(2.0) - 1.0));

        const Eigen::VectorXcd ek =
            drive_to_mode_basis(drive_spec(DriveKind::Uniform).profile(n, from_ghz(6.5)), modes);
        for (int m = 0; m < n; ++m) {
            if (modes.wavevectors(m) != 0.0) leak = std::max(leak, std::abs(ek(m)) / from_ghz(eps_ghz));
        }
    }
    const bool pass = dark < 1e-15 && spread < 1e-10 && sqrt2 < 1e-10 && leak < 1e-12;
    return {pass, "N = 3..8: max Lambda(k-)/max Lambda = " + fmt("%.1e", dark) + ", Lambda(k+) spread " +
                      fmt("%.1e", spread) + ", sqrt(2) ratio error " + fmt("%.1e", sqrt2) +
                      ", uniform-drive |eps_k|/eps off k=0 " + fmt("%.1e", leak)};
}

Outcome check_drive_power() {
    double worst = 0.0;
    int rates = 0;
    for (int n = 2; n <= 6; ++n) {
        for (Boundary b : {Boundary::Open, Boundary::Periodic}) {
            const SystemParams p = lattice(n, b);
            const ModeSet modes = build_mode_set(p);
            const SpectralFunction rho{modes.frequencies, p.kappa};
            for (DriveKind kind : {DriveKind::Uniform, DriveKind::SingleSite}) {
                const DriveProfile d0 = drive_spec(kind).profile(n, 0.0);
                for (int k = 0; k < n; ++k) {
                    double w = 0.0;
                    try {
                        w = optimal_drive_frequency(p, d0, k, k);
                    } catch (const Error&) {
                        continue;
                    }
                    const DriveProfile d = d0.with_frequency(w);
                    const EigenSystem es = effective_eigensystem(build_effective_model(p, d), modes);
                    const RateTable once = pump_rates(transition_matrix_elements(modes, d, p, es), rho, es, w);
                    const RateTable twice =
                        pump_rates(transition_matrix_elements(modes, d.scaled(2.0), p, es), rho, es, w);
                    for (Eigen::Index t = 0; t < once.gamma_up.size(); ++t) {
                        if (once.gamma_up(t) <= 1e-30) continue;
                        worst = std::max(worst, std::abs(twice.gamma_up(t) / once.gamma_up(t) / 16.0 - 1.0));
                        ++rates;
                    }
                }
            }
        }
    }
    return {worst < 1e-10, std::to_string(rates) + " rates, max |Gamma(2 eps)/(16 Gamma(eps)) - 1| = " +
                               fmt("%.1e", worst) + " (eigensystem held fixed)"};
}

Outcome check_tight_binding() {
    double worst = 0.0;
    for (Boundary b : {Boundary::Open, Boundary::Periodic}) {
        for (int n = b == Boundary::Open ? 1 : 3; n <= 8; ++n) {
            const SystemParams p = lattice(n, b);
            const double delta = p.detuning();
            const double r = p.dispersive_ratio();
            const Eigen::MatrixXcd s = self_energy(lattice_mode_set(p), p.omega_q);
            const Eigen::MatrixXd approx =
                r * r * (delta * Eigen::MatrixXd::Identity(n, n) - p.J * adjacency_matrix(n, b));
            const double err = (s - approx.cast<cplx>()).cwiseAbs().maxCoeff() / (p.g * p.g * p.J / (delta * delta));
            worst = std::max(worst, err);
        }
    }
    const double bound = 3 * 0.1;
    return {worst < bound, "max ||Sigma - (g/D)^2 (D I - J T)||/(g^2 J/D^2) = " + fmt("%.4f", worst) +
                               " < 3 J/D = " + fmt("%.1f", bound)};
}

Outcome check_conservation() {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double drift = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + trial % 5;
        RateTable rates;
        rates.gamma_up = Eigen::VectorXd::NullaryExpr(n, [&] { return from_ghz(1e-4) * u(rng); });
        for (int i = 0; i < n; ++i) rates.targets.push_back(i + 1);
        const Dissipation diss{from_ghz(1e-5), from_ghz(1e-6), n};
        PopulationState init{u(rng), Eigen::VectorXd::NullaryExpr(n, [&] { return u(rng); })};
        const double total = init.total();
        init.n0 /= total;
        init.nk /= total;
        const Trajectory tr = integrate_rate_equations(init, rates, diss, 20.0 / diss.gamma);
        for (const auto& s : tr.states) drift = std::max(drift, std::abs(s.total() - 1.0));
    }

    double trace_leak = 0.0, herm = 0.0, trace_err = 0.0, min_eig = 0.0;
    for (int n = 2; n <= 5; ++n) {
        for (int m = 1; m <= 3; ++m) {
            const SystemParams p = lattice(n);
            const DriveProfile d0 = drive_spec(DriveKind::Uniform).profile(n, 0.0);
            const double w = optimal_drive_frequency_exact(p, d0, 0, 0, m);
            const DriveProfile d = d0.with_frequency(w);
            const ModeSet modes = build_mode_set(p);
            const EigenSystem es = exact_diagonalization(build_effective_model(p, d), modes, {m, 20000});
            if (es.size() > 48) continue;
            const RateTable rates =
                pump_rates(transition_matrix_elements(modes, d, p, es), {modes.frequencies, p.kappa}, es, w);
            const Eigen::MatrixXcd L = build_liouvillian(es, rates, {Dissipation{p.gamma, p.gamma_phi, n}, 100 * p.kappa});
            const int dim = es.size();
            for (Eigen::Index col = 0; col < L.cols(); ++col) {
                cplx sum = 0.0;
                for (int a = 0; a < dim; ++a) sum += L(a + a * dim, col);
                trace_leak = std::max(trace_leak, std::abs(sum));
            }
            const DensityDiagnostics diag = diagnose(solve_ness(L).rho);
            herm = std::max(herm, diag.hermiticity);
            trace_err = std::max(trace_err, diag.trace_error);
            min_eig = std::min(min_eig, diag.min_eigenvalue);
        }
    }
    const bool pass = drift < 1e-10 && trace_leak < 1e-12 && herm < 1e-12 && trace_err < 1e-10 && min_eig >= -1e-10;
    return {pass, "population drift " + fmt("%.1e", drift) + ", Liouvillian trace leak " + fmt("%.1e", trace_leak) +
                      ", NESS hermiticity " + fmt("%.1e", herm) + ", trace error " + fmt("%.1e", trace_err) +
                      ", min eigenvalue " + fmt("%.1e", min_eig)};
}

SweepConfig disorder_config(DriveKind kind, int k) {
    SweepConfig c = full_range(kind);
    c.range.automatic = true;
    c.range.target = k;
    c.range.mode = k;
    c.targets = {k};
    c.disorder = DisorderSpec{1e-2, 1e-4, 1e-4, 1e-2, 20, 12345};
    return c;
}

Outcome check_disorder_robustness() {
    std::ostringstream out;
    double worst = 0.0;
    out << "uniform drive, 20 samples, mean/clean peak:";
    for (int k = 0; k < 5; ++k) {
        const EnsembleReport r = disorder_ensemble(disorder_config(DriveKind::Uniform, k));
        const double rel = r.summary.mean_peak(0) / r.summary.clean_peak(0);
        worst = std::max(worst, std::abs(rel - 1.0));
        out << " k" << k << " " << fmt("%.3f", rel);
    }
    out << " (single-site diagnostic:";
    for (int k = 0; k < 5; ++k) {
        const EnsembleReport r = disorder_ensemble(disorder_config(DriveKind::SingleSite, k));
        out << " k" << k << " " << fmt("%.3f", r.summary.mean_peak(0) / r.summary.clean_peak(0));
    }
    out << ")";
    return {worst <= 0.10, out.str()};
}

Outcome check_determinism() {
    SweepConfig c = disorder_config(DriveKind::Uniform, 2);
    c.targets.clear();
    c.disorder->n_samples = 4;
    c.range.span_kappa = 10;
    c.range.step_kappa = 0.1;
    const std::string a = format_csv(run_sweep(c, {1}));
    const std::string b = format_csv(run_sweep(c, {0}));

    const std::string path = "acceptance_determinism.csv";
    write_csv(run_sweep(c), path);
    std::string file;
    if (FILE* f = std::fopen(path.c_str(), "rb")) {
        char buf[4096];
        for (std::size_t got; (got = std::fread(buf, 1, sizeof buf, f)) > 0;) file.append(buf, got);
        std::fclose(f);
    }
    std::remove(path.c_str());
    const bool pass = a == b && a == file && !a.empty();
    return {pass, std::to_string(a.size()) + " CSV bytes, runs " + (a == b ? "identical" : "differ") +
                      " across thread counts, file copy " + (a == file ? "identical" : "differs")};
}

std::set<std::string> split(const std::string& s) {
    std::set<std::string> out;
    std::stringstream in(s);
    for (std::string item; std::getline(in, item, ',');) {
        if (!item.empty()) out.insert(item);
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    std::set<std::string> allowed;
    std::string only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--allow-fail" && i + 1 < argc) {
            allowed = split(argv[++i]);
        } else if (arg == "--only" && i + 1 < argc) {
            only = argv[++i];
        } else {
            std::fprintf(stderr, "usage: acceptance [--allow-fail id,...] [--only id]\n");
            return 2;
        }
    }
    set_warning_handler([](const std::string&) {});

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"fidelity_ceiling", check_fidelity_ceiling},
        {"peak_structure", check_peak_structure},
        {"optimal_frequency", check_optimal_frequency},
        {"solver_cross_validation", check_solver_cross_validation},
        {"selection_rules", check_selection_rules},
        {"drive_power_scaling", check_drive_power},
        {"tight_binding_limit", check_tight_binding},
        {"conservation", check_conservation},
        {"disorder_robustness", check_disorder_robustness},
        {"determinism", check_determinism},
    };

    int blocking = 0, failed = 0;
    for (const auto& [id, run] : criteria) {
        if (!only.empty() && id != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool tolerated = !o.pass && allowed.count(id);
        std::printf("%s %s: %s [%.1f s]%s\n", o.pass ? "PASS" : "FAIL", id.c_str(), o.detail.c_str(), secs,
                    tolerated ? " (known open issue)" : "");
        std::fflush(stdout);
        if (!o.pass) {
            ++failed;
            if (!tolerated) ++blocking;
        }
    }
    std::printf("%d of %zu criteria failed, %d blocking\n", failed, only.empty() ? criteria.size() : 1, blocking);
    return blocking == 0 ? 0 : 1;
}
