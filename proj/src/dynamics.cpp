#include "wsf/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace wsf {
namespace {

Eigen::VectorXd pack(const PopulationState& s) {
    Eigen::VectorXd y(s.nk.size() + 1);
    y(0) = s.n0;
    y.tail(s.nk.size()) = s.nk;
    return y;
}

PopulationState unpack(const Eigen::VectorXd& y) {
    return PopulationState{y(0), y.tail(y.size() - 1)};
}

void check_sizes(const PopulationState& state, const RateTable& rates, const Dissipation& diss) {
    if (state.nk.size() != rates.gamma_up.size()) throw Error("population and rate table sizes differ");
    if (diss.n_sites != rates.gamma_up.size()) {
        throw Error("dephasing normalization N must equal the number of single-excitation states");
    }
}

// Generator matrix M with dy/dt = M y for y = (n0, n1, ..., nN).
Eigen::MatrixXd rate_generator(const RateTable& rates, const Dissipation& diss) {
    const auto n = rates.gamma_up.size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 1, n + 1);
    const double deph = 2.0 * diss.gamma_phi / diss.n_sites;
    m(0, 0) = -rates.gamma_up.sum();
    for (Eigen::Index k = 0; k < n; ++k) {
        m(0, k + 1) = diss.gamma;
        m(k + 1, 0) = rates.gamma_up(k);
        m(k + 1, k + 1) = -diss.gamma - deph * double(n);
        for (Eigen::Index q = 0; q < n; ++q) m(k + 1, q + 1) += deph;
    }
    return m;
}

// Adds rate * D[|a><b|].
void add_transition(Eigen::MatrixXcd& L, int d, int a, int b, double rate) {
    if (rate == 0.0) return;
    L(a + a * d, b + b * d) += rate;
    for (int y = 0; y < d; ++y) {
        L(b + y * d, b + y * d) -= 0.5 * rate;
        L(y + b * d, y + b * d) -= 0.5 * rate;
    }
}

struct Transition {
    int from; // ket index (column of the operator)
    int to;   // bra index (row)
    double frequency;
    cplx amplitude;
};

// Groups transitions into jump operators whose Bohr frequencies lie within
// `window` of their neighbours; window <= 0 keeps everything in one operator.
std::vector<Eigen::MatrixXcd> secular_operators(std::vector<Transition> transitions, int d,
                                                double window) {
    std::vector<Eigen::MatrixXcd> ops;
    std::sort(transitions.begin(), transitions.end(),
              [](const Transition& x, const Transition& y) { return x.frequency < y.frequency; });
    Eigen::MatrixXcd current = Eigen::MatrixXcd::Zero(d, d);
    bool open = false;
    double last = 0.0;
    for (const auto& t : transitions) {
        if (open && window > 0.0 && t.frequency - last > window) {
            ops.push_back(current);
            current.setZero();
        }
        current(t.to, t.from) += t.amplitude;
        last = t.frequency;
        open = true;
    }
    if (open) ops.push_back(current);
    return ops;
}

Eigen::MatrixXcd config_operator(const EigenSystem& es, int site, bool lowering) {
    const auto dim = Eigen::Index(es.basis.size());
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(dim, dim);
    const std::uint32_t bit = std::uint32_t{1} << site;
    for (Eigen::Index b = 0; b < dim; ++b) {
        const std::uint32_t c = es.basis[std::size_t(b)];
        if (!lowering) {
            op(b, b) = (c & bit) ? 1.0 : -1.0;
        } else if (c & bit) {
            const int a = es.basis_index(c ^ bit);
            if (a >= 0) op(a, b) = 1.0;
        }
    }
    return es.states.adjoint() * op * es.states;
}

Eigen::MatrixXcd to_matrix(const Eigen::VectorXcd& v, int d) {
    return Eigen::Map<const Eigen::MatrixXcd>(v.data(), d, d);
}

Eigen::VectorXcd to_vector(const Eigen::MatrixXcd& m) {
    return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size());
}

DensityMatrix normalized(const Eigen::MatrixXcd& m) {
    Eigen::MatrixXcd h = 0.5 * (m + m.adjoint());
    const cplx tr = h.trace();
    if (std::abs(tr) == 0.0) throw SolverError("steady state has zero trace");
    return DensityMatrix{h / tr.real()};
}

NessSolution propagate(const Eigen::MatrixXcd& L, int d, int start) {
    Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(d, d);
    rho0(start, start) = 1.0;
    Eigen::VectorXcd v = to_vector(rho0);
    const double norm = L.cwiseAbs().maxCoeff();
    if (norm == 0.0) throw SolverError("zero Liouvillian has no unique steady state");
    Eigen::MatrixXcd P = (L * (1.0 / norm)).exp();
    Eigen::VectorXcd prev = P * v;
    // Rounding slowly pushes the stationary eigenvalue of P off 1, and repeated
    // squaring amplifies that drift. Keep the iterate with the smallest change.
    Eigen::VectorXcd best = prev;
    double best_change = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 120; ++k) {
        P = P * P;
        Eigen::VectorXcd next = P * v;
        const double change = (next - prev).cwiseAbs().maxCoeff();
        prev = std::move(next);
        if (!prev.allFinite()) break;
        if (change < best_change) {
            best_change = change;
            best = prev;
        } else if (best_change < 1e-6 && change > 100.0 * best_change) {
            break;
        }
        if (change < 1e-14) break;
    }
    if (!(best_change < 1e-6)) throw SolverError("propagation did not reach a steady state");
    NessSolution out;
    out.rho = normalized(to_matrix(best, d));
    out.residual = (L * to_vector(out.rho.entries)).cwiseAbs().maxCoeff();
    out.solver = SolverKind::LindbladPropagation;
    return out;
}

} // namespace

PopulationState ness_closed_form(const RateTable& rates, const Dissipation& diss) {
    if (!(diss.gamma > 0.0)) throw Error("gamma must be positive for a steady state to exist");
    if (diss.n_sites != rates.gamma_up.size()) {
        throw Error("dephasing normalization N must equal the number of single-excitation states");
    }
    const double total = rates.gamma_up.sum();
    const double dephase = 2.0 * diss.gamma_phi / diss.gamma;
    PopulationState s;
    s.nk = (rates.gamma_up.array() + (dephase / diss.n_sites) * total) /
           ((1.0 + dephase) * (diss.gamma + total));
    s.n0 = 1.0 - s.nk.sum();
    return s;
}

PopulationState rate_equation_rhs(const PopulationState& state, const RateTable& rates,
                                  const Dissipation& diss) {
    check_sizes(state, rates, diss);
    return unpack(rate_generator(rates, diss) * pack(state));
}

double fidelity_ceiling(const Dissipation& diss) {
    return (diss.gamma + 2.0 * diss.gamma_phi / diss.n_sites) / (diss.gamma + 2.0 * diss.gamma_phi);
}

Trajectory integrate_rate_equations(const PopulationState& initial, const RateTable& rates,
                                    const Dissipation& diss, double t_final,
                                    const IntegrationControl& control) {
    check_sizes(initial, rates, diss);
    const Eigen::MatrixXd m = rate_generator(rates, diss);
    auto f = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd { return m * y; };

    // Dormand-Prince 5(4) tableau.
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                     b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;
    (void)c2; (void)c3; (void)c4; (void)c5; // autonomous system

    Trajectory traj;
    Eigen::VectorXd y = pack(initial);
    double t = 0.0;
    const double fastest = m.cwiseAbs().maxCoeff();
    double h = control.initial_step > 0.0 ? control.initial_step
                                          : (fastest > 0.0 ? 0.01 / fastest : t_final);
    h = std::min(h, t_final);
    if (control.record) {
        traj.times.push_back(t);
        traj.states.push_back(initial);
    }
    Eigen::VectorXd k1 = f(y);
    while (t < t_final) {
        if (t + h > t_final) h = t_final - t;
        const Eigen::VectorXd k2 = f(y + h * a21 * k1);
        const Eigen::VectorXd k3 = f(y + h * (a31 * k1 + a32 * k2));
        const Eigen::VectorXd k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const Eigen::VectorXd k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Eigen::VectorXd k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Eigen::VectorXd y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Eigen::VectorXd k7 = f(y_new);
        const Eigen::VectorXd err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double err_norm = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double sc = control.atol + control.rtol * std::max(std::abs(y(i)), std::abs(y_new(i)));
            err_norm = std::max(err_norm, std::abs(err(i)) / sc);
        }
        if (err_norm <= 1.0) {
            t += h;
            y = y_new;
            k1 = k7;
            ++traj.steps;
            if (control.record) {
                traj.times.push_back(t);
                traj.states.push_back(unpack(y));
            }
        }
        const double factor = err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
        h *= factor;
        if (t < t_final && h < control.min_step) {
            std::ostringstream msg;
            msg << "rate-equation step size underflow at t = " << t;
            throw SolverError(msg.str());
        }
    }
    traj.final_state = unpack(y);
    return traj;
}

void add_dissipator(Eigen::MatrixXcd& L, const Eigen::MatrixXcd& X, double rate) {
    if (rate == 0.0) return;
    const auto d = X.rows();
    struct Entry {
        Eigen::Index row, col;
        cplx value;
    };
    std::vector<Entry> nz;
    for (Eigen::Index c = 0; c < d; ++c) {
        for (Eigen::Index r = 0; r < d; ++r) {
            if (X(r, c) != cplx(0.0, 0.0)) nz.push_back({r, c, X(r, c)});
        }
    }
    // X rho X^dagger: (a,c) <- (b,e) with X_ab conj(X_ce)
    for (const auto& p : nz) {
        for (const auto& q : nz) {
            L(p.row + q.row * d, p.col + q.col * d) += rate * p.value * std::conj(q.value);
        }
    }
    const Eigen::MatrixXcd K = X.adjoint() * X;
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = 0; b < d; ++b) {
            const cplx k = K(a, b);
            if (k == cplx(0.0, 0.0)) continue;
            for (Eigen::Index c = 0; c < d; ++c) {
                L(a + c * d, b + c * d) -= 0.5 * rate * k; // K rho
                L(c + b * d, c + a * d) -= 0.5 * rate * k; // rho K
            }
        }
    }
}

Eigen::MatrixXcd build_liouvillian(const EigenSystem& es, const RateTable& rates,
                                   const LindbladOptions& options) {
    const int d = es.size();
    if (std::size_t(d) > options.max_dimension) {
        std::ostringstream msg;
        msg << "Liouvillian dimension " << d << " exceeds the cap of " << options.max_dimension;
        throw SolverError(msg.str());
    }
    const Dissipation& diss = options.dissipation;
    Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(d * d, d * d);
    for (int a = 0; a < d; ++a) {
        for (int c = 0; c < d; ++c) {
            L(a + c * d, a + c * d) += cplx(0.0, -(es.energies(a) - es.energies(c)));
        }
    }

    const int g0 = es.ground_index();
    const std::vector<int> ones = es.manifold(1);
    for (std::size_t t = 0; t < rates.targets.size(); ++t) {
        add_transition(L, d, rates.targets[t], g0, rates.gamma_up(Eigen::Index(t)));
    }
    for (int s : ones) add_transition(L, d, g0, s, diss.gamma);
    const double deph = 2.0 * diss.gamma_phi / diss.n_sites;
    for (int k : ones) {
        for (int q : ones) add_transition(L, d, q, k, deph);
    }

    const int top = es.max_excitations();
    if (top < 2) return L;
    for (int i = 0; i < es.n_sites; ++i) {
        const Eigen::MatrixXcd lower = config_operator(es, i, true);
        const Eigen::MatrixXcd sz = config_operator(es, i, false);
        std::vector<Transition> decays;
        for (int m = 2; m <= top; ++m) {
            const std::vector<int> upper = es.manifold(m);
            const std::vector<int> below = es.manifold(m - 1);
            for (int b : upper) {
                for (int a : below) {
                    if (std::abs(lower(a, b)) > 1e-14) {
                        decays.push_back({b, a, es.energies(b) - es.energies(a), lower(a, b)});
                    }
                }
            }
            std::vector<Transition> dephasing;
            for (int b : upper) {
                for (int a : upper) {
                    if (std::abs(sz(a, b)) > 1e-14) {
                        dephasing.push_back({b, a, es.energies(b) - es.energies(a), sz(a, b)});
                    }
                }
            }
            for (const auto& X : secular_operators(dephasing, d, options.secular_window)) {
                add_dissipator(L, X, 0.5 * diss.gamma_phi);
            }
        }
        for (const auto& X : secular_operators(decays, d, options.secular_window)) {
            add_dissipator(L, X, diss.gamma);
        }
    }
    return L;
}

const char* solver_name(SolverKind kind) {
    switch (kind) {
    case SolverKind::RateClosedForm: return "rate";
    case SolverKind::RateODE: return "rate-ode";
    case SolverKind::LindbladNullSpace: return "lindblad";
    case SolverKind::LindbladPropagation: return "lindblad-propagation";
    }
    return "unknown";
}

NessSolution solve_ness(const Eigen::MatrixXcd& L, const NessOptions& options) {
    const auto n = L.rows();
    const int d = int(std::lround(std::sqrt(double(n))));
    if (L.cols() != n || Eigen::Index(d) * d != n) throw Error("Liouvillian must be square of size d^2");

    if (options.method == NessOptions::Method::Propagation) return propagate(L, d, options.initial_state);

    Eigen::MatrixXcd A = L;
    A.row(0).setZero();
    for (int a = 0; a < d; ++a) A(0, a + a * d) = 1.0;
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    rhs(0) = 1.0;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    const Eigen::VectorXcd x = lu.solve(rhs);
    // The rcond estimate misses exactly singular systems: Eigen skips zero pivots
    // and still returns a finite solution, so the pivots are checked directly.
    const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
    const bool well_posed = lu.rcond() * options.condition_guard > 1.0 &&
                            pivots.minCoeff() * options.condition_guard > pivots.maxCoeff() && x.allFinite() &&
                            (A * x - rhs).cwiseAbs().maxCoeff() < 1e-8;
    if (!well_posed) {
        Eigen::FullPivLU<Eigen::MatrixXcd> full(L);
        full.setThreshold(options.kernel_tolerance);
        const auto kernel = full.dimensionOfKernel();
        if (kernel > 1) {
            std::ostringstream msg;
            msg << "steady state is not unique: Liouvillian kernel has dimension " << kernel;
            throw SolverError(msg.str());
        }
        if (options.method == NessOptions::Method::NullSpace) {
            throw SolverError("trace-constrained Liouvillian is ill-conditioned");
        }
        return propagate(L, d, options.initial_state);
    }
    NessSolution out;
    out.rho = normalized(to_matrix(x, d));
    out.residual = (L * to_vector(out.rho.entries)).cwiseAbs().maxCoeff();
    out.solver = SolverKind::LindbladNullSpace;
    return out;
}

double fidelity(const DensityMatrix& rho, const Eigen::VectorXcd& target) {
    if (target.size() != rho.dim()) throw Error("target state dimension does not match rho");
    const double f = target.dot(rho.entries * target).real();
    return std::clamp(f, 0.0, 1.0);
}

DensityDiagnostics diagnose(const DensityMatrix& rho) {
    DensityDiagnostics out;
    out.hermiticity = (rho.entries - rho.entries.adjoint()).cwiseAbs().maxCoeff();
    out.trace_error = std::abs(rho.entries.trace() - cplx(1.0, 0.0));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(0.5 * (rho.entries + rho.entries.adjoint()),
                                                           Eigen::EigenvaluesOnly);
    out.min_eigenvalue = solver.eigenvalues().minCoeff();
    return out;
}

} // namespace wsf
