// dynamics.hpp - population rate equations, Lindblad generator and steady states

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "wsf/common.hpp"
#include "wsf/effective.hpp"
#include "wsf/rates.hpp"

namespace wsf {

struct PopulationState {
    double n0{1.0};
    Eigen::VectorXd nk; // same order as RateTable::targets

    double total() const { return n0 + nk.sum(); }
};

struct Dissipation {
    double gamma{0.0};
    double gamma_phi{0.0};
    int n_sites{1};
};

// Closed-form steady state of the rate equations. Throws when gamma = 0.
PopulationState ness_closed_form(const RateTable& rates, const Dissipation& diss);

// dn0/dt = gamma sum_q n_q - sum_q Gamma_q n0
// dnk/dt = -gamma nk + Gamma_k n0 + (2 gamma_phi / N) sum_q (n_q - n_k)
PopulationState rate_equation_rhs(const PopulationState& state, const RateTable& rates,
                                  const Dissipation& diss);

// n_max = (gamma + 2 gamma_phi/N) / (gamma + 2 gamma_phi).
double fidelity_ceiling(const Dissipation& diss);

struct IntegrationControl {
    double rtol{1e-9};
    double atol{1e-12};
    double initial_step{0.0}; // 0 picks a step from the fastest rate
    double min_step{1e-14};
    bool record{true};
};

struct Trajectory {
    std::vector<double> times;
    std::vector<PopulationState> states;
    PopulationState final_state;
    int steps{0};
};

// Adaptive Dormand-Prince 5(4) integration of the rate equations.
Trajectory integrate_rate_equations(const PopulationState& initial, const RateTable& rates,
                                    const Dissipation& diss, double t_final,
                                    const IntegrationControl& control = {});

struct LindbladOptions {
    Dissipation dissipation;
    // Transitions whose Bohr frequencies differ by more than this are kept in
    // separate jump operators (100 kappa).
    double secular_window{0.0};
    std::size_t max_dimension{48}; // d; the dense generator is d^2 x d^2
};

// Superoperator on column-major vec(rho), in the eigenbasis of H_sigma:
//   pump     Gamma_k D[|k><0|]
//   decay    gamma D[|0><k|] between the ground and single-excitation states,
//            per-site sigma^- matrix elements between higher adjacent manifolds
//   dephase  (2 gamma_phi/N) sum_{kq} D[|q><k|] in the single-excitation manifold,
//            per-site sigma^z at rate gamma_phi/2 inside higher manifolds
Eigen::MatrixXcd build_liouvillian(const EigenSystem& eigensystem, const RateTable& rates,
                                   const LindbladOptions& options);

// Adds rate * D[X] to a superoperator acting on d x d matrices.
void add_dissipator(Eigen::MatrixXcd& L, const Eigen::MatrixXcd& X, double rate);

struct DensityMatrix {
    Eigen::MatrixXcd entries;

    int dim() const { return int(entries.rows()); }
    double trace() const { return entries.trace().real(); }
};

enum class SolverKind { RateClosedForm, RateODE, LindbladNullSpace, LindbladPropagation };
const char* solver_name(SolverKind kind);

struct NessOptions {
    enum class Method { Auto, NullSpace, Propagation };
    Method method{Method::Auto};
    double condition_guard{1e12};
    double kernel_tolerance{1e-10};
    int initial_state{0}; // basis index used as the propagation starting point
};

struct NessSolution {
    DensityMatrix rho;
    double residual{0.0}; // max |L rho|
    SolverKind solver{SolverKind::LindbladNullSpace};
};

// Null-space solve with the trace row constraint; falls back to long-time
// propagation if the constrained system is ill-conditioned. Throws SolverError
// listing the kernel dimension when the steady state is not unique.
NessSolution solve_ness(const Eigen::MatrixXcd& liouvillian, const NessOptions& options = {});

// <psi|rho|psi>, clamped to [0, 1].
double fidelity(const DensityMatrix& rho, const Eigen::VectorXcd& target);

// Max deviation from Hermiticity, trace error and most negative eigenvalue.
struct DensityDiagnostics {
    double hermiticity{0.0};
    double trace_error{0.0};
    double min_eigenvalue{0.0};
};
DensityDiagnostics diagnose(const DensityMatrix& rho);

} // namespace wsf
