// model.hpp - driven Jaynes-Cummings cavity array: parameters, Bloch modes, drive transforms

#pragma once

#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "wsf/common.hpp"

namespace wsf {

enum class Boundary { Open, Periodic };

// Additive per-site deviations from the nominal lattice parameters (rad/ns).
// Each array is either empty or has length n_sites. d_J(b) applies to the bond
// (b, b+1 mod N); for open chains the last entry is unused.
struct SiteOverrides {
    Eigen::VectorXd d_omega_c;
    Eigen::VectorXd d_omega_q;
    Eigen::VectorXd d_g;
    Eigen::VectorXd d_J;
};

struct SystemParams {
    int n_sites{1};
    double omega_c{0.0};   // cavity frequency
    double omega_q{0.0};   // qubit splitting
    double g{0.0};         // light-matter coupling
    double J{0.0};         // nearest-neighbour photon hopping
    double kappa{0.0};     // cavity decay (same for every Bloch mode)
    double gamma{0.0};     // qubit relaxation
    double gamma_phi{0.0}; // qubit pure dephasing
    Boundary boundary{Boundary::Open};
    std::optional<SiteOverrides> overrides;

    double detuning() const { return omega_q - omega_c; }
    double dispersive_ratio() const { return g / detuning(); }

    // Throws ConfigError when an invariant is broken; warns when g/Delta > 0.2.
    void validate() const;

    // True when no override entry is non-zero.
    bool homogeneous() const;
    // True when the photonic lattice (cavity frequencies and hoppings) is uniform.
    bool photonic_homogeneous() const;

    double cavity_frequency(int site) const;
    double qubit_frequency(int site) const;
    double coupling(int site) const;
    double hopping(int bond) const;

    int bond_count() const;
    std::pair<int, int> bond(int b) const { return {b, (b + 1) % n_sites}; }
};

// Complex per-site amplitudes with the drive phases already folded in.
struct DriveProfile {
    Eigen::VectorXcd amplitudes;
    double omega_d{0.0};

    static DriveProfile uniform(int n_sites, cplx amplitude, double omega_d);
    static DriveProfile single_site(int n_sites, int site, cplx amplitude, double omega_d);

    DriveProfile with_frequency(double w) const { return {amplitudes, w}; }
    DriveProfile scaled(double factor) const { return {amplitudes * factor, omega_d}; }
};

// Photonic Bloch modes. Row n of `profiles` holds phi_n(j); modes are stored in
// ascending frequency, ties broken by ascending wavevector.
struct ModeSet {
    Eigen::VectorXd wavevectors;
    Eigen::MatrixXcd profiles;
    Eigen::VectorXd frequencies;
    Boundary boundary{Boundary::Open};
    bool analytic{true};

    int size() const { return static_cast<int>(frequencies.size()); }
};

// Analytic plane-wave / standing-wave modes for a uniform photonic lattice,
// numeric diagonalization of the hopping matrix otherwise.
ModeSet build_mode_set(const SystemParams& params);

// Always diagonalizes the N x N tight-binding matrix. The returned wavevectors
// are the nominal ones of the uniform lattice, in the same frequency order.
ModeSet build_mode_set_numeric(const SystemParams& params);

// Real symmetric single-photon hopping matrix (diagonal omega_c(i), -J on bonds).
Eigen::MatrixXd hopping_matrix(const SystemParams& params);

// Bond-multiplicity adjacency matrix T with hopping_matrix = diag(omega_c) - J T.
Eigen::MatrixXd adjacency_matrix(int n_sites, Boundary boundary);

// eps_k = sum_j phi_k(j) eps_j.
Eigen::VectorXcd drive_to_mode_basis(const DriveProfile& drive, const ModeSet& modes);

// Classical cavity field a_k = eps_k / (omega_d - omega_k + i kappa / 2).
Eigen::VectorXcd mean_field_amplitudes(const DriveProfile& drive, const ModeSet& modes,
                                       double kappa);

} // namespace wsf
