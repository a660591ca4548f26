// effective.hpp - dispersive XY spin model and its eigensystems
//
// Spin configurations are bitmasks (bit i set = qubit i up). Every EigenSystem
// stores its states as columns over an explicit list of such configurations, so
// truncated perturbative systems and exact diagonalizations share one layout.

#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wsf/common.hpp"
#include "wsf/model.hpp"

namespace wsf {

// Bare levels closer than this (rad/ns) are treated as degenerate.
inline constexpr double degeneracy_threshold = 1e-9;

struct EffectiveSpinModel {
    int n_sites{0};
    Boundary boundary{Boundary::Open};
    bool homogeneous{true};

    Eigen::Matrix3Xd h_fields;    // column i: (h^x, h^y, h^z) of site i
    double xy_coupling{0.0};      // nominal J (g/Delta)^2
    double delta_q{0.0};          // omega_q - omega_d
    double stark_shift{0.0};      // g^2 / Delta
    double omega_d{0.0};

    std::vector<std::pair<int, int>> bonds;
    Eigen::VectorXd bond_couplings; // local XY exchange on each bond

    // Coefficient c_i of sigma_i^+ in the drive term, c_i = (g_i/Delta_i) eps_i.
    cplx drive_coupling(int site) const {
        return 0.5 * cplx(h_fields(0, site), -h_fields(1, site));
    }
    Eigen::VectorXcd drive_couplings() const;
};

EffectiveSpinModel build_effective_model(const SystemParams& params, const DriveProfile& drive);

struct StateLabel {
    int excitations{0};
    std::optional<double> wavevector;
    std::optional<int> parity; // +1 / -1 for drive-selected periodic pairs
    int slot{-1};              // mode slot of a single-excitation state, -1 otherwise
};

struct EigenSystem {
    int n_sites{0};
    std::vector<std::uint32_t> basis; // spin configurations spanning the state columns
    Eigen::VectorXd energies;
    Eigen::MatrixXcd states;
    std::vector<StateLabel> labels;
    bool degeneracy_unresolved{false};

    int size() const { return static_cast<int>(energies.size()); }
    int ground_index() const;
    // Index of the single-excitation state occupying a mode slot, -1 if none.
    int slot_index(int slot) const;
    std::vector<int> manifold(int excitations) const;
    int max_excitations() const;
    // Position of a configuration in `basis`, -1 if absent.
    int basis_index(std::uint32_t config) const;
    // Amplitudes of state column `s` on the single-excitation configurations |i>.
    Eigen::VectorXcd single_excitation_amplitudes(int s) const;
};

// Configurations with at most `max_excitations` up spins, ordered by excitation
// number then by value.
std::vector<std::uint32_t> truncated_basis(int n_sites, int max_excitations);

// Rotating-frame H_sigma on an explicit basis, ground configuration at zero energy.
Eigen::MatrixXcd spin_hamiltonian(const EffectiveSpinModel& model,
                                  const std::vector<std::uint32_t>& basis);

// Undriven ground state and single-excitation states |k> = sum_i phi_k*(i)|i>.
EigenSystem single_excitation_spectrum(const EffectiveSpinModel& model, const ModeSet& modes);

// First-order drive dressing of a bare ground + single-excitation system; the
// corrected states are orthonormalized symmetrically. Works for any bare basis
// (plain Bloch states or drive-selected periodic pairs).
EigenSystem dress_single_excitation(const EigenSystem& bare, const EffectiveSpinModel& model);

// Non-degenerate branch. Throws DegenerateSpectrumError on bare gaps below
// degeneracy_threshold.
EigenSystem perturbed_eigensystem(const EffectiveSpinModel& model, const ModeSet& modes);

// Periodic chains: rotates each degenerate {|k>, |2pi-k>} pair into the drive
// bright state |k+> = (|k> + a_k |2pi-k>)/sqrt(1+|a_k|^2), a_k = eps_{2pi-k}/eps_k,
// and its orthogonal dark partner |k->. Energies are the bare ones.
EigenSystem degenerate_pair_states(const EffectiveSpinModel& model, const ModeSet& modes);

// Picks the degenerate or non-degenerate branch and dresses the result.
EigenSystem effective_eigensystem(const EffectiveSpinModel& model, const ModeSet& modes);

struct ExactDiagonalizationOptions {
    int max_excitations{3};
    std::size_t basis_cap{20000};
};

// Full spectrum of H_sigma including drive terms, truncated to at most
// `max_excitations` up spins. Labels carry the dominant excitation number and,
// for single-excitation states, the best-matching mode slot.
EigenSystem exact_diagonalization(const EffectiveSpinModel& model, const ModeSet& modes,
                                  const ExactDiagonalizationOptions& options = {});

} // namespace wsf
