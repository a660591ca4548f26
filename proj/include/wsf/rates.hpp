// rates.hpp - photon-fluctuation spectral functions, two-photon matrix elements and pump rates

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "wsf/common.hpp"
#include "wsf/effective.hpp"
#include "wsf/model.hpp"

namespace wsf {

// Lorentzian spectral function rho_q(w) = (1/pi)(kappa/2)/((w - w_q)^2 + (kappa/2)^2).
template <typename Scalar>
Scalar lorentzian(Scalar omega, Scalar center, Scalar kappa) {
    const Scalar half = kappa / Scalar(2);
    const Scalar d = omega - center;
    return half / (std::numbers::pi_v<Scalar> * (d * d + half * half));
}

struct SpectralFunction {
    Eigen::VectorXd mode_frequencies;
    double kappa{0.0};

    double operator()(int q, double omega) const {
        return lorentzian(omega, mode_frequencies(q), kappa);
    }
};

// f_{k k' k''} = sum_i phi_k(i) phi_k'*(i) phi_k''*(i).
class ModeOverlapTensor {
public:
    explicit ModeOverlapTensor(int n) : n_(n), data_(std::size_t(n) * n * n) {}

    int size() const { return n_; }
    cplx& operator()(int k, int k1, int k2) { return data_[index(k, k1, k2)]; }
    cplx operator()(int k, int k1, int k2) const { return data_[index(k, k1, k2)]; }

private:
    std::size_t index(int k, int k1, int k2) const {
        return (std::size_t(k) * n_ + std::size_t(k1)) * n_ + std::size_t(k2);
    }
    int n_;
    std::vector<cplx> data_;
};

ModeOverlapTensor mode_overlap_tensor(const ModeSet& modes);

// Two-photon matrix elements for every single-excitation state of an eigensystem.
// `amplitudes(t, q)` is the complex amplitude before the modulus; `magnitudes`
// holds Lambda_{t q} >= 0. Row t refers to eigensystem state `targets[t]`.
struct TransitionElements {
    std::vector<int> targets;
    Eigen::MatrixXcd amplitudes;
    Eigen::MatrixXd magnitudes;
};

// Bloch-basis amplitudes
//   A_kq = (1 + 2 Delta/Delta_c) (1/Delta_q) (g/Delta)^3 sum_{k'k''q'} f_{kk'k''} f*_{q'qk'} eps_k'' eps_q'
// with Delta_c = omega_d - omega_c and Delta_q = omega_q - omega_d. With site
// disorder the site-local prefactor is folded into the drive amplitudes.
Eigen::MatrixXcd bloch_transition_amplitudes(const ModeSet& modes, const DriveProfile& drive,
                                             const SystemParams& params);

// Projects the Bloch amplitudes onto each single-excitation eigenstate s:
// A_sq = sum_k <s|k> A_kq.
TransitionElements transition_matrix_elements(const ModeSet& modes, const DriveProfile& drive,
                                              const SystemParams& params,
                                              const EigenSystem& eigensystem);

struct RateTable {
    std::vector<int> targets;      // eigensystem indices of the pumped states
    Eigen::VectorXd gamma_up;      // Gamma_{0 -> target}
    Eigen::MatrixXd matrix_elements;
    double drive_frequency{0.0};
};

// Gamma_{0->s} = 2 pi sum_q Lambda_sq^2 rho_q(omega_d + E_0 - E_s).
RateTable pump_rates(const TransitionElements& elements, const SpectralFunction& spectral,
                     const EigenSystem& eigensystem, double omega_d);

// Modes -> effective eigensystem -> matrix elements -> rates, at drive.omega_d.
struct RatePipeline {
    ModeSet modes;
    EffectiveSpinModel model;
    EigenSystem eigensystem;
    TransitionElements elements;
    RateTable rates;
};
RatePipeline compute_rates(const SystemParams& params, const DriveProfile& drive);

// Drive frequency satisfying omega_d + E_0 - E_k = omega_{q0} for the state in
// mode slot `target_slot`, pumping through mode `q0`. Solves the condition to a
// fixed point in Delta_q. Throws Error when Lambda_{k q0} vanishes.
double optimal_drive_frequency(const SystemParams& params, const DriveProfile& drive,
                               int target_slot, int q0);

// Same condition with the energies taken from exact diagonalization of H_sigma
// truncated at `max_excitations`.
double optimal_drive_frequency_exact(const SystemParams& params, const DriveProfile& drive,
                                     int target_slot, int q0, int max_excitations);

// Closed-form optimum for the uniform lattice evaluated with Delta_q taken at
// `omega_ref`:
//   (w_q + dw_q + w_c)/2 - J cos q0 + (g/D)^2 [-J cos k + (1/2) sum_q |eps_q|^2/Delta_q
//                                              + (1/2) |eps_k|^2/Delta_q].
double optimal_drive_frequency_closed_form(const SystemParams& params, const DriveProfile& drive,
                                           int target_slot, int q0, double omega_ref);

} // namespace wsf
