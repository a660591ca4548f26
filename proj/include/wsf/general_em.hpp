// general_em.hpp - photon-mediated interactions for an arbitrary set of EM modes

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wsf/common.hpp"
#include "wsf/model.hpp"

namespace wsf {

struct EMModeSet {
    Eigen::VectorXd frequencies; // omega_n
    Eigen::MatrixXcd profiles;   // (mode n, qubit i) -> phi_n(x_i)
    Eigen::VectorXcd couplings;  // g_n

    int mode_count() const { return int(frequencies.size()); }
    int qubit_count() const { return int(profiles.cols()); }
    void validate() const;
};

struct QubitLayout {
    std::vector<double> positions;
    Eigen::VectorXd frequencies;
    double dipole{0.0};

    int size() const { return int(frequencies.size()); }
    void validate() const;
};

// g_n = -mu sqrt(omega_n / (2 eps0)) in natural units.
Eigen::VectorXcd couplings_from_dipole(const Eigen::VectorXd& frequencies, double dipole,
                                       double eps0);

// Bloch modes of a cavity array seen by one qubit per site, with uniform coupling g.
EMModeSet lattice_mode_set(const SystemParams& params);

// Sigma_ij(w) = sum_n |g_n|^2 phi_n(x_i) phi_n*(x_j) / (w + i eta - w_n).
// With eta = 0 a denominator closer than 1e-12 relative to a mode throws Error.
Eigen::MatrixXcd self_energy(const EMModeSet& modes, double omega, double eta = 0.0);

// d Sigma / d omega.
Eigen::MatrixXcd self_energy_derivative(const EMModeSet& modes, double omega, double eta = 0.0);

// Qubit exchange couplings: entry (i, j) is Sigma_ij evaluated at the mean of
// the two qubit frequencies, so the matrix is Hermitian for real arguments.
Eigen::MatrixXcd exchange_matrix(const EMModeSet& modes, const QubitLayout& layout,
                                 double eta = 0.0);

// lambda_{i,mn}(w) = g_n g_m* phi_n(x_i) phi_m*(x_i) / (w + i eta - w_n), indexed (m, n).
Eigen::MatrixXcd stark_vertex(const EMModeSet& modes, double omega, int qubit, double eta = 0.0);

// |W_n> = sum_i phi_n*(x_i) |i>, normalized, as single-excitation site amplitudes.
Eigen::VectorXcd generalized_w_state(const EMModeSet& modes, int mode);

// Reads a JSON mode file (schema in docs/mode_file.md). Frequencies in GHz.
struct ModeFile {
    EMModeSet modes;
    QubitLayout layout;
};
ModeFile load_mode_file(const std::string& path);
ModeFile parse_mode_file(const std::string& json_text);

} // namespace wsf
