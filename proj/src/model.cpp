#include "wsf/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace wsf {
namespace {

double override_at(const std::optional<SiteOverrides>& ov, Eigen::VectorXd SiteOverrides::*field,
                   int i) {
    if (!ov) return 0.0;
    const Eigen::VectorXd& v = (*ov).*field;
    return v.size() == 0 ? 0.0 : v(i);
}

bool all_zero(const Eigen::VectorXd& v) { return v.size() == 0 || v.isZero(0.0); }

void check_length(const Eigen::VectorXd& v, int n, const char* name) {
    if (v.size() != 0 && v.size() != n) {
        std::ostringstream msg;
        msg << "override array " << name << " has length " << v.size() << ", expected " << n;
        throw ConfigError(msg.str());
    }
    if (v.size() != 0 && !v.allFinite()) {
        throw ConfigError(std::string("override array ") + name + " has non-finite entries");
    }
}

// Ascending frequency; ties (|cos k - cos k'| below 1e-12) resolved by ascending k.
std::vector<int> mode_order(const Eigen::VectorXd& k, double J) {
    std::vector<int> order(static_cast<std::size_t>(k.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const double ca = std::cos(k(a));
        const double cb = std::cos(k(b));
        if (J > 0.0 && std::abs(ca - cb) > 1e-12) return ca > cb;
        return k(a) < k(b);
    });
    return order;
}

Eigen::VectorXd nominal_wavevectors(int n, Boundary boundary) {
    Eigen::VectorXd k(n);
    for (int i = 0; i < n; ++i) {
        k(i) = boundary == Boundary::Periodic ? two_pi * i / n
                                              : std::numbers::pi * (i + 1) / (n + 1);
    }
    return k;
}

} // namespace

void SystemParams::validate() const {
    if (n_sites < 1) throw ConfigError("n_sites must be >= 1");
    const double values[] = {omega_c, omega_q, g, J, kappa, gamma, gamma_phi};
    for (double v : values) {
        if (!std::isfinite(v)) throw ConfigError("system parameters must be finite");
        if (v < 0.0) throw ConfigError("rates, couplings and frequencies must be non-negative");
    }
    if (detuning() <= 0.0) {
        throw ConfigError("qubit-cavity detuning omega_q - omega_c must be positive");
    }
    const double ratio = dispersive_ratio();
    if (ratio > 0.5) {
        std::ostringstream msg;
        msg << "g/Delta = " << ratio << " is outside the dispersive regime (limit 0.5)";
        throw ConfigError(msg.str());
    }
    if (ratio > 0.2) warn("g/Delta = " + std::to_string(ratio) + " exceeds 0.2");
    if (overrides) {
        check_length(overrides->d_omega_c, n_sites, "d_omega_c");
        check_length(overrides->d_omega_q, n_sites, "d_omega_q");
        check_length(overrides->d_g, n_sites, "d_g");
        check_length(overrides->d_J, n_sites, "d_J");
        for (int i = 0; i < n_sites; ++i) {
            if (qubit_frequency(i) - cavity_frequency(i) <= 0.0) {
                throw ConfigError("local detuning must stay positive on every site");
            }
        }
    }
}

bool SystemParams::homogeneous() const {
    if (!overrides) return true;
    return all_zero(overrides->d_omega_c) && all_zero(overrides->d_omega_q) &&
           all_zero(overrides->d_g) && all_zero(overrides->d_J);
}

bool SystemParams::photonic_homogeneous() const {
    if (!overrides) return true;
    return all_zero(overrides->d_omega_c) && all_zero(overrides->d_J);
}

double SystemParams::cavity_frequency(int site) const {
    return omega_c + override_at(overrides, &SiteOverrides::d_omega_c, site);
}

double SystemParams::qubit_frequency(int site) const {
    return omega_q + override_at(overrides, &SiteOverrides::d_omega_q, site);
}

double SystemParams::coupling(int site) const {
    return g + override_at(overrides, &SiteOverrides::d_g, site);
}

double SystemParams::hopping(int b) const {
    return J + override_at(overrides, &SiteOverrides::d_J, b);
}

int SystemParams::bond_count() const {
    return boundary == Boundary::Periodic ? n_sites : n_sites - 1;
}

DriveProfile DriveProfile::uniform(int n_sites, cplx amplitude, double omega_d) {
    return {Eigen::VectorXcd::Constant(n_sites, amplitude), omega_d};
}

DriveProfile DriveProfile::single_site(int n_sites, int site, cplx amplitude, double omega_d) {
    if (site < 0 || site >= n_sites) throw ConfigError("driven site index out of range");
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(n_sites);
    a(site) = amplitude;
    return {a, omega_d};
}

Eigen::MatrixXd adjacency_matrix(int n_sites, Boundary boundary) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n_sites, n_sites);
    const int bonds = boundary == Boundary::Periodic ? n_sites : n_sites - 1;
    for (int b = 0; b < bonds; ++b) {
        const int i = b;
        const int j = (b + 1) % n_sites;
        t(i, j) += 1.0;
        t(j, i) += 1.0;
    }
    return t;
}

Eigen::MatrixXd hopping_matrix(const SystemParams& params) {
    const int n = params.n_sites;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) h(i, i) = params.cavity_frequency(i);
    for (int b = 0; b < params.bond_count(); ++b) {
        const auto [i, j] = params.bond(b);
        h(i, j) -= params.hopping(b);
        h(j, i) -= params.hopping(b);
    }
    return h;
}

ModeSet build_mode_set_numeric(const SystemParams& params) {
    if (params.n_sites < 1) throw ConfigError("n_sites must be >= 1");
    const int n = params.n_sites;
    for (int b = 0; b < params.bond_count(); ++b) {
        if (!std::isfinite(params.hopping(b))) throw ConfigError("non-finite hopping");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hopping_matrix(params));
    if (solver.info() != Eigen::Success) throw SolverError("hopping matrix diagonalization failed");

    ModeSet modes;
    modes.boundary = params.boundary;
    modes.analytic = false;
    modes.frequencies = solver.eigenvalues();
    modes.profiles.resize(n, n);
    for (int m = 0; m < n; ++m) {
        Eigen::VectorXd v = solver.eigenvectors().col(m);
        // Fix the sign so the first non-negligible component is positive.
        for (int j = 0; j < n; ++j) {
            if (std::abs(v(j)) > 1e-8) {
                if (v(j) < 0.0) v = -v;
                break;
            }
        }
        modes.profiles.row(m) = v.transpose().cast<cplx>();
    }
    const Eigen::VectorXd k = nominal_wavevectors(n, params.boundary);
    const auto order = mode_order(k, params.J);
    modes.wavevectors.resize(n);
    for (int m = 0; m < n; ++m) modes.wavevectors(m) = k(order[static_cast<std::size_t>(m)]);
    return modes;
}

ModeSet build_mode_set(const SystemParams& params) {
    if (params.n_sites < 1) throw ConfigError("n_sites must be >= 1");
    if (!params.photonic_homogeneous()) return build_mode_set_numeric(params);

    const int n = params.n_sites;
    const Eigen::VectorXd k = nominal_wavevectors(n, params.boundary);
    const auto order = mode_order(k, params.J);

    ModeSet modes;
    modes.boundary = params.boundary;
    modes.analytic = true;
    modes.wavevectors.resize(n);
    modes.frequencies.resize(n);
    modes.profiles.resize(n, n);
    const double open_norm = std::sqrt(2.0 / (n + 1));
    for (int m = 0; m < n; ++m) {
        const double km = k(order[static_cast<std::size_t>(m)]);
        modes.wavevectors(m) = km;
        modes.frequencies(m) = params.omega_c - 2.0 * params.J * std::cos(km);
        for (int j = 0; j < n; ++j) {
            modes.profiles(m, j) = params.boundary == Boundary::Periodic
                                       ? std::polar(1.0 / std::sqrt(double(n)), -km * j)
                                       : cplx(open_norm * std::sin(km * (j + 1)), 0.0);
        }
    }
    return modes;
}

Eigen::VectorXcd drive_to_mode_basis(const DriveProfile& drive, const ModeSet& modes) {
    if (drive.amplitudes.size() != modes.size()) {
        throw ConfigError("drive profile length does not match the number of modes");
    }
    return modes.profiles * drive.amplitudes;
}

Eigen::VectorXcd mean_field_amplitudes(const DriveProfile& drive, const ModeSet& modes,
                                       double kappa) {
    const Eigen::VectorXcd eps = drive_to_mode_basis(drive, modes);
    Eigen::VectorXcd a(eps.size());
    for (Eigen::Index k = 0; k < eps.size(); ++k) {
        const cplx denom(drive.omega_d - modes.frequencies(k), 0.5 * kappa);
        if (denom == cplx(0.0, 0.0)) {
            throw SolverError("mean-field amplitude is singular: resonant drive with kappa = 0");
        }
        a(k) = eps(k) / denom;
    }
    return a;
}

} // namespace wsf
