// Shared parameter sets for the test suites.
#pragma once

#include "wsf/model.hpp"

namespace wsf::testing {

// eps = 0.3, omega_c = 6, Delta = 1, g = J = 0.1, kappa = 1e-4, gamma = 1e-5,
// gamma_phi = 1e-6, all in units of 2 pi GHz.
inline SystemParams reference_lattice(int n, Boundary boundary = Boundary::Open) {
    SystemParams p;
    p.n_sites = n;
    p.omega_c = from_ghz(6.0);
    p.omega_q = from_ghz(7.0);
    p.g = from_ghz(0.1);
    p.J = from_ghz(0.1);
    p.kappa = from_ghz(1e-4);
    p.gamma = from_ghz(1e-5);
    p.gamma_phi = from_ghz(1e-6);
    p.boundary = boundary;
    return p;
}

inline constexpr double reference_amplitude_ghz = 0.3;

} // namespace wsf::testing
