#include "wsf/effective.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace wsf {
namespace {

std::uint32_t site_bit(int i) { return std::uint32_t{1} << i; }

// Reorders states by (excitation number, energy), keeping the relative order of
// exact ties.
void sort_by_manifold(EigenSystem& es) {
    std::vector<int> order(static_cast<std::size_t>(es.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const int ma = es.labels[std::size_t(a)].excitations;
        const int mb = es.labels[std::size_t(b)].excitations;
        if (ma != mb) return ma < mb;
        return es.energies(a) < es.energies(b);
    });
    EigenSystem sorted = es;
    for (std::size_t n = 0; n < order.size(); ++n) {
        sorted.energies(Eigen::Index(n)) = es.energies(order[n]);
        sorted.states.col(Eigen::Index(n)) = es.states.col(order[n]);
        sorted.labels[n] = es.labels[std::size_t(order[n])];
    }
    es = std::move(sorted);
}

std::vector<std::uint32_t> single_excitation_basis(int n) {
    std::vector<std::uint32_t> basis{0};
    for (int i = 0; i < n; ++i) basis.push_back(site_bit(i));
    return basis;
}

bool has_degenerate_levels(const Eigen::VectorXd& energies) {
    std::vector<double> e(energies.data(), energies.data() + energies.size());
    std::sort(e.begin(), e.end());
    for (std::size_t i = 1; i < e.size(); ++i) {
        if (e[i] - e[i - 1] < degeneracy_threshold) return true;
    }
    return false;
}

// Greedy maximum-overlap assignment of manifold-1 states to reference states.
std::vector<int> match_slots(const Eigen::MatrixXcd& candidates, const Eigen::MatrixXcd& reference) {
    const Eigen::MatrixXd overlap = (reference.adjoint() * candidates).cwiseAbs2();
    std::vector<int> assignment(static_cast<std::size_t>(candidates.cols()), -1);
    std::vector<bool> used_ref(static_cast<std::size_t>(reference.cols()), false);
    for (Eigen::Index step = 0; step < std::min(candidates.cols(), reference.cols()); ++step) {
        double best = -1.0;
        Eigen::Index best_r = -1;
        Eigen::Index best_c = -1;
        for (Eigen::Index r = 0; r < overlap.rows(); ++r) {
            if (used_ref[std::size_t(r)]) continue;
            for (Eigen::Index c = 0; c < overlap.cols(); ++c) {
                if (assignment[std::size_t(c)] >= 0) continue;
                if (overlap(r, c) > best) {
                    best = overlap(r, c);
                    best_r = r;
                    best_c = c;
                }
            }
        }
        used_ref[std::size_t(best_r)] = true;
        assignment[std::size_t(best_c)] = int(best_r);
    }
    return assignment;
}

} // namespace

Eigen::VectorXcd EffectiveSpinModel::drive_couplings() const {
    Eigen::VectorXcd c(n_sites);
    for (int i = 0; i < n_sites; ++i) c(i) = drive_coupling(i);
    return c;
}

EffectiveSpinModel build_effective_model(const SystemParams& params, const DriveProfile& drive) {
    params.validate();
    const int n = params.n_sites;
    if (drive.amplitudes.size() != n) throw ConfigError("drive profile length must equal n_sites");
    if (!drive.amplitudes.allFinite() || !std::isfinite(drive.omega_d)) {
        throw ConfigError("drive amplitudes and frequency must be finite");
    }

    EffectiveSpinModel model;
    model.n_sites = n;
    model.boundary = params.boundary;
    model.homogeneous = params.homogeneous();
    model.omega_d = drive.omega_d;
    model.delta_q = params.omega_q - drive.omega_d;
    model.stark_shift = params.g * params.g / params.detuning();
    model.xy_coupling = params.J * params.dispersive_ratio() * params.dispersive_ratio();

    model.h_fields.resize(3, n);
    Eigen::VectorXd ratio(n);
    for (int i = 0; i < n; ++i) {
        const double delta = params.qubit_frequency(i) - params.cavity_frequency(i);
        const double gi = params.coupling(i);
        ratio(i) = gi / delta;
        const cplx eps = drive.amplitudes(i);
        model.h_fields(0, i) = 2.0 * eps.real() * ratio(i);
        model.h_fields(1, i) = -2.0 * eps.imag() * ratio(i);
        model.h_fields(2, i) = params.qubit_frequency(i) - drive.omega_d + gi * gi / delta;
    }
    model.bond_couplings.resize(params.bond_count());
    for (int b = 0; b < params.bond_count(); ++b) {
        const auto [i, j] = params.bond(b);
        model.bonds.emplace_back(i, j);
        model.bond_couplings(b) = params.hopping(b) * ratio(i) * ratio(j);
    }
    return model;
}

int EigenSystem::ground_index() const {
    for (int s = 0; s < size(); ++s) {
        if (labels[std::size_t(s)].excitations == 0) return s;
    }
    throw SolverError("eigensystem has no ground state");
}

int EigenSystem::slot_index(int slot) const {
    for (int s = 0; s < size(); ++s) {
        if (labels[std::size_t(s)].excitations == 1 && labels[std::size_t(s)].slot == slot) return s;
    }
    return -1;
}

std::vector<int> EigenSystem::manifold(int excitations) const {
    std::vector<int> out;
    for (int s = 0; s < size(); ++s) {
        if (labels[std::size_t(s)].excitations == excitations) out.push_back(s);
    }
    return out;
}

int EigenSystem::max_excitations() const {
    int m = 0;
    for (const auto& l : labels) m = std::max(m, l.excitations);
    return m;
}

int EigenSystem::basis_index(std::uint32_t config) const {
    const auto it = std::find(basis.begin(), basis.end(), config);
    return it == basis.end() ? -1 : int(it - basis.begin());
}

Eigen::VectorXcd EigenSystem::single_excitation_amplitudes(int s) const {
    Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(n_sites);
    for (std::size_t b = 0; b < basis.size(); ++b) {
        if (std::popcount(basis[b]) == 1) {
            amp(std::countr_zero(basis[b])) = states(Eigen::Index(b), s);
        }
    }
    return amp;
}

std::vector<std::uint32_t> truncated_basis(int n_sites, int max_excitations) {
    if (n_sites < 1 || n_sites > 30) throw ConfigError("n_sites out of range for a spin basis");
    std::vector<std::uint32_t> basis;
    const std::uint32_t total = std::uint32_t{1} << n_sites;
    for (std::uint32_t c = 0; c < total; ++c) {
        if (std::popcount(c) <= max_excitations) basis.push_back(c);
    }
    std::stable_sort(basis.begin(), basis.end(), [](std::uint32_t a, std::uint32_t b) {
        return std::popcount(a) < std::popcount(b);
    });
    return basis;
}

Eigen::MatrixXcd spin_hamiltonian(const EffectiveSpinModel& model,
                                  const std::vector<std::uint32_t>& basis) {
    const auto dim = Eigen::Index(basis.size());
    std::unordered_map<std::uint32_t, Eigen::Index> index;
    for (Eigen::Index a = 0; a < dim; ++a) index.emplace(basis[std::size_t(a)], a);

    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    for (Eigen::Index a = 0; a < dim; ++a) {
        const std::uint32_t c = basis[std::size_t(a)];
        for (int i = 0; i < model.n_sites; ++i) {
            if (c & site_bit(i)) h(a, a) += model.h_fields(2, i);
        }
        for (std::size_t b = 0; b < model.bonds.size(); ++b) {
            const auto [i, j] = model.bonds[b];
            const double coupling = model.bond_couplings(Eigen::Index(b));
            if (i == j) {
                if (c & site_bit(i)) h(a, a) -= 2.0 * coupling;
                continue;
            }
            // -coupling (s_i^+ s_j^- + s_j^+ s_i^-)
            for (const auto& [up, down] : {std::pair{i, j}, std::pair{j, i}}) {
                if ((c & site_bit(down)) && !(c & site_bit(up))) {
                    const auto it = index.find(c ^ site_bit(down) ^ site_bit(up));
                    if (it != index.end()) h(it->second, a) -= coupling;
                }
            }
        }
        for (int i = 0; i < model.n_sites; ++i) {
            if (c & site_bit(i)) continue;
            const auto it = index.find(c | site_bit(i));
            if (it == index.end()) continue;
            const cplx ci = model.drive_coupling(i);
            h(it->second, a) += ci;
            h(a, it->second) += std::conj(ci);
        }
    }
    return h;
}

EigenSystem single_excitation_spectrum(const EffectiveSpinModel& model, const ModeSet& modes) {
    const int n = model.n_sites;
    if (modes.size() != n) throw ConfigError("mode set size does not match the spin model");

    EigenSystem es;
    es.n_sites = n;
    es.basis = single_excitation_basis(n);
    es.energies = Eigen::VectorXd::Zero(n + 1);
    es.states = Eigen::MatrixXcd::Zero(n + 1, n + 1);
    es.states(0, 0) = 1.0;
    es.labels.resize(std::size_t(n + 1));
    es.labels[0] = StateLabel{0, std::nullopt, std::nullopt, -1};

    if (model.homogeneous && modes.analytic) {
        const double hz = model.h_fields(2, 0);
        for (int m = 0; m < n; ++m) {
            es.energies(m + 1) = hz - 2.0 * model.xy_coupling * std::cos(modes.wavevectors(m));
            es.states.col(m + 1).tail(n) = modes.profiles.row(m).conjugate().transpose();
            es.labels[std::size_t(m + 1)] = StateLabel{1, modes.wavevectors(m), std::nullopt, m};
        }
    } else {
        const Eigen::MatrixXcd h = spin_hamiltonian(model, es.basis).bottomRightCorner(n, n);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
        if (solver.info() != Eigen::Success) throw SolverError("single-excitation diagonalization failed");
        for (int m = 0; m < n; ++m) {
            Eigen::VectorXcd v = solver.eigenvectors().col(m);
            Eigen::Index big = 0;
            v.cwiseAbs().maxCoeff(&big);
            v *= std::conj(v(big)) / std::abs(v(big));
            es.energies(m + 1) = solver.eigenvalues()(m);
            es.states.col(m + 1).tail(n) = v;
            es.labels[std::size_t(m + 1)] = StateLabel{1, modes.wavevectors(m), std::nullopt, m};
        }
    }
    sort_by_manifold(es);
    return es;
}

EigenSystem dress_single_excitation(const EigenSystem& bare, const EffectiveSpinModel& model) {
    const int n = model.n_sites;
    if (bare.basis != single_excitation_basis(n)) {
        throw Error("dressing needs a ground + single-excitation eigensystem");
    }
    if (model.delta_q == 0.0) throw SolverError("Delta_q = omega_q - omega_d vanishes");
    const double dq = model.delta_q;
    const Eigen::VectorXcd c = model.drive_couplings();
    const int g0 = bare.ground_index();

    EigenSystem out = bare;
    double ground_shift = 0.0;
    double worst = 0.0;
    for (int s : bare.manifold(1)) {
        const Eigen::VectorXcd amp = bare.single_excitation_amplitudes(s);
        const cplx v = amp.dot(c); // <s|V|0>
        ground_shift -= std::norm(v) / dq;
        out.energies(s) = bare.energies(s) + std::norm(v) / dq;
        out.states.col(g0) -= (v / dq) * bare.states.col(s);
        out.states.col(s) += (std::conj(v) / dq) * bare.states.col(g0);
        worst = std::max(worst, std::abs(v / dq));
    }
    out.energies(g0) = bare.energies(g0) + ground_shift;
    if (worst > 0.1) {
        std::ostringstream msg;
        msg << "perturbative drive parameter |(g/Delta) eps_k / Delta_q| = " << worst << " exceeds 0.1";
        warn_once("perturbative-drive", msg.str());
    }

    // Symmetric orthonormalization: the first-order states are only orthogonal to O(v^2).
    const Eigen::MatrixXcd overlap = out.states.adjoint() * out.states;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(overlap);
    const Eigen::MatrixXcd inv_sqrt = solver.eigenvectors() *
                                      solver.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                                      solver.eigenvectors().adjoint();
    out.states = out.states * inv_sqrt;
    sort_by_manifold(out);
    return out;
}

EigenSystem perturbed_eigensystem(const EffectiveSpinModel& model, const ModeSet& modes) {
    const EigenSystem bare = single_excitation_spectrum(model, modes);
    if (has_degenerate_levels(bare.energies.tail(model.n_sites))) {
        throw DegenerateSpectrumError(
            "bare single-excitation spectrum is degenerate; use the degenerate-pair branch");
    }
    return dress_single_excitation(bare, model);
}

EigenSystem degenerate_pair_states(const EffectiveSpinModel& model, const ModeSet& modes) {
    if (model.boundary != Boundary::Periodic || !modes.analytic || !model.homogeneous) {
        throw Error("degenerate pairs exist only for uniform periodic chains");
    }
    EigenSystem es = single_excitation_spectrum(model, modes);
    const Eigen::VectorXcd c = model.drive_couplings();
    const double tiny = 1e-12 * (c.cwiseAbs().maxCoeff() + 1e-300);
    const int n = model.n_sites;

    for (int a = 0; a < n; ++a) {
        const double ka = modes.wavevectors(a);
        const int sa = es.slot_index(a);
        if (std::abs(ka) < 1e-12 || std::abs(ka - std::numbers::pi) < 1e-12) {
            es.labels[std::size_t(sa)].parity = +1;
            continue;
        }
        if (ka > std::numbers::pi) continue;
        int b = -1;
        for (int m = 0; m < n; ++m) {
            if (std::abs(modes.wavevectors(m) - (two_pi - ka)) < 1e-9) b = m;
        }
        if (b < 0) continue;
        const int sb = es.slot_index(b);
        const Eigen::VectorXcd ket_a = es.states.col(sa);
        const Eigen::VectorXcd ket_b = es.states.col(sb);
        const cplx va = es.single_excitation_amplitudes(sa).dot(c);
        const cplx vb = es.single_excitation_amplitudes(sb).dot(c);

        Eigen::VectorXcd plus = ket_a;
        Eigen::VectorXcd minus = ket_b;
        if (std::abs(va) > tiny) {
            const cplx alpha = vb / va;
            const double norm = std::sqrt(1.0 + std::norm(alpha));
            plus = (ket_a + alpha * ket_b) / norm;
            minus = (std::conj(alpha) * ket_a - ket_b) / norm;
        } else if (std::abs(vb) > tiny) {
            plus = ket_b;
            minus = ket_a;
        } else {
            es.degeneracy_unresolved = true;
            continue;
        }
        es.states.col(sa) = plus;
        es.states.col(sb) = minus;
        es.labels[std::size_t(sa)] = StateLabel{1, ka, +1, a};
        es.labels[std::size_t(sb)] = StateLabel{1, ka, -1, b};
    }
    return es;
}

EigenSystem effective_eigensystem(const EffectiveSpinModel& model, const ModeSet& modes) {
    const EigenSystem bare = single_excitation_spectrum(model, modes);
    if (has_degenerate_levels(bare.energies.tail(model.n_sites)) &&
        model.boundary == Boundary::Periodic && modes.analytic && model.homogeneous) {
        return dress_single_excitation(degenerate_pair_states(model, modes), model);
    }
    return perturbed_eigensystem(model, modes);
}

EigenSystem exact_diagonalization(const EffectiveSpinModel& model, const ModeSet& modes,
                                  const ExactDiagonalizationOptions& options) {
    const int n = model.n_sites;
    if (n > 14) throw ConfigError("exact diagonalization supports at most 14 sites");
    if (options.max_excitations < 1) throw ConfigError("max_excitations must be >= 1");
    const int m_cap = std::min(options.max_excitations, n);

    EigenSystem es;
    es.n_sites = n;
    es.basis = truncated_basis(n, m_cap);
    if (es.basis.size() > options.basis_cap) {
        std::ostringstream msg;
        msg << "basis of " << es.basis.size() << " states exceeds the cap of " << options.basis_cap;
        throw SolverError(msg.str());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(spin_hamiltonian(model, es.basis));
    if (solver.info() != Eigen::Success) throw SolverError("exact diagonalization failed");
    es.energies = solver.eigenvalues();
    es.states = solver.eigenvectors();

    const int dim = es.size();
    es.labels.resize(std::size_t(dim));
    for (int s = 0; s < dim; ++s) {
        Eigen::VectorXd weight = Eigen::VectorXd::Zero(m_cap + 1);
        for (int b = 0; b < dim; ++b) {
            weight(std::popcount(es.basis[std::size_t(b)])) += std::norm(es.states(b, s));
        }
        Eigen::Index dominant = 0;
        weight.maxCoeff(&dominant);
        es.labels[std::size_t(s)].excitations = int(dominant);
    }

    // Name single-excitation states after the closest reference Bloch (or pair) state.
    const bool pairs = model.boundary == Boundary::Periodic && modes.analytic && model.homogeneous;
    const EigenSystem reference =
        pairs ? degenerate_pair_states(model, modes) : single_excitation_spectrum(model, modes);
    const std::vector<int> ones = es.manifold(1);
    if (!ones.empty()) {
        Eigen::MatrixXcd candidates(n, Eigen::Index(ones.size()));
        for (std::size_t c = 0; c < ones.size(); ++c) {
            candidates.col(Eigen::Index(c)) = es.single_excitation_amplitudes(ones[c]);
        }
        const std::vector<int> ref_ones = reference.manifold(1);
        Eigen::MatrixXcd refs(n, Eigen::Index(ref_ones.size()));
        for (std::size_t r = 0; r < ref_ones.size(); ++r) {
            refs.col(Eigen::Index(r)) = reference.single_excitation_amplitudes(ref_ones[r]);
        }
        const std::vector<int> assignment = match_slots(candidates, refs);
        for (std::size_t c = 0; c < ones.size(); ++c) {
            if (assignment[c] < 0) continue;
            StateLabel label = reference.labels[std::size_t(ref_ones[std::size_t(assignment[c])])];
            es.labels[std::size_t(ones[c])] = label;
        }
    }
    if (es.manifold(0).size() != 1) throw SolverError("exact spectrum has no unique ground state");
    sort_by_manifold(es);
    return es;
}

} // namespace wsf
