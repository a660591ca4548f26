#include "wsf/rates.hpp"

#include <cmath>
#include <sstream>

namespace wsf {
namespace {

// sum_{k'k''q'} f_{kk'k''} f*_{q'qk'} e_k'' e_q', contracted in O(N^3) per factor.
Eigen::MatrixXcd contract_overlaps(const ModeOverlapTensor& f, const Eigen::VectorXcd& e) {
    const int n = f.size();
    Eigen::MatrixXcd left = Eigen::MatrixXcd::Zero(n, n);  // (k, k')
    Eigen::MatrixXcd right = Eigen::MatrixXcd::Zero(n, n); // (k', q)
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            cplx l = 0.0;
            cplx r = 0.0;
            for (int c = 0; c < n; ++c) {
                l += f(a, b, c) * e(c);
                r += std::conj(f(c, b, a)) * e(c);
            }
            left(a, b) = l;
            right(a, b) = r;
        }
    }
    return left * right;
}

void require_off_resonance(double delta_c, double delta_q, double scale) {
    if (std::abs(delta_c) <= 1e-12 * scale) {
        throw Error("drive resonant with the bare cavity (Delta_c = 0): outside the dispersive treatment");
    }
    if (std::abs(delta_q) <= 1e-12 * scale) {
        throw Error("drive resonant with the qubit (Delta_q = 0)");
    }
}

} // namespace

ModeOverlapTensor mode_overlap_tensor(const ModeSet& modes) {
    const int n = modes.size();
    ModeOverlapTensor f(n);
    const Eigen::MatrixXcd& phi = modes.profiles;
    for (int k = 0; k < n; ++k) {
        for (int k1 = 0; k1 < n; ++k1) {
            for (int k2 = 0; k2 < n; ++k2) {
                cplx sum = 0.0;
                for (int i = 0; i < n; ++i) {
                    sum += phi(k, i) * std::conj(phi(k1, i)) * std::conj(phi(k2, i));
                }
                f(k, k1, k2) = sum;
            }
        }
    }
    return f;
}

Eigen::MatrixXcd bloch_transition_amplitudes(const ModeSet& modes, const DriveProfile& drive,
                                             const SystemParams& params) {
    const int n = modes.size();
    if (drive.amplitudes.size() != n || params.n_sites != n) {
        throw ConfigError("drive, mode set and system sizes disagree");
    }
    const double scale = std::abs(params.omega_q) + std::abs(params.omega_c) + 1.0;
    const ModeOverlapTensor f = mode_overlap_tensor(modes);

    if (params.homogeneous()) {
        const double delta = params.detuning();
        const double delta_c = drive.omega_d - params.omega_c;
        const double delta_q = params.omega_q - drive.omega_d;
        require_off_resonance(delta_c, delta_q, scale);
        const double ratio = params.g / delta;
        const double prefactor = (1.0 + 2.0 * delta / delta_c) * ratio * ratio * ratio / delta_q;
        return prefactor * contract_overlaps(f, drive_to_mode_basis(drive, modes));
    }

    // Site-local prefactors: eps'_i = sqrt(w_i) eps_i, so the pair product carries w_i.
    DriveProfile weighted = drive;
    for (int i = 0; i < n; ++i) {
        const double delta = params.qubit_frequency(i) - params.cavity_frequency(i);
        const double delta_c = drive.omega_d - params.cavity_frequency(i);
        const double delta_q = params.qubit_frequency(i) - drive.omega_d;
        require_off_resonance(delta_c, delta_q, scale);
        const double ratio = params.coupling(i) / delta;
        const double w = (1.0 + 2.0 * delta / delta_c) * ratio * ratio * ratio / delta_q;
        weighted.amplitudes(i) *= std::sqrt(cplx(w, 0.0));
    }
    return contract_overlaps(f, drive_to_mode_basis(weighted, modes));
}

TransitionElements transition_matrix_elements(const ModeSet& modes, const DriveProfile& drive,
                                              const SystemParams& params,
                                              const EigenSystem& eigensystem) {
    const Eigen::MatrixXcd bloch = bloch_transition_amplitudes(modes, drive, params);
    TransitionElements out;
    out.targets = eigensystem.manifold(1);
    const auto rows = Eigen::Index(out.targets.size());
    out.amplitudes.resize(rows, modes.size());
    for (Eigen::Index t = 0; t < rows; ++t) {
        const Eigen::VectorXcd amp = eigensystem.single_excitation_amplitudes(out.targets[std::size_t(t)]);
        // <s|k> = sum_i s_i^* phi_k^*(i)
        const Eigen::VectorXcd overlap = (modes.profiles * amp).conjugate();
        out.amplitudes.row(t) = overlap.transpose() * bloch;
    }
    out.magnitudes = out.amplitudes.cwiseAbs();
    return out;
}

RateTable pump_rates(const TransitionElements& elements, const SpectralFunction& spectral,
                     const EigenSystem& eigensystem, double omega_d) {
    RateTable table;
    table.targets = elements.targets;
    table.matrix_elements = elements.magnitudes;
    table.drive_frequency = omega_d;
    table.gamma_up = Eigen::VectorXd::Zero(Eigen::Index(elements.targets.size()));
    const double e0 = eigensystem.energies(eigensystem.ground_index());
    for (std::size_t t = 0; t < elements.targets.size(); ++t) {
        const double emitted = omega_d + e0 - eigensystem.energies(elements.targets[t]);
        double sum = 0.0;
        for (Eigen::Index q = 0; q < elements.magnitudes.cols(); ++q) {
            const double lam = elements.magnitudes(Eigen::Index(t), q);
            sum += lam * lam * spectral(int(q), emitted);
        }
        table.gamma_up(Eigen::Index(t)) = two_pi * sum;
    }
    return table;
}

RatePipeline compute_rates(const SystemParams& params, const DriveProfile& drive) {
    RatePipeline p;
    p.modes = build_mode_set(params);
    p.model = build_effective_model(params, drive);
    p.eigensystem = effective_eigensystem(p.model, p.modes);
    p.elements = transition_matrix_elements(p.modes, drive, params, p.eigensystem);
    p.rates = pump_rates(p.elements, SpectralFunction{p.modes.frequencies, params.kappa},
                         p.eigensystem, drive.omega_d);
    return p;
}

namespace {

template <typename Solve>
double solve_optimum(const SystemParams& params, const DriveProfile& drive, int target_slot, int q0,
                     Solve&& eigensystem_at) {
    const ModeSet modes = build_mode_set(params);
    const int n = modes.size();
    if (target_slot < 0 || target_slot >= n || q0 < 0 || q0 >= n) {
        throw ConfigError("target or mode index out of range");
    }
    const double omega_q0 = modes.frequencies(q0);
    double omega = 0.5 * (params.omega_q + params.g * params.g / params.detuning() + omega_q0);

    EigenSystem es;
    for (int iter = 0; iter < 200; ++iter) {
        const EffectiveSpinModel model = build_effective_model(params, drive.with_frequency(omega));
        es = eigensystem_at(model, modes);
        const int s = es.slot_index(target_slot);
        if (s < 0) throw SolverError("target slot has no matching eigenstate");
        const double transition = es.energies(s) - es.energies(es.ground_index()) + omega;
        const double next = 0.5 * (omega_q0 + transition);
        const double change = std::abs(next - omega);
        omega = next;
        if (change <= 1e-13 * std::abs(omega)) break;
    }

    const TransitionElements el =
        transition_matrix_elements(modes, drive.with_frequency(omega), params, es);
    const int s = es.slot_index(target_slot);
    Eigen::Index row = 0;
    for (std::size_t t = 0; t < el.targets.size(); ++t) {
        if (el.targets[t] == s) row = Eigen::Index(t);
    }
    const double largest = el.magnitudes.maxCoeff();
    if (!(el.magnitudes(row, q0) > 1e-10 * largest)) {
        std::ostringstream msg;
        msg << "mode " << q0 << " cannot channel the mechanism to target " << target_slot
            << " (Lambda = 0)";
        throw Error(msg.str());
    }
    return omega;
}

} // namespace

double optimal_drive_frequency(const SystemParams& params, const DriveProfile& drive,
                               int target_slot, int q0) {
    return solve_optimum(params, drive, target_slot, q0,
                         [](const EffectiveSpinModel& m, const ModeSet& modes) {
                             return effective_eigensystem(m, modes);
                         });
}

double optimal_drive_frequency_exact(const SystemParams& params, const DriveProfile& drive,
                                     int target_slot, int q0, int max_excitations) {
    return solve_optimum(params, drive, target_slot, q0,
                         [max_excitations](const EffectiveSpinModel& m, const ModeSet& modes) {
                             return exact_diagonalization(m, modes, {max_excitations, 20000});
                         });
}

double optimal_drive_frequency_closed_form(const SystemParams& params, const DriveProfile& drive,
                                           int target_slot, int q0, double omega_ref) {
    if (!params.homogeneous()) throw Error("closed-form optimum needs a uniform lattice");
    const ModeSet modes = build_mode_set(params);
    const EffectiveSpinModel model = build_effective_model(params, drive.with_frequency(omega_ref));
    const EigenSystem bare = model.boundary == Boundary::Periodic
                                 ? degenerate_pair_states(model, modes)
                                 : single_excitation_spectrum(model, modes);
    const double ratio = params.dispersive_ratio();
    const double delta_q = params.omega_q - omega_ref;
    const Eigen::VectorXcd c = model.drive_couplings();

    double total = 0.0;
    double target = 0.0;
    for (int s : bare.manifold(1)) {
        const double w = std::norm(bare.single_excitation_amplitudes(s).dot(c)) / (ratio * ratio);
        total += w;
        if (bare.labels[std::size_t(s)].slot == target_slot) target = w;
    }
    const double k = modes.wavevectors(target_slot);
    return 0.5 * (params.omega_q + model.stark_shift + params.omega_c) -
           params.J * std::cos(modes.wavevectors(q0)) +
           ratio * ratio * (-params.J * std::cos(k) + 0.5 * total / delta_q + 0.5 * target / delta_q);
}

} // namespace wsf
