#include "wsf/general_em.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace wsf {
namespace {

cplx denominator(const EMModeSet& modes, double omega, double eta, int n) {
    const double w_n = modes.frequencies(n);
    const cplx d(omega - w_n, eta);
    if (eta == 0.0 && std::abs(omega - w_n) <= 1e-12 * std::max(1.0, std::abs(w_n))) {
        std::ostringstream msg;
        msg << "frequency " << omega << " is resonant with mode " << n
            << "; supply a regulator eta > 0";
        throw Error(msg.str());
    }
    return d;
}

cplx read_complex(const nlohmann::json& v) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2) return {v[0].get<double>(), v[1].get<double>()};
    throw ConfigError("profile entries must be a number or a [re, im] pair");
}

} // namespace

void EMModeSet::validate() const {
    if (profiles.rows() != frequencies.size() || couplings.size() != frequencies.size()) {
        throw ConfigError("mode frequencies, couplings and profiles disagree in mode count");
    }
    if (!profiles.allFinite() || !frequencies.allFinite() || !couplings.allFinite()) {
        throw ConfigError("mode data must be finite");
    }
}

void QubitLayout::validate() const {
    if (!positions.empty() && int(positions.size()) != size()) {
        throw ConfigError("qubit positions and frequencies disagree in length");
    }
    std::set<double> seen(positions.begin(), positions.end());
    if (seen.size() != positions.size()) throw ConfigError("qubit positions must be distinct");
}

Eigen::VectorXcd couplings_from_dipole(const Eigen::VectorXd& frequencies, double dipole,
                                       double eps0) {
    if (!(eps0 > 0.0)) throw ConfigError("eps0 must be positive");
    if ((frequencies.array() < 0.0).any()) throw ConfigError("mode frequencies must be non-negative");
    return (-dipole * (frequencies.array() / (2.0 * eps0)).sqrt()).cast<cplx>().matrix();
}

EMModeSet lattice_mode_set(const SystemParams& params) {
    const ModeSet m = build_mode_set(params);
    EMModeSet out;
    out.frequencies = m.frequencies;
    out.profiles = m.profiles;
    out.couplings = Eigen::VectorXcd::Constant(m.size(), cplx(params.g, 0.0));
    return out;
}

Eigen::MatrixXcd self_energy(const EMModeSet& modes, double omega, double eta) {
    modes.validate();
    const int nq = modes.qubit_count();
    Eigen::MatrixXcd sigma = Eigen::MatrixXcd::Zero(nq, nq);
    for (int n = 0; n < modes.mode_count(); ++n) {
        const cplx w = std::norm(modes.couplings(n)) / denominator(modes, omega, eta, n);
        const Eigen::VectorXcd phi = modes.profiles.row(n).transpose();
        sigma += w * phi * phi.adjoint();
    }
    return sigma;
}

Eigen::MatrixXcd self_energy_derivative(const EMModeSet& modes, double omega, double eta) {
    modes.validate();
    const int nq = modes.qubit_count();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(nq, nq);
    for (int n = 0; n < modes.mode_count(); ++n) {
        const cplx d = denominator(modes, omega, eta, n);
        const Eigen::VectorXcd phi = modes.profiles.row(n).transpose();
        out -= (std::norm(modes.couplings(n)) / (d * d)) * phi * phi.adjoint();
    }
    return out;
}

Eigen::MatrixXcd exchange_matrix(const EMModeSet& modes, const QubitLayout& layout, double eta) {
    layout.validate();
    const int nq = modes.qubit_count();
    if (layout.size() != nq) throw ConfigError("layout and mode profiles disagree in qubit count");
    Eigen::MatrixXcd out(nq, nq);
    for (int i = 0; i < nq; ++i) {
        for (int j = i; j < nq; ++j) {
            const double w = 0.5 * (layout.frequencies(i) + layout.frequencies(j));
            const Eigen::MatrixXcd s = self_energy(modes, w, eta);
            out(i, j) = s(i, j);
            out(j, i) = s(j, i);
        }
    }
    return out;
}

Eigen::MatrixXcd stark_vertex(const EMModeSet& modes, double omega, int qubit, double eta) {
    modes.validate();
    if (qubit < 0 || qubit >= modes.qubit_count()) throw Error("qubit index out of range");
    const int m = modes.mode_count();
    Eigen::VectorXcd weighted(m);
    Eigen::VectorXcd plain(m);
    for (int n = 0; n < m; ++n) {
        weighted(n) = modes.couplings(n) * modes.profiles(n, qubit) / denominator(modes, omega, eta, n);
        plain(n) = modes.couplings(n) * modes.profiles(n, qubit);
    }
    // (m, n) -> conj(g_m phi_m) * g_n phi_n / (w - w_n)
    return plain.conjugate() * weighted.transpose();
}

Eigen::VectorXcd generalized_w_state(const EMModeSet& modes, int mode) {
    if (mode < 0 || mode >= modes.mode_count()) throw Error("mode index out of range");
    Eigen::VectorXcd w = modes.profiles.row(mode).adjoint();
    const double norm = w.norm();
    if (norm == 0.0) throw Error("mode profile vanishes at every qubit");
    return w / norm;
}

ModeFile parse_mode_file(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("mode file is not valid JSON: ") + e.what());
    }
    try {
        ModeFile out;
        const auto& q = doc.at("qubits");
        const auto freqs = q.at("frequencies_ghz").get<std::vector<double>>();
        out.layout.frequencies.resize(Eigen::Index(freqs.size()));
        for (std::size_t i = 0; i < freqs.size(); ++i) out.layout.frequencies(Eigen::Index(i)) = from_ghz(freqs[i]);
        out.layout.positions = q.value("positions", std::vector<double>{});
        out.layout.dipole = q.value("dipole", 0.0);
        const double eps0 = doc.value("eps0", 1.0);

        const auto& modes = doc.at("modes");
        const auto m = Eigen::Index(modes.size());
        const auto nq = out.layout.frequencies.size();
        out.modes.frequencies.resize(m);
        out.modes.couplings.resize(m);
        out.modes.profiles.resize(m, nq);
        for (Eigen::Index n = 0; n < m; ++n) {
            const auto& entry = modes[std::size_t(n)];
            out.modes.frequencies(n) = from_ghz(entry.at("frequency_ghz").get<double>());
            const auto& profile = entry.at("profile");
            if (Eigen::Index(profile.size()) != nq) {
                throw ConfigError("mode " + std::to_string(n) + " profile length differs from qubit count");
            }
            for (Eigen::Index i = 0; i < nq; ++i) out.modes.profiles(n, i) = read_complex(profile[std::size_t(i)]);
            if (entry.contains("coupling_ghz")) {
                out.modes.couplings(n) = from_ghz(1.0) * read_complex(entry.at("coupling_ghz"));
            } else {
                Eigen::VectorXd w(1);
                w(0) = out.modes.frequencies(n);
                out.modes.couplings(n) = couplings_from_dipole(w, out.layout.dipole, eps0)(0);
            }
        }
        out.modes.validate();
        out.layout.validate();
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed mode file: ") + e.what());
    }
}

ModeFile load_mode_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mode file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_mode_file(buffer.str());
}

} // namespace wsf
