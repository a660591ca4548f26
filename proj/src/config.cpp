#include "wsf/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace wsf {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

double ghz(const json& obj, const char* key, double fallback_ghz, bool required) {
    if (!obj.contains(key)) {
        if (required) throw ConfigError(std::string("missing key '") + key + "'");
        return from_ghz(fallback_ghz);
    }
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
    return from_ghz(v.get<double>());
}

SystemParams parse_system(const json& s) {
    reject_unknown(s, {"n_sites", "omega_c", "omega_q", "g", "J", "kappa", "gamma", "gamma_phi", "boundary"},
                   "system");
    SystemParams p;
    if (!s.contains("n_sites") || !s.at("n_sites").is_number_integer()) {
        throw ConfigError("system.n_sites must be an integer");
    }
    p.n_sites = s.at("n_sites").get<int>();
    p.omega_c = ghz(s, "omega_c", 0.0, true);
    p.omega_q = ghz(s, "omega_q", 0.0, true);
    p.g = ghz(s, "g", 0.0, true);
    p.J = ghz(s, "J", 0.0, true);
    p.kappa = ghz(s, "kappa", 0.0, true);
    p.gamma = ghz(s, "gamma", 0.0, false);
    p.gamma_phi = ghz(s, "gamma_phi", 0.0, false);
    const std::string b = s.value("boundary", std::string("open"));
    if (b == "open") {
        p.boundary = Boundary::Open;
    } else if (b == "periodic") {
        p.boundary = Boundary::Periodic;
    } else {
        throw ConfigError("system.boundary must be 'open' or 'periodic'");
    }
    return p;
}

cplx complex_value(const json& v) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    throw ConfigError("drive.custom entries must be numbers or [re, im] pairs");
}

DriveSpec parse_drive(const json& d) {
    reject_unknown(d, {"profile", "amplitude", "site", "custom"}, "drive");
    DriveSpec out;
    out.amplitude = ghz(d, "amplitude", 0.0, true);
    const std::string kind = d.value("profile", std::string("uniform"));
    if (kind == "uniform") {
        out.kind = DriveKind::Uniform;
    } else if (kind == "single_site") {
        out.kind = DriveKind::SingleSite;
        out.site = d.value("site", 0);
    } else if (kind == "custom") {
        out.kind = DriveKind::Custom;
        if (!d.contains("custom") || !d.at("custom").is_array()) {
            throw ConfigError("drive.custom must list one weight per site");
        }
        const auto& arr = d.at("custom");
        out.custom.resize(Eigen::Index(arr.size()));
        for (std::size_t i = 0; i < arr.size(); ++i) out.custom(Eigen::Index(i)) = complex_value(arr[i]);
    } else {
        throw ConfigError("drive.profile must be 'uniform', 'single_site' or 'custom'");
    }
    return out;
}

FrequencyRange parse_range(const json& r) {
    FrequencyRange out;
    if (r.contains("auto")) {
        reject_unknown(r, {"auto"}, "omega_d_range");
        const auto& a = r.at("auto");
        reject_unknown(a, {"target", "mode", "span_kappa", "step_kappa"}, "omega_d_range.auto");
        out.automatic = true;
        out.target = a.value("target", 0);
        out.mode = a.value("mode", out.target);
        out.span_kappa = a.value("span_kappa", 50.0);
        out.step_kappa = a.value("step_kappa", 0.05);
        return out;
    }
    reject_unknown(r, {"start", "stop", "step"}, "omega_d_range");
    out.start = ghz(r, "start", 0.0, true);
    out.stop = ghz(r, "stop", 0.0, true);
    out.step = ghz(r, "step", 0.0, true);
    return out;
}

DisorderSpec parse_disorder(const json& d) {
    reject_unknown(d, {"sigma_rel", "n_samples", "seed"}, "disorder");
    DisorderSpec out;
    if (d.contains("sigma_rel")) {
        const auto& s = d.at("sigma_rel");
        reject_unknown(s, {"omega_c", "omega_q", "g", "J"}, "disorder.sigma_rel");
        out.sigma_omega_c = s.value("omega_c", 0.0);
        out.sigma_omega_q = s.value("omega_q", 0.0);
        out.sigma_g = s.value("g", 0.0);
        out.sigma_J = s.value("J", 0.0);
    }
    out.n_samples = d.value("n_samples", 1);
    out.seed = d.value("seed", std::uint64_t{0});
    return out;
}

} // namespace

DriveProfile DriveSpec::profile(int n_sites, double omega_d) const {
    switch (kind) {
    case DriveKind::Uniform: return DriveProfile::uniform(n_sites, amplitude, omega_d);
    case DriveKind::SingleSite: return DriveProfile::single_site(n_sites, site, amplitude, omega_d);
    case DriveKind::Custom:
        if (custom.size() != n_sites) throw ConfigError("drive.custom length differs from n_sites");
        return DriveProfile{custom * amplitude, omega_d};
    }
    throw ConfigError("unknown drive kind");
}

void SweepConfig::validate() const {
    system.validate();
    if (drive.kind == DriveKind::SingleSite && (drive.site < 0 || drive.site >= system.n_sites)) {
        throw ConfigError("drive.site out of range");
    }
    if (drive.kind == DriveKind::Custom && drive.custom.size() != system.n_sites) {
        throw ConfigError("drive.custom length differs from n_sites");
    }
    if (range.automatic) {
        if (range.target < 0 || range.target >= system.n_sites || range.mode < 0 ||
            range.mode >= system.n_sites) {
            throw ConfigError("omega_d_range.auto target/mode out of range");
        }
        if (!(range.span_kappa > 0.0) || !(range.step_kappa > 0.0)) {
            throw ConfigError("omega_d_range.auto span and step must be positive");
        }
    } else {
        if (!(range.step > 0.0)) throw ConfigError("omega_d_range.step must be positive");
        if (!(range.stop > range.start)) throw ConfigError("omega_d_range.stop must exceed start");
    }
    if (manifolds < 1) throw ConfigError("manifolds must be at least 1");
    for (int t : targets) {
        if (t < 0 || t >= system.n_sites) throw ConfigError("target slot out of range");
    }
    if (disorder) {
        if (disorder->n_samples < 1) throw ConfigError("disorder.n_samples must be at least 1");
        for (double s : {disorder->sigma_omega_c, disorder->sigma_omega_q, disorder->sigma_g, disorder->sigma_J}) {
            if (!(s >= 0.0)) throw ConfigError("disorder sigmas must be non-negative");
        }
    }
}

std::vector<int> SweepConfig::target_slots() const {
    if (!targets.empty()) return targets;
    std::vector<int> all(std::size_t(system.n_sites));
    for (int i = 0; i < system.n_sites; ++i) all[std::size_t(i)] = i;
    return all;
}

const char* solver_choice_name(SolverChoice s) {
    return s == SolverChoice::Rate ? "rate" : "lindblad";
}

SolverChoice parse_solver_choice(const std::string& name) {
    if (name == "rate") return SolverChoice::Rate;
    if (name == "lindblad") return SolverChoice::Lindblad;
    throw ConfigError("solver must be 'rate' or 'lindblad'");
}

SweepConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        reject_unknown(doc, {"system", "drive", "omega_d_range", "solver", "manifolds", "targets", "disorder"},
                       "config");
        SweepConfig c;
        if (!doc.contains("system")) throw ConfigError("missing 'system' block");
        if (!doc.contains("drive")) throw ConfigError("missing 'drive' block");
        if (!doc.contains("omega_d_range")) throw ConfigError("missing 'omega_d_range' block");
        c.system = parse_system(doc.at("system"));
        c.drive = parse_drive(doc.at("drive"));
        c.range = parse_range(doc.at("omega_d_range"));
        c.solver = parse_solver_choice(doc.value("solver", std::string("rate")));
        c.manifolds = doc.value("manifolds", 1);
        c.targets = doc.value("targets", std::vector<int>{});
        if (doc.contains("disorder")) c.disorder = parse_disorder(doc.at("disorder"));
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

SweepConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

} // namespace wsf
