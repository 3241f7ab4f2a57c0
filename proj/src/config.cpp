#include "boltzfrac/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "boltzfrac/cross_section.hpp"
#include "boltzfrac/num_io.hpp"

namespace boltzfrac {

namespace {

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
    throw ConfigError("config: key '" + key + "': " + why);
}

double want_double(const std::string& key, const std::string& val) {
    double d;
    if (!parse_double(val, d) || !std::isfinite(d)) bad_key(key, "expected a finite real, got '" + val + "'");
    return d;
}

std::uint64_t want_u64(const std::string& key, const std::string& val) {
    std::uint64_t u;
    if (!parse_u64(val, u)) bad_key(key, "expected a nonnegative integer, got '" + val + "'");
    return u;
}

Vec3 want_vec3(const std::string& key, const std::string& val) {
    std::istringstream ss(val);
    std::string a, b, c, rest;
    if (!(ss >> a >> b >> c) || (ss >> rest))
        bad_key(key, "expected three reals separated by spaces, got '" + val + "'");
    return {want_double(key, a), want_double(key, b), want_double(key, c)};
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

int SimulationConfig::resolved_m_max() const {
    double m2 = 3.0;  // second moment of f0, the ensemble energy scale
    switch (f0) {
        case F0Kind::maxwellian:
            m2 = norm2(f0_mean) + 3.0 * f0_temperature;
            break;
        case F0Kind::two_point:
            m2 = f0_p * norm2(f0_v1) + (1.0 - f0_p) * norm2(f0_v2);
            break;
        case F0Kind::file:
            break;  // unknown until loaded; keep the default scale
    }
    // Pair-speed ceiling: 2B under truncation, else a generous ensemble tail.
    double w_max = truncation_B ? 2.0 * *truncation_B : 4.0 * std::sqrt(std::max(m2, 1e-12));
    // Band m is unaffected by the cutoff iff theta_min <= 2^-m / w_max: every
    // jump the cutoff removes has size <= sin(theta_min/2) * w <= 2^-m-1.
    const double m = -std::log2(std::min(theta_min, 1.0) * w_max);
    return std::max(0, static_cast<int>(std::floor(m)));
}

void SimulationConfig::validate() const {
    // CrossSection enforces the exponent ranges; theta_min >= pi/2 is allowed
    // here (empty kernel support, zero events).
    CrossSection(gamma, nu, std::min(theta_min, 0x1.921fb54442d18p0 /* pi/2 */));
    if (!(theta_min > 0.0)) throw ConfigError("config: key 'theta_min': must be positive");
    if (truncation_B && !(*truncation_B >= 1.0))
        throw ConfigError("config: key 'B': must be >= 1 or 'none'");
    if (n_particles < 2) throw ConfigError("config: key 'n_particles': need at least 2");
    if (!(horizon > 0.0)) throw ConfigError("config: key 'horizon': must be positive");
    if (replicas < 1) throw ConfigError("config: key 'replicas': must be >= 1");
    if (n_tracked < 1 || n_tracked > n_particles)
        throw ConfigError("config: key 'n_tracked': must lie in [1, n_particles]");
    switch (f0) {
        case F0Kind::maxwellian:
            if (!(f0_temperature > 0.0))
                throw ConfigError("config: key 'f0_temperature': must be positive (a point mass is not admissible)");
            break;
        case F0Kind::two_point:
            if (f0_v1 == f0_v2)
                throw ConfigError("config: key 'f0_v2': coincides with f0_v1 (a point mass is not admissible)");
            if (!(f0_p > 0.0 && f0_p < 1.0))
                throw ConfigError("config: key 'f0_p': must lie in (0, 1) (a point mass is not admissible)");
            break;
        case F0Kind::file:
            if (f0_file.empty()) throw ConfigError("config: key 'f0_file': required when f0=file");
            break;
    }
}

SimulationConfig parse_config(std::istream& in) {
    SimulationConfig cfg;
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!kv.emplace(key, val).second) bad_key(key, "given more than once");
    }

    const bool has_s = kv.count("s") > 0;
    if (has_s && (kv.count("gamma") || kv.count("nu")))
        throw ConfigError("config: key 's': cannot be combined with gamma/nu");
    if (!has_s && (kv.count("gamma") != kv.count("nu")))
        throw ConfigError("config: keys 'gamma' and 'nu' must be given together");

    for (const auto& [key, val] : kv) {
        if (key == "gamma") cfg.gamma = want_double(key, val);
        else if (key == "nu") cfg.nu = want_double(key, val);
        else if (key == "s") {
            const double s = want_double(key, val);
            if (!(s > 3.0)) bad_key(key, "inverse-power exponent must exceed 3");
            cfg.gamma = (s - 5.0) / (s - 1.0);
            cfg.nu = 2.0 / (s - 1.0);
        }
        else if (key == "B") {
            if (val == "none") cfg.truncation_B.reset();
            else cfg.truncation_B = want_double(key, val);
        }
        else if (key == "theta_min") cfg.theta_min = want_double(key, val);
        else if (key == "n_particles") cfg.n_particles = want_u64(key, val);
        else if (key == "horizon") cfg.horizon = want_double(key, val);
        else if (key == "seed") cfg.seed = want_u64(key, val);
        else if (key == "replicas") cfg.replicas = want_u64(key, val);
        else if (key == "n_tracked") cfg.n_tracked = want_u64(key, val);
        else if (key == "max_events_per_path") cfg.max_events_per_path = want_u64(key, val);
        else if (key == "f0") {
            if (val == "maxwellian") cfg.f0 = SimulationConfig::F0Kind::maxwellian;
            else if (val == "two_point") cfg.f0 = SimulationConfig::F0Kind::two_point;
            else if (val == "file") cfg.f0 = SimulationConfig::F0Kind::file;
            else bad_key(key, "expected maxwellian|two_point|file, got '" + val + "'");
        }
        else if (key == "f0_mean") cfg.f0_mean = want_vec3(key, val);
        else if (key == "f0_temperature") cfg.f0_temperature = want_double(key, val);
        else if (key == "f0_v1") cfg.f0_v1 = want_vec3(key, val);
        else if (key == "f0_v2") cfg.f0_v2 = want_vec3(key, val);
        else if (key == "f0_p") cfg.f0_p = want_double(key, val);
        else if (key == "f0_file") cfg.f0_file = val;
        else bad_key(key, "unknown key");
    }

    try {
        cfg.validate();
    } catch (const std::domain_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

SimulationConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    return parse_config(in);
}

std::vector<std::pair<std::string, std::string>> config_echo(const SimulationConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> kv;
    auto vec3s = [](Vec3 v) {
        return format_double(v.x) + " " + format_double(v.y) + " " + format_double(v.z);
    };
    kv.emplace_back("gamma", format_double(cfg.gamma));
    kv.emplace_back("nu", format_double(cfg.nu));
    kv.emplace_back("theta_min", format_double(cfg.theta_min));
    kv.emplace_back("B", cfg.truncation_B ? format_double(*cfg.truncation_B) : "none");
    kv.emplace_back("n_particles", std::to_string(cfg.n_particles));
    kv.emplace_back("horizon", format_double(cfg.horizon));
    kv.emplace_back("seed", std::to_string(cfg.seed));
    kv.emplace_back("replicas", std::to_string(cfg.replicas));
    kv.emplace_back("n_tracked", std::to_string(cfg.n_tracked));
    switch (cfg.f0) {
        case SimulationConfig::F0Kind::maxwellian:
            kv.emplace_back("f0", "maxwellian");
            kv.emplace_back("f0_mean", vec3s(cfg.f0_mean));
            kv.emplace_back("f0_temperature", format_double(cfg.f0_temperature));
            break;
        case SimulationConfig::F0Kind::two_point:
            kv.emplace_back("f0", "two_point");
            kv.emplace_back("f0_v1", vec3s(cfg.f0_v1));
            kv.emplace_back("f0_v2", vec3s(cfg.f0_v2));
            kv.emplace_back("f0_p", format_double(cfg.f0_p));
            break;
        case SimulationConfig::F0Kind::file:
            kv.emplace_back("f0", "file");
            kv.emplace_back("f0_file", cfg.f0_file);
            break;
    }
    return kv;
}

}  // namespace boltzfrac
