#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "boltzfrac/vec3.hpp"

namespace boltzfrac {

// Invalid or inconsistent configuration; message names the offending key.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimulationConfig {
    double gamma = 0.0;
    double nu = 0.5;
    double theta_min = 0x1.0p-12;
    std::optional<double> truncation_B;  // "B=none" leaves this empty

    std::uint64_t n_particles = 4096;
    double horizon = 1.0;
    std::uint64_t seed = 1;
    std::uint64_t replicas = 1;
    std::uint64_t n_tracked = 1;

    enum class F0Kind { maxwellian, two_point, file };
    F0Kind f0 = F0Kind::maxwellian;
    Vec3 f0_mean{0.0, 0.0, 0.0};
    double f0_temperature = 1.0;
    Vec3 f0_v1{1.0, 0.0, 0.0};
    Vec3 f0_v2{-1.0, 0.0, 0.0};
    double f0_p = 0.5;
    std::string f0_file;

    // Hard cap on recorded events per tracked particle; exceeding it raises a
    // resource error after the partial path has been flushed.
    std::uint64_t max_events_per_path = std::uint64_t{1} << 26;

    // Finest band m such that every jump of size > 2^-m-1 is producible above
    // the angular cutoff for pair speeds up to the ensemble ceiling.
    int resolved_m_max() const;

    void validate() const;  // throws ConfigError
};

// Line-oriented "key=value" format; '#' starts a comment, blank lines ignored.
// Either (gamma, nu) or s may be given, not both. Throws ConfigError.
SimulationConfig parse_config(std::istream& in);
SimulationConfig parse_config_file(const std::string& path);

// Canonical echo of a config as key=value lines (stable order, shortest
// round-trip numbers); identical configs echo to identical bytes.
std::vector<std::pair<std::string, std::string>> config_echo(const SimulationConfig& cfg);

}  // namespace boltzfrac
