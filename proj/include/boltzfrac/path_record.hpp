#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "boltzfrac/vec3.hpp"

namespace boltzfrac {

// One recorded collision of a tracked particle. kappa = theta * |w - w*| where
// (w, w*) are the (possibly truncated) pair velocities entering the deviation,
// so kappa/4 <= |dv| <= kappa always holds (sin(t/2) lies in [t/4, t] on
// (0, pi/2]).
struct JumpEvent {
    double t;
    Vec3 dv;
    double theta;
    double kappa;
};

struct PathMeta {
    double gamma = 0.0;
    double nu = 0.5;
    double theta_min = 0.0;
    std::optional<double> truncation_B;  // nullopt: untruncated dynamics
    std::uint64_t n_particles = 0;
    double horizon = 1.0;
    std::uint64_t seed = 0;
    std::uint64_t replicas = 1;
    std::uint64_t replica_id = 0;
    std::uint64_t particle_id = 0;
    std::uint64_t n_tracked = 1;
    std::string f0 = "maxwellian";
    std::map<std::string, std::string> f0_params;   // keys carry the "f0_" prefix, which is
                                                    // what routes them here on read-back
    int resolved_m_max = 0;                         // finest fully-resolved jump band
    std::map<std::string, std::string> extras;      // unknown keys, preserved verbatim
};

// Sample path of one tracked particle: initial velocity plus the ordered
// collision record. Event times are strictly increasing and all fields finite.
struct PathRecord {
    PathMeta meta;
    Vec3 v0;
    std::vector<JumpEvent> events;
};

// V_t = v0 + sum of dv over events with time <= t (cadlag).
Vec3 reconstruct(const PathRecord& rec, double t);

// Piecewise-constant velocity path: values[k] on [times[k-1], times[k]), with
// values[0] on [0, times[0]) and values[K] on [times[K-1], horizon].
struct VelocityPath {
    std::vector<double> times;
    std::vector<Vec3> values;  // size times.size() + 1
    double horizon = 1.0;

    Vec3 at(double t) const;
};

VelocityPath build_velocity_path(const PathRecord& rec);

// Piecewise-linear integral path X_t = integral of V_s ds on [0, horizon].
// anchors[k] = X at times[k]; slope on [times[k], times[k+1]) is vel.values[k+1].
struct PositionPath {
    std::vector<double> times;
    std::vector<Vec3> anchors;  // size times.size(), X at each event time
    std::vector<Vec3> values;   // velocity per piece, size times.size() + 1
    double horizon = 1.0;

    Vec3 at(double t) const;
};

PositionPath build_position_path(const PathRecord& rec);

}  // namespace boltzfrac
