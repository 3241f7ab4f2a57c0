#include "boltzfrac/path_record.hpp"

#include <algorithm>
#include <stdexcept>

namespace boltzfrac {

Vec3 reconstruct(const PathRecord& rec, double t) {
    if (!(t >= 0.0 && t <= rec.meta.horizon))
        throw std::domain_error("reconstruct: t outside [0, horizon]");
    Vec3 v = rec.v0;
    for (const auto& e : rec.events) {
        if (e.t > t) break;
        v += e.dv;
    }
    return v;
}

Vec3 VelocityPath::at(double t) const {
    // piece index = number of event times <= t
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    return values[static_cast<std::size_t>(it - times.begin())];
}

VelocityPath build_velocity_path(const PathRecord& rec) {
    VelocityPath p;
    p.horizon = rec.meta.horizon;
    p.times.reserve(rec.events.size());
    p.values.reserve(rec.events.size() + 1);
    Vec3 v = rec.v0;
    p.values.push_back(v);
    for (const auto& e : rec.events) {
        p.times.push_back(e.t);
        v += e.dv;
        p.values.push_back(v);
    }
    return p;
}

Vec3 PositionPath::at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto k = static_cast<std::size_t>(it - times.begin());
    if (k == 0) return t * values[0];
    return anchors[k - 1] + (t - times[k - 1]) * values[k];
}

PositionPath build_position_path(const PathRecord& rec) {
    PositionPath p;
    p.horizon = rec.meta.horizon;
    const VelocityPath vp = build_velocity_path(rec);
    p.times = vp.times;
    p.values = vp.values;
    p.anchors.reserve(p.times.size());
    Vec3 x{0.0, 0.0, 0.0};
    double prev = 0.0;
    for (std::size_t k = 0; k < p.times.size(); ++k) {
        x += (p.times[k] - prev) * p.values[k];
        p.anchors.push_back(x);
        prev = p.times[k];
    }
    return p;
}

}  // namespace boltzfrac
