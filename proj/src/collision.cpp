#include "boltzfrac/collision.hpp"

#include <cmath>
#include <stdexcept>

namespace boltzfrac {

std::pair<Vec3, Vec3> orthonormal_frame(Vec3 x) {
    const double n = norm(x);
    if (n == 0.0) throw std::domain_error("orthonormal_frame: zero vector");

    const double ax = std::fabs(x.x), ay = std::fabs(x.y), az = std::fabs(x.z);
    Vec3 ek;
    if (ax <= ay && ax <= az)
        ek = {1.0, 0.0, 0.0};
    else if (ay <= az)
        ek = {0.0, 1.0, 0.0};
    else
        ek = {0.0, 0.0, 1.0};

    // x cross e_k vanishes only for x parallel to e_k, impossible when k is a
    // smallest-magnitude component of a nonzero x.
    const Vec3 c = cross(x, ek);
    const Vec3 i_vec = (n / norm(c)) * c;
    const Vec3 j_vec = cross(x / n, i_vec);
    return {i_vec, j_vec};
}

Vec3 gamma_vec(Vec3 x, double phi) {
    const auto [i_vec, j_vec] = orthonormal_frame(x);
    return std::cos(phi) * i_vec + std::sin(phi) * j_vec;
}

Vec3 collision_deviation(Vec3 v, Vec3 v_star, CollisionAngles angles) {
    const Vec3 w = v - v_star;
    if (norm2(w) == 0.0) return {0.0, 0.0, 0.0};
    const double sh = std::sin(0.5 * angles.theta);
    const double ch = std::cos(0.5 * angles.theta);
    // |a| = sin(theta/2)|w|: sin^2(theta/2) is the stable form of (1-cos theta)/2.
    return (-sh * sh) * w + (sh * ch) * gamma_vec(w, angles.phi);
}

std::pair<Vec3, Vec3> post_collision(Vec3 v, Vec3 v_star, CollisionAngles angles) {
    const Vec3 a = collision_deviation(v, v_star, angles);
    return {v + a, v_star - a};
}

double jump_size(Vec3 v, Vec3 v_star, double theta) {
    return std::sin(0.5 * theta) * norm(v - v_star);
}

}  // namespace boltzfrac
