#pragma once

#include <utility>

#include "boltzfrac/vec3.hpp"

namespace boltzfrac {

struct CollisionAngles {
    double theta;  // deflection angle, (0, pi/2] under the cutoff kernel
    double phi;    // roll angle, [0, 2*pi)
};

// Deterministic orthogonal frame attached to x: returns (i_vec, j_vec) with
// |i_vec| = |j_vec| = |x|, i_vec . x = 0, j_vec = (x/|x|) x i_vec.
// Canonical choice: i_vec = normalize(x cross e_k) * |x| where k is the first
// index of a smallest-magnitude component of x. Throws std::domain_error for
// x = 0.
std::pair<Vec3, Vec3> orthonormal_frame(Vec3 x);

// Gamma(x, phi) = cos(phi) * i_vec + sin(phi) * j_vec; |Gamma| = |x|, Gamma . x = 0.
Vec3 gamma_vec(Vec3 x, double phi);

// Deviation a = v' - v of the first particle:
//   a = -sin^2(theta/2) (v - v*) + sin(theta/2)cos(theta/2) Gamma(v - v*, phi)
// evaluated in this form directly — recovering a from the summed endpoints
// (v + a) - v loses ~|v|/|a| ulps, which matters when theta is small. The
// deviation norm matches jump_size to machine precision. Zero when v == v*.
Vec3 collision_deviation(Vec3 v, Vec3 v_star, CollisionAngles angles);

// Post-collision pair (v + a, v* - a). Momentum and kinetic energy of the
// pair are conserved exactly by this parameterization.
std::pair<Vec3, Vec3> post_collision(Vec3 v, Vec3 v_star, CollisionAngles angles);

// |v' - v| = sqrt((1 - cos theta)/2) * |v - v_star| = sin(theta/2) |v - v_star|.
double jump_size(Vec3 v, Vec3 v_star, double theta);

}  // namespace boltzfrac
