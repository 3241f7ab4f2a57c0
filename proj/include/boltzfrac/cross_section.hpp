#pragma once

namespace boltzfrac {

// Angular cross-section beta(theta) = theta^(-1-nu) on (0, pi/2], zero on
// (pi/2, pi), with a hard angular cutoff at theta_min for simulation.
// Admissible exponents: gamma in (-1, 1), nu in (0, 1), gamma + nu > 0.
struct CrossSection {
    double gamma;
    double nu;
    double theta_min;

    // Throws std::domain_error when the exponents or cutoff are out of range.
    CrossSection(double gamma, double nu, double theta_min);

    // Exponents for an inverse-power-law force r^(-s): gamma = (s-5)/(s-1),
    // nu = 2/(s-1). Requires s > 3 (equivalent to gamma + nu > 0).
    static CrossSection from_inverse_power(double s, double theta_min);

    // beta(theta); domain (0, pi).
    double beta_kernel(double theta) const;

    // integral of beta over [theta_lo, pi/2]; theta_lo in (0, pi/2].
    double tail_mass(double theta_lo) const;

    // Inverse CDF of beta restricted to [theta_min, pi/2]: u in [0, 1).
    double sample_theta(double u) const;
};

// Relative-speed floor used in the majorant when gamma < 0, where |v - v*|^gamma
// is unbounded as the pair speed vanishes. Proposals below the floor are
// accepted with probability one and counted by the simulator.
inline constexpr double kSoftSpeedFloor = 1e-3;

// Upper bound on the per-particle collision rate used as the thinning
// majorant:  2*pi * F * tail_mass(theta_min), where F = rel_speed_cap^gamma
// for gamma >= 0 (pass rel_speed_cap = 2B under truncation at B) and
// F = kSoftSpeedFloor^gamma for gamma < 0.
double majorant_collision_rate(const CrossSection& cs, double rel_speed_cap);

}  // namespace boltzfrac
