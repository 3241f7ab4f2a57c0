#include "boltzfrac/cross_section.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace boltzfrac {

namespace {
constexpr double kHalfPi = std::numbers::pi / 2.0;
}

CrossSection::CrossSection(double gamma_, double nu_, double theta_min_)
    : gamma(gamma_), nu(nu_), theta_min(theta_min_) {
    if (!(gamma > -1.0 && gamma < 1.0))
        throw std::domain_error("cross_section: gamma must lie in (-1, 1), got " +
                                std::to_string(gamma));
    if (!(nu > 0.0 && nu < 1.0))
        throw std::domain_error("cross_section: nu must lie in (0, 1), got " + std::to_string(nu));
    if (!(gamma + nu > 0.0))
        throw std::domain_error("cross_section: gamma + nu must be positive, got " +
                                std::to_string(gamma + nu));
    if (!(theta_min > 0.0 && theta_min <= kHalfPi))
        throw std::domain_error("cross_section: theta_min must lie in (0, pi/2], got " +
                                std::to_string(theta_min));
}

CrossSection CrossSection::from_inverse_power(double s, double theta_min) {
    if (!(s > 3.0))
        throw std::domain_error("cross_section: inverse-power exponent s must exceed 3, got " +
                                std::to_string(s));
    return CrossSection((s - 5.0) / (s - 1.0), 2.0 / (s - 1.0), theta_min);
}

double CrossSection::beta_kernel(double theta) const {
    if (!(theta > 0.0 && theta < std::numbers::pi))
        throw std::domain_error("beta_kernel: theta must lie in (0, pi)");
    if (theta > kHalfPi) return 0.0;
    return std::pow(theta, -1.0 - nu);
}

double CrossSection::tail_mass(double theta_lo) const {
    if (!(theta_lo > 0.0 && theta_lo <= kHalfPi))
        throw std::domain_error("tail_mass: theta_lo must lie in (0, pi/2]");
    return (std::pow(theta_lo, -nu) - std::pow(kHalfPi, -nu)) / nu;
}

double CrossSection::sample_theta(double u) const {
    // F(theta) = (theta_min^-nu - theta^-nu) / (theta_min^-nu - (pi/2)^-nu).
    const double a = std::pow(theta_min, -nu);
    const double b = std::pow(kHalfPi, -nu);
    const double theta = std::pow(a - u * (a - b), -1.0 / nu);
    return std::min(theta, kHalfPi);
}

double majorant_collision_rate(const CrossSection& cs, double rel_speed_cap) {
    if (cs.gamma > 0.0 && !(rel_speed_cap > 0.0))
        throw std::domain_error("majorant_collision_rate: rel_speed_cap must be positive");
    double factor = 1.0;
    if (cs.gamma > 0.0) factor = std::pow(rel_speed_cap, cs.gamma);
    if (cs.gamma < 0.0) factor = std::pow(kSoftSpeedFloor, cs.gamma);
    return 2.0 * std::numbers::pi * factor * cs.tail_mass(cs.theta_min);
}

}  // namespace boltzfrac
