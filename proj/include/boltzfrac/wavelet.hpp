#pragma once

#include <vector>

#include "boltzfrac/fractal.hpp"
#include "boltzfrac/path_record.hpp"
#include "boltzfrac/vec3.hpp"

namespace boltzfrac {

// Canonical smooth bump: Z * exp(-1/(x(1-x))) on (0,1), 0 elsewhere, with Z
// chosen so the integral over (0,1) is 1.
double bump(double x);

// k-th derivative of the bump, computed by the exact rational-coefficient
// recursion phi^(k) = R_k(u,s) * phi with u = 1/x, s = 1/(1-x),
// R_0 = 1, R_{k+1} = R_k' + R_k * (u^2 - s^2). Zero outside (0,1) for all k.
double bump_derivative(double x, int k);

// Analyzing wavelet psi_N = phi^(N): compactly supported in [0,1] with N
// vanishing moments.
class Wavelet {
public:
    explicit Wavelet(int order);  // order >= 1
    int order() const { return order_; }
    double psi(double x) const { return bump_derivative(x, order_); }
    double antiderivative(double x) const { return bump_derivative(x, order_ - 1); }

private:
    int order_;
};

// Continuous wavelet transform (1/a) * integral of g(t) psi_N((t-b)/a) dt,
// evaluated exactly piece by piece (no quadrature). The velocity overload
// treats g as piecewise constant (any order >= 1); the position overload
// treats g as piecewise linear and needs order >= 2. The window [b, b+a]
// must lie inside [0, horizon].
Vec3 wavelet_transform(const VelocityPath& g, double a, double b, int order);
Vec3 wavelet_transform(const PositionPath& g, double a, double b, int order);

// Both sides of the derivative identity: lhs = transform of V at the given
// order, rhs = -(1/a) * transform of X at order + 1. gap is the largest
// component difference relative to the total magnitude of the summed terms
// (0 when both sides are identically zero).
struct IbpResult {
    Vec3 lhs;
    Vec3 rhs;
    double gap;
};
IbpResult ibp_check(const PathRecord& rec, double a, double b, int order);

// sup - inf of the velocity path over [lo, hi] (clipped to [0, horizon]),
// per component, combined as the max over components. Empty interval -> 0.
double oscillation(const VelocityPath& path, double lo, double hi);

struct HolderBoundOptions {
    int m_lo = 4;
    int m_hi = 12;
    double epsilon = 0.2;          // isolation exponent: no other jump >= 2^(-m(1+eps))
    double osc_ratio = 0.2;        // band qualifies if osc of jump-removed path <= ratio*|J|
    bool check_oscillation = true; // false: geometric bound only (qualification waived)
};

struct BandBound {
    int m = 0;
    double t_m = 0.0;     // nearest jump of size >= 2^-m
    double r_m = 0.0;     // half the isolation gap (other large jumps / domain edges)
    double jump = 0.0;    // largest-|component| signed value of the anchor jump
    double delta_m = 0.0; // oscillation of the jump-removed component path
    double bound = 0.0;   // log(r|J|) / log(|t_m - t| + r)
    bool qualified = false;
};

struct HolderBoundResult {
    double bound = 0.0;  // min over qualifying bands; +inf if none qualifies
    std::vector<BandBound> bands;
};

// Per-band sorted jump tables for one path, reusable across many probe times t.
class JumpTable {
public:
    JumpTable(const PathRecord& rec, int m_lo, int m_hi, double epsilon);
    HolderBoundResult bound_at(double t, const HolderBoundOptions& opt) const;

private:
    struct Anchor {
        double t;
        std::size_t index;  // into rec.events
    };
    const PathRecord* rec_;
    int m_lo_, m_hi_;
    std::vector<std::vector<Anchor>> anchors_;     // size >= 2^-m
    std::vector<std::vector<Anchor>> isolation_;   // size >= 2^-m(1+eps)
    std::vector<double> times_;
    std::vector<Vec3> levels_;                     // v0 + prefix sums of dv

    double removed_oscillation(std::size_t removed, int comp, double lo, double hi) const;
};

// Upper bound on the position-path exponent at t from isolated large jumps:
// for each band m pick the nearest jump of size >= 2^-m, measure its isolation
// radius r_m against jumps of size >= 2^-m(1+eps), require the jump-removed
// path to oscillate by at most osc_ratio * |J| on [t_m - r_m, t_m + r_m], and
// score log(r_m |J|) / log(|t_m - t| + r_m). Minimum over qualifying bands.
HolderBoundResult position_holder_bound(const PathRecord& rec, double t,
                                        const HolderBoundOptions& opt);

// cusp if |h_x - (1 + h_v)| <= margin, oscillating if h_x exceeds 1 + h_v by
// more than margin, undetermined otherwise (including h_x below 1 + h_v -
// margin, which no consistent estimate should produce).
SingularityKind classify_singularity(const ExponentSample& sample, double margin);

// True when h_x < 1 + h_v - margin: the estimate violates the integral
// smoothing inequality and the sample should be excluded from spectra.
bool estimator_inconsistent(const ExponentSample& sample, double margin);

}  // namespace boltzfrac
