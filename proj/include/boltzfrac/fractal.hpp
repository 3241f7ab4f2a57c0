#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "boltzfrac/cross_section.hpp"
#include "boltzfrac/interval_union.hpp"
#include "boltzfrac/path_record.hpp"

namespace boltzfrac {

// Finite-resolution stand-in for the supremum defining the approximation
// index: per-jump exponents are clamped to [0, kDeltaCap], and an exact hit
// on a jump time scores kDeltaCap (velocity exponent 0 there).
inline constexpr double kDeltaCap = 64.0;

// Dimension of the empty set. Kept distinct from 0 on purpose.
inline double dim_empty() { return -std::numeric_limits<double>::infinity(); }

enum class SingularityKind { cusp, oscillating, jump_time, undetermined };

struct ExponentSample {
    double t = 0.0;
    double delta_hat = 0.0;  // approximation-index estimate
    double h_v = 0.0;        // velocity exponent estimate, 1/delta_hat
    double h_x = 0.0;        // position exponent estimate (upper bound)
    SingularityKind kind = SingularityKind::undetermined;
};

enum class SpectrumKind { velocity, position };

struct SpectrumRow {
    enum class Status { ok, empty, undetermined };
    double h = 0.0;
    double d_hat = 0.0;  // meaningful only when status == ok
    double d_theory = 0.0;
    std::uint64_t n_samples = 0;
    Status status = Status::undetermined;
};

struct SpectrumEstimate {
    std::vector<SpectrumRow> rows;
    double nu = 0.0;
    SpectrumKind kind = SpectrumKind::velocity;
};

// Dyadic-band view of one path: per band m the jumps with
// |dv| in (2^-(m+1), 2^-m], plus the full sorted event-time list.
class BandIndex {
public:
    struct Mark {
        double t;
        double size;
    };

    BandIndex(const PathRecord& rec, int m_lo, int m_hi);

    int m_lo() const { return m_lo_; }
    int m_hi() const { return m_hi_; }
    const std::vector<Mark>& band(int m) const { return bands_[static_cast<std::size_t>(m - m_lo_)]; }
    const std::vector<double>& event_times() const { return event_times_; }
    bool all_bands_empty() const;
    bool is_event_time(double t) const;

private:
    int m_lo_;
    int m_hi_;
    std::vector<std::vector<Mark>> bands_;
    std::vector<double> event_times_;
};

// Index sets (J_m, J~_m): positions into rec.events of the jumps with
// |dv| <= 2^-m and with |dv| in (2^-(m+1), 2^-m] respectively.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> jump_bands(const PathRecord& rec, int m);

// Union over the selected jump set of [s - |dv|^delta, s + |dv|^delta],
// clipped to [0, horizon]. band_only selects J~_m instead of J_m.
IntervalUnion covering_union(const PathRecord& rec, double delta, int m, bool band_only);

// Max over bands and jumps of log|t-s| / log|dv_s|, clamped to [0, kDeltaCap];
// kDeltaCap when t is an event time; nullopt when every band in the window is
// empty. The scan over a band is pruned: a jump at distance D cannot beat the
// running best once log(1/D) / ((m+1) log 2) falls below it.
std::optional<double> approximation_index(const BandIndex& idx, double t);
std::optional<double> approximation_index(const PathRecord& rec, double t, int m_lo, int m_hi);

// 1/approximation_index; 0 at jump times (index at cap).
std::optional<double> holder_velocity(const BandIndex& idx, double t);
std::optional<double> holder_velocity(const PathRecord& rec, double t, int m_lo, int m_hi);

// Number of jumps with |dv| >= 2^-m and time in [r, t].
std::uint64_t large_jump_count(const PathRecord& rec, int m, double r, double t);

// Total over paths of #{i >= 1 : T_i - T_{i-1} <= 2^(-m delta)} where the T_i
// enumerate jumps with |dv| >= 2^(-m(1+epsilon)) and T_0 = 0.
std::uint64_t pair_gap_count(const std::vector<PathRecord>& paths, int m, double delta,
                             double epsilon);

// Sup over windows of width 2^-m of the increment of the path rebuilt from
// jumps with |dv| <= 2^(-m/delta). Exact from event data.
double truncated_increment_sup(const PathRecord& rec, int m, double delta);

// Sum of kappa over events with kappa/4 <= 2^-m.
double z_total(const PathRecord& rec, int m);

// Occupied boxes of width `scale` (grid anchored at 0).
std::int64_t box_count(const IntervalUnion& u, double scale);
std::int64_t box_count(std::span<const double> sorted_points, double scale);

// Least-squares slope of log2(box count) against log2(1/scale) over the
// dyadic scales 2^-k, k in [k_lo, k_hi]. Empty set: dim_empty().
double box_dimension(const IntervalUnion& u, int k_lo, int k_hi);
double box_dimension(std::vector<double> points, int k_lo, int k_hi);

// Coupled-scale dimension estimate of the covering sets: band m is counted
// with boxes of width 2^(-m delta) (the band's own interval length scale),
// counts are averaged over paths, and log2(mean count) is regressed on
// m*delta. Mixing bands at a single counting scale lets the sparse coarse
// bands smear over the fine ones and biases the slope toward 1; the coupled
// sweep reads off the per-band growth exponent instead.
double covering_set_dimension(const std::vector<PathRecord>& paths, double delta, int m_lo,
                              int m_hi);

// Level-set dimension estimates over a grid of target exponents.
//
// For h > 0 the level set is probed where it lives: every band-m jump s
// plants test points at |t - s| = |dv_s|^(1/h), which score delta ~ 1/h
// against the anchor; a point survives when no other jump dominates it past
// |1/delta_hat - h| <= tolerance. Surviving marks of band m are box-counted
// at width 2^(-m/h) and log2(mean count) is regressed on m/h, as in
// covering_set_dimension. h = 0 falls back to a plain box count of the jump
// times themselves at sub-resolution scales.
//
// Rows report empty (no populated level) when fewer than kSpectrumMinMarks
// marks survive overall, undetermined when marks exist but fewer than two
// bands are populated (no slope).
//
// kind == position shifts the exponent grid by the integration: the level
// set of h_X = h is probed via the velocity machinery at h - 1, and theory
// values come from the position branch.
inline constexpr std::uint64_t kSpectrumMinMarks = 5;
SpectrumEstimate empirical_spectrum(const std::vector<PathRecord>& paths,
                                    const std::vector<double>& h_grid, int m_lo, int m_hi,
                                    double tolerance, SpectrumKind kind);

// Velocity branch: nu*h on [0, 1/nu], else dim_empty().
// Position branch: nu*(h-1) on [1, 1/nu + 1], else dim_empty().
double theoretical_spectrum(double h, double nu, SpectrumKind kind);

// Support constants entering the jump-intensity density: a, c bound the
// partner region {|v - w| >= a, |v| <= c}, b lower-bounds its mass, d is the
// relative-speed factor (a for gamma > 0, B + c otherwise), B the truncation.
struct SupportConstants {
    double a;
    double b;
    double c;
    double d;
    double B;
};

// Intensity density of the per-jump covering radii (a theta_s / 4)^delta:
//   (8 pi d^gamma b / (a delta)) * beta(4 y^(1/delta) / a) * y^(1/delta - 1)
// cut off at y <= (a K 2^-(m+2))^delta ∧ (a pi/8)^delta with K = 1/(B + c).
double h_m_delta_density(double y, int m, double delta, const SupportConstants& sc,
                         const CrossSection& cs);

// Divergence criterion of the covering integral: true iff delta < nu.
bool shepp_diverges(double delta, double nu);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace boltzfrac
