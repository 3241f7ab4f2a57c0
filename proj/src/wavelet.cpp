#include "boltzfrac/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace boltzfrac {

namespace {

// Double-double arithmetic (Dekker/Knuth error-free transforms on hardware
// fma). The Horner sum for R_k cancels its leading terms by factors up to
// ~1e6 at k = 12; at long double precision that noise reaches ~1e-13 of the
// local value and pollutes the wavelet moments at 1e-7. 106-bit compensated
// evaluation pushes it below the final double rounding.
struct DD {
    double hi = 0.0;
    double lo = 0.0;
};

DD two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

DD quick_two_sum(double a, double b) {  // requires |a| >= |b| or a == 0
    const double s = a + b;
    return {s, b - (s - a)};
}

DD two_prod(double a, double b) {
    const double p = a * b;
    return {p, std::fma(a, b, -p)};
}

DD dd_add(DD a, DD b) {
    DD s = two_sum(a.hi, b.hi);
    s.lo += a.lo + b.lo;
    return quick_two_sum(s.hi, s.lo);
}

DD dd_mul(DD a, DD b) {
    DD p = two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return quick_two_sum(p.hi, p.lo);
}

DD dd_mul_d(DD a, double b) {
    DD p = two_prod(a.hi, b);
    p.lo += a.lo * b;
    return quick_two_sum(p.hi, p.lo);
}

DD dd_neg(DD a) { return {-a.hi, -a.lo}; }

DD dd_recip(DD b) {
    const double q1 = 1.0 / b.hi;
    const double r = std::fma(-q1, b.hi, 1.0) - q1 * b.lo;
    return quick_two_sum(q1, r / b.hi);
}

// R_k as a polynomial in u = 1/x and s = 1/(1-x): coef[i][j] multiplies
// u^i s^j. Integer coefficients, held exactly in 106 bits through k ~ 14
// (they outgrow a double at k = 12 already).
using RationalPoly = std::vector<std::vector<DD>>;

const RationalPoly& rational_coeff(int k) {
    static std::mutex mu;
    static std::vector<RationalPoly> cache{RationalPoly{{DD{1.0, 0.0}}}};
    std::lock_guard lock(mu);
    while (static_cast<int>(cache.size()) <= k) {
        const RationalPoly& r = cache.back();
        const std::size_t dim = r.size();
        RationalPoly next(dim + 2, std::vector<DD>(dim + 2));
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                const DD c = r[i][j];
                if (c.hi == 0.0 && c.lo == 0.0) continue;
                // d/dx (u^i s^j) = -i u^(i+1) s^j + j u^i s^(j+1)
                next[i + 1][j] = dd_add(next[i + 1][j], dd_mul_d(c, -static_cast<double>(i)));
                next[i][j + 1] = dd_add(next[i][j + 1], dd_mul_d(c, static_cast<double>(j)));
                // R_k * (u^2 - s^2)
                next[i + 2][j] = dd_add(next[i + 2][j], c);
                next[i][j + 2] = dd_add(next[i][j + 2], dd_neg(c));
            }
        }
        cache.push_back(std::move(next));
    }
    return cache[static_cast<std::size_t>(k)];
}

DD eval_rational(const RationalPoly& p, DD u, DD s) {
    DD acc;
    for (std::size_t i = p.size(); i-- > 0;) {
        DD row;
        const auto& pi = p[i];
        for (std::size_t j = pi.size(); j-- > 0;) row = dd_add(dd_mul(row, s), pi[j]);
        acc = dd_add(dd_mul(acc, u), row);
    }
    return acc;
}

long double raw_bump(long double x) {
    if (!(x > 0.0L && x < 1.0L)) return 0.0L;
    const long double w = 1.0L / x + 1.0L / (1.0L - x);
    if (w > 11000.0L) return 0.0L;  // below long double underflow anyway
    return std::exp(-w);
}

long double bump_norm() {
    // Trapezoid on a C-infinity periodic-like integrand (all endpoint
    // derivatives vanish): converges superalgebraically.
    static const long double z = [] {
        const int n = 1 << 17;
        const long double h = 1.0L / n;
        long double sum = 0.0L;
        for (int i = 1; i < n; ++i) sum += raw_bump(i * h);
        return sum * h;
    }();
    return z;
}

double component(Vec3 v, int i) { return v[i]; }

void min_max_update(Vec3 v, Vec3& mn, Vec3& mx) {
    mn = {std::min(mn.x, v.x), std::min(mn.y, v.y), std::min(mn.z, v.z)};
    mx = {std::max(mx.x, v.x), std::max(mx.y, v.y), std::max(mx.z, v.z)};
}

// Visit the pieces of a piecewise path restricted to [b, b+a]. The value
// index passed to f follows the convention values[k] active on
// [times[k-1], times[k]).
template <typename F>
void for_each_piece(const std::vector<double>& times, double a, double b, F&& f) {
    const double end = b + a;
    auto piece = static_cast<std::size_t>(
        std::upper_bound(times.begin(), times.end(), b) - times.begin());
    double cur = b;
    while (cur < end) {
        const double stop = piece < times.size() ? std::min(times[piece], end) : end;
        if (stop > cur) f(cur, stop, piece);
        cur = stop;
        ++piece;
    }
}

struct Accum {
    Vec3 value;
    double scale = 0.0;  // sum of term magnitudes, for relative-gap reporting
};

Accum transform_velocity(const VelocityPath& g, double a, double b, int order) {
    if (!(a > 0.0)) throw std::domain_error("wavelet_transform: a must be positive");
    if (order < 1) throw std::domain_error("wavelet_transform: order must be >= 1");
    Accum acc;
    for_each_piece(g.times, a, b, [&](double lo, double hi, std::size_t piece) {
        const double d =
            bump_derivative((hi - b) / a, order - 1) - bump_derivative((lo - b) / a, order - 1);
        const Vec3 term = g.values[piece] * d;
        acc.value += term;
        acc.scale += norm(term);
    });
    return acc;
}

Accum transform_position(const PositionPath& g, double a, double b, int order) {
    if (!(a > 0.0)) throw std::domain_error("wavelet_transform: a must be positive");
    if (order < 2) throw std::domain_error("wavelet_transform: piecewise-linear input needs order >= 2");
    auto value_at = [&g](std::size_t piece, double t) -> Vec3 {
        if (piece == 0) return g.values[0] * t;
        return g.anchors[piece - 1] + g.values[piece] * (t - g.times[piece - 1]);
    };
    Accum acc;
    for_each_piece(g.times, a, b, [&](double lo, double hi, std::size_t piece) {
        const double y_lo = (lo - b) / a;
        const double y_hi = (hi - b) / a;
        const double p1_lo = bump_derivative(y_lo, order - 1);
        const double p1_hi = bump_derivative(y_hi, order - 1);
        const double p2_lo = bump_derivative(y_lo, order - 2);
        const double p2_hi = bump_derivative(y_hi, order - 2);
        const Vec3 t_hi = value_at(piece, hi) * p1_hi;
        const Vec3 t_lo = value_at(piece, lo) * p1_lo;
        const Vec3 t_slope = g.values[piece] * (a * (p2_hi - p2_lo));
        acc.value += t_hi - t_lo - t_slope;
        acc.scale += norm(t_hi) + norm(t_lo) + norm(t_slope);
    });
    return acc;
}

}  // namespace

double bump(double x) {
    return static_cast<double>(raw_bump(static_cast<long double>(x)) / bump_norm());
}

double bump_derivative(double x, int k) {
    if (k < 0) throw std::domain_error("bump_derivative: order must be >= 0");
    if (k == 0) return bump(x);
    if (!(x > 0.0 && x < 1.0)) return 0.0;
    const DD u = dd_recip({x, 0.0});
    const DD s = dd_recip(two_sum(1.0, -x));
    const DD w = dd_add(u, s);
    if (w.hi > 11000.0) return 0.0;
    const DD r = eval_rational(rational_coeff(k), u, s);
    // exp(-w) = exp(-w.hi) * exp(-w.lo); w.hi is a double, so expl sees its
    // argument exactly, and |w.lo| <= ulp(w.hi) keeps the series to two terms.
    const long double lo = static_cast<long double>(w.lo);
    const long double e = std::exp(-static_cast<long double>(w.hi)) * (1.0L - lo + 0.5L * lo * lo);
    const long double rl = static_cast<long double>(r.hi) + static_cast<long double>(r.lo);
    return static_cast<double>(rl * e / bump_norm());
}

Wavelet::Wavelet(int order) : order_(order) {
    if (order < 1) throw std::domain_error("Wavelet: order must be >= 1");
}

Vec3 wavelet_transform(const VelocityPath& g, double a, double b, int order) {
    return transform_velocity(g, a, b, order).value;
}

Vec3 wavelet_transform(const PositionPath& g, double a, double b, int order) {
    return transform_position(g, a, b, order).value;
}

IbpResult ibp_check(const PathRecord& rec, double a, double b, int order) {
    const auto vel = build_velocity_path(rec);
    const auto pos = build_position_path(rec);
    const Accum lhs = transform_velocity(vel, a, b, order);
    const Accum raw = transform_position(pos, a, b, order + 1);
    IbpResult res;
    res.lhs = lhs.value;
    res.rhs = raw.value * (-1.0 / a);
    const double scale = std::max(lhs.scale, raw.scale / a);
    const Vec3 d = res.lhs - res.rhs;
    const double diff = std::max({std::abs(d.x), std::abs(d.y), std::abs(d.z)});
    res.gap = scale > 0.0 ? diff / scale : 0.0;
    return res;
}

double oscillation(const VelocityPath& path, double lo, double hi) {
    lo = std::max(lo, 0.0);
    hi = std::min(hi, path.horizon);
    if (!(lo <= hi)) return 0.0;
    Vec3 mn = path.at(lo);
    Vec3 mx = mn;
    auto k = static_cast<std::size_t>(
        std::upper_bound(path.times.begin(), path.times.end(), lo) - path.times.begin());
    for (; k < path.times.size() && path.times[k] <= hi; ++k)
        min_max_update(path.values[k + 1], mn, mx);
    const Vec3 d = mx - mn;
    return std::max({d.x, d.y, d.z});
}

JumpTable::JumpTable(const PathRecord& rec, int m_lo, int m_hi, double epsilon)
    : rec_(&rec), m_lo_(m_lo), m_hi_(m_hi) {
    if (m_lo > m_hi) throw std::invalid_argument("JumpTable: m_lo > m_hi");
    const auto n_bands = static_cast<std::size_t>(m_hi - m_lo + 1);
    anchors_.resize(n_bands);
    isolation_.resize(n_bands);
    times_.reserve(rec.events.size());
    levels_.reserve(rec.events.size());
    Vec3 level = rec.v0;
    for (const auto& e : rec.events) {
        times_.push_back(e.t);
        level += e.dv;
        levels_.push_back(level);
    }
    for (int m = m_lo; m <= m_hi; ++m) {
        const double thr_anchor = std::exp2(-static_cast<double>(m));
        const double thr_iso = std::exp2(-static_cast<double>(m) * (1.0 + epsilon));
        auto& anch = anchors_[static_cast<std::size_t>(m - m_lo)];
        auto& iso = isolation_[static_cast<std::size_t>(m - m_lo)];
        for (std::size_t i = 0; i < rec.events.size(); ++i) {
            const double size = norm(rec.events[i].dv);
            if (size >= thr_iso) iso.push_back({rec.events[i].t, i});
            if (size >= thr_anchor) anch.push_back({rec.events[i].t, i});
        }
    }
}

double JumpTable::removed_oscillation(std::size_t removed, int comp, double lo, double hi) const {
    lo = std::max(lo, 0.0);
    hi = std::min(hi, rec_->meta.horizon);
    if (!(lo <= hi)) return 0.0;
    const double jump = component(rec_->events[removed].dv, comp);
    auto value_after = [&](std::size_t k) {
        return component(levels_[k], comp) - (k >= removed ? jump : 0.0);
    };
    auto p = static_cast<std::size_t>(
        std::upper_bound(times_.begin(), times_.end(), lo) - times_.begin());
    double v = p == 0 ? component(rec_->v0, comp) : value_after(p - 1);
    double mn = v, mx = v;
    for (std::size_t k = p; k < times_.size() && times_[k] <= hi; ++k) {
        v = value_after(k);
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    return mx - mn;
}

HolderBoundResult JumpTable::bound_at(double t, const HolderBoundOptions& opt) const {
    HolderBoundResult res;
    res.bound = std::numeric_limits<double>::infinity();
    const double horizon = rec_->meta.horizon;
    const int lo_m = std::max(m_lo_, opt.m_lo);
    const int hi_m = std::min(m_hi_, opt.m_hi);
    for (int m = lo_m; m <= hi_m; ++m) {
        const auto& anch = anchors_[static_cast<std::size_t>(m - m_lo_)];
        if (anch.empty()) continue;
        const auto cmp = [](const Anchor& x, double v) { return x.t < v; };
        auto it = std::lower_bound(anch.begin(), anch.end(), t, cmp);
        if (it == anch.end() || (it != anch.begin() && t - std::prev(it)->t < it->t - t)) --it;

        BandBound bb;
        bb.m = m;
        bb.t_m = it->t;
        const Vec3 dv = rec_->events[it->index].dv;
        int comp = 0;
        for (int c = 1; c < 3; ++c)
            if (std::abs(dv[c]) > std::abs(dv[comp])) comp = c;
        bb.jump = dv[comp];

        const auto& iso = isolation_[static_cast<std::size_t>(m - m_lo_)];
        double gap = std::numeric_limits<double>::infinity();
        auto jt = std::lower_bound(iso.begin(), iso.end(), bb.t_m,
                                   [](const Anchor& x, double v) { return x.t < v; });
        for (auto r = jt; r != iso.end(); ++r) {
            if (r->index == it->index) continue;
            gap = std::min(gap, r->t - bb.t_m);
            break;
        }
        for (auto l = jt; l != iso.begin();) {
            --l;
            if (l->index == it->index) continue;
            gap = std::min(gap, bb.t_m - l->t);
            break;
        }
        const double r_m = 0.5 * std::min({gap, bb.t_m, horizon - bb.t_m});
        if (!(r_m > 0.0)) continue;
        bb.r_m = r_m;
        bb.delta_m = removed_oscillation(it->index, comp, bb.t_m - r_m, bb.t_m + r_m);
        bb.qualified =
            !opt.check_oscillation || bb.delta_m <= opt.osc_ratio * std::abs(bb.jump);

        const double num_arg = r_m * std::abs(bb.jump);
        const double den_arg = std::abs(bb.t_m - t) + r_m;
        if (num_arg >= 1.0 || den_arg >= 1.0 || num_arg <= 0.0) {
            bb.qualified = false;
            res.bands.push_back(bb);
            continue;
        }
        bb.bound = std::log(num_arg) / std::log(den_arg);
        if (bb.qualified) res.bound = std::min(res.bound, bb.bound);
        res.bands.push_back(bb);
    }
    return res;
}

HolderBoundResult position_holder_bound(const PathRecord& rec, double t,
                                        const HolderBoundOptions& opt) {
    return JumpTable(rec, opt.m_lo, opt.m_hi, opt.epsilon).bound_at(t, opt);
}

SingularityKind classify_singularity(const ExponentSample& sample, double margin) {
    if (!std::isfinite(sample.h_v) || !std::isfinite(sample.h_x))
        return SingularityKind::undetermined;
    const double excess = sample.h_x - (1.0 + sample.h_v);
    if (std::abs(excess) <= margin) return SingularityKind::cusp;
    if (excess > margin) return SingularityKind::oscillating;
    return SingularityKind::undetermined;
}

bool estimator_inconsistent(const ExponentSample& sample, double margin) {
    return std::isfinite(sample.h_v) && std::isfinite(sample.h_x) &&
           sample.h_x < 1.0 + sample.h_v - margin;
}

}  // namespace boltzfrac
