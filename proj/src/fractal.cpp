#include "boltzfrac/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace boltzfrac {

namespace {

// Dyadic band of a jump size: the m with 2^-(m+1) < size <= 2^-m.
int band_of(double size) {
    int e;
    const double f = std::frexp(size, &e);  // size = f * 2^e, f in [0.5, 1)
    return f == 0.5 ? 1 - e : -e;
}

double clamp01cap(double x) { return std::clamp(x, 0.0, kDeltaCap); }

}  // namespace

BandIndex::BandIndex(const PathRecord& rec, int m_lo, int m_hi) : m_lo_(m_lo), m_hi_(m_hi) {
    if (m_lo > m_hi) throw std::invalid_argument("BandIndex: m_lo > m_hi");
    bands_.resize(static_cast<std::size_t>(m_hi - m_lo + 1));
    event_times_.reserve(rec.events.size());
    for (const auto& e : rec.events) {
        event_times_.push_back(e.t);
        const double size = norm(e.dv);
        if (size <= 0.0) continue;
        const int m = band_of(size);
        if (m < m_lo || m > m_hi) continue;
        bands_[static_cast<std::size_t>(m - m_lo)].push_back({e.t, size});
    }
}

bool BandIndex::all_bands_empty() const {
    for (const auto& b : bands_)
        if (!b.empty()) return false;
    return true;
}

bool BandIndex::is_event_time(double t) const {
    return std::binary_search(event_times_.begin(), event_times_.end(), t);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> jump_bands(const PathRecord& rec,
                                                                         int m) {
    const double hi = std::exp2(-static_cast<double>(m));
    const double lo = 0.5 * hi;
    std::vector<std::size_t> full, dyadic;
    for (std::size_t i = 0; i < rec.events.size(); ++i) {
        const double size = norm(rec.events[i].dv);
        if (size <= hi) {
            full.push_back(i);
            if (size > lo) dyadic.push_back(i);
        }
    }
    return {std::move(full), std::move(dyadic)};
}

IntervalUnion covering_union(const PathRecord& rec, double delta, int m, bool band_only) {
    if (!(delta > 0.0)) throw std::domain_error("covering_union: delta must be positive");
    const double hi = std::exp2(-static_cast<double>(m));
    const double lo = 0.5 * hi;
    std::vector<std::pair<double, double>> raw;
    for (const auto& e : rec.events) {
        const double size = norm(e.dv);
        if (size <= 0.0 || size > hi || (band_only && size <= lo)) continue;
        const double r = std::pow(size, delta);
        raw.emplace_back(std::max(0.0, e.t - r), std::min(rec.meta.horizon, e.t + r));
    }
    return IntervalUnion(std::move(raw));
}

std::optional<double> approximation_index(const BandIndex& idx, double t) {
    if (idx.all_bands_empty()) return std::nullopt;
    if (idx.is_event_time(t)) return kDeltaCap;

    constexpr double kLn2 = std::numbers::ln2;
    double best = 0.0;
    for (int m = idx.m_lo(); m <= idx.m_hi(); ++m) {
        const auto& marks = idx.band(m);
        if (marks.empty()) continue;
        // Largest exponent any band-m jump at distance D can score; lets the
        // outward scans stop early. Band 0 admits sizes up to 1 (no bound).
        auto ceiling = [m](double dist) {
            if (m <= 0) return kDeltaCap;
            return -std::log(dist) / (static_cast<double>(m) * kLn2);
        };
        auto score = [&best](double dist, double size) {
            if (dist >= 1.0) return;
            double cand;
            if (size >= 1.0) {
                cand = kDeltaCap;  // unit-or-larger jump covers t at every exponent
            } else {
                cand = std::log(dist) / std::log(size);
            }
            best = std::max(best, clamp01cap(cand));
        };
        const auto cmp = [](const BandIndex::Mark& a, double v) { return a.t < v; };
        const auto mid = std::lower_bound(marks.begin(), marks.end(), t, cmp);
        for (auto it = mid; it != marks.end(); ++it) {
            const double dist = it->t - t;
            if (dist >= 1.0 || ceiling(dist) <= best) break;
            score(dist, it->size);
        }
        for (auto it = mid; it != marks.begin();) {
            --it;
            const double dist = t - it->t;
            if (dist >= 1.0 || ceiling(dist) <= best) break;
            score(dist, it->size);
        }
    }
    return best;
}

std::optional<double> approximation_index(const PathRecord& rec, double t, int m_lo, int m_hi) {
    return approximation_index(BandIndex(rec, m_lo, m_hi), t);
}

std::optional<double> holder_velocity(const BandIndex& idx, double t) {
    const auto d = approximation_index(idx, t);
    if (!d) return std::nullopt;
    if (*d >= kDeltaCap) return 0.0;
    if (*d == 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / *d;
}

std::optional<double> holder_velocity(const PathRecord& rec, double t, int m_lo, int m_hi) {
    return holder_velocity(BandIndex(rec, m_lo, m_hi), t);
}

std::uint64_t large_jump_count(const PathRecord& rec, int m, double r, double t) {
    const double thr = std::exp2(-static_cast<double>(m));
    std::uint64_t n = 0;
    for (const auto& e : rec.events)
        if (e.t >= r && e.t <= t && norm(e.dv) >= thr) ++n;
    return n;
}

std::uint64_t pair_gap_count(const std::vector<PathRecord>& paths, int m, double delta,
                             double epsilon) {
    const double thr = std::exp2(-static_cast<double>(m) * (1.0 + epsilon));
    const double gap = std::exp2(-static_cast<double>(m) * delta);
    std::uint64_t n = 0;
    for (const auto& rec : paths) {
        double prev = 0.0;
        for (const auto& e : rec.events) {
            if (norm(e.dv) < thr) continue;
            if (e.t - prev <= gap) ++n;
            prev = e.t;
        }
    }
    return n;
}

double truncated_increment_sup(const PathRecord& rec, int m, double delta) {
    if (!(delta > 0.0)) throw std::domain_error("truncated_increment_sup: delta must be positive");
    const double keep = std::exp2(-static_cast<double>(m) / delta);
    const double window = std::exp2(-static_cast<double>(m));

    // Piecewise-constant levels of the small-jump path; level k is active on
    // [t_k, t_{k+1}). Levels i < j coexist inside a window of width `window`
    // iff t_j - t_{i+1} < window (x may sit arbitrarily close to t_{i+1}).
    std::vector<double> times{0.0};
    std::vector<Vec3> levels{{0.0, 0.0, 0.0}};
    for (const auto& e : rec.events) {
        if (norm(e.dv) > keep) continue;
        times.push_back(e.t);
        levels.push_back(levels.back() + e.dv);
    }
    const std::size_t k = levels.size();
    double sup = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        const double reach = times[i + 1] + window;
        for (std::size_t j = i + 1; j < k && times[j] < reach; ++j)
            sup = std::max(sup, norm(levels[j] - levels[i]));
    }
    return sup;
}

double z_total(const PathRecord& rec, int m) {
    const double cap = 4.0 * std::exp2(-static_cast<double>(m));
    double s = 0.0;
    for (const auto& e : rec.events)
        if (e.kappa <= cap) s += e.kappa;
    return s;
}

std::int64_t box_count(const IntervalUnion& u, double scale) {
    if (!(scale > 0.0)) throw std::domain_error("box_count: scale must be positive");
    std::int64_t n = 0;
    std::int64_t last = std::numeric_limits<std::int64_t>::min();
    for (const auto& [lo, hi] : u.intervals()) {
        const auto ilo = std::max(static_cast<std::int64_t>(std::floor(lo / scale)), last + 1);
        const auto ihi = static_cast<std::int64_t>(std::floor(hi / scale));
        if (ihi >= ilo) {
            n += ihi - ilo + 1;
            last = ihi;
        }
    }
    return n;
}

std::int64_t box_count(std::span<const double> sorted_points, double scale) {
    if (!(scale > 0.0)) throw std::domain_error("box_count: scale must be positive");
    std::int64_t n = 0;
    std::int64_t last = std::numeric_limits<std::int64_t>::min();
    for (const double p : sorted_points) {
        const auto i = static_cast<std::int64_t>(std::floor(p / scale));
        if (i != last) {
            ++n;
            last = i;
        }
    }
    return n;
}

namespace {

template <typename Counter>
double box_dimension_impl(bool empty, int k_lo, int k_hi, Counter count_at) {
    if (empty) return dim_empty();
    if (k_lo >= k_hi) throw std::domain_error("box_dimension: need at least two scales");
    std::vector<double> xs, ys;
    for (int k = k_lo; k <= k_hi; ++k) {
        xs.push_back(static_cast<double>(k));
        ys.push_back(std::log2(static_cast<double>(count_at(std::exp2(-k)))));
    }
    return linear_fit(xs, ys).slope;
}

}  // namespace

double box_dimension(const IntervalUnion& u, int k_lo, int k_hi) {
    return box_dimension_impl(u.empty(), k_lo, k_hi,
                              [&u](double scale) { return box_count(u, scale); });
}

double box_dimension(std::vector<double> points, int k_lo, int k_hi) {
    std::sort(points.begin(), points.end());
    return box_dimension_impl(points.empty(), k_lo, k_hi, [&points](double scale) {
        return box_count(std::span<const double>(points), scale);
    });
}

double covering_set_dimension(const std::vector<PathRecord>& paths, double delta, int m_lo,
                              int m_hi) {
    if (paths.empty()) return dim_empty();
    std::vector<double> xs, ys;
    for (int m = m_lo; m <= m_hi; ++m) {
        double mean = 0.0;
        for (const auto& rec : paths) {
            const auto u = covering_union(rec, delta, m, /*band_only=*/true);
            mean += static_cast<double>(box_count(u, std::exp2(-m * delta)));
        }
        mean /= static_cast<double>(paths.size());
        if (mean > 0.0) {
            xs.push_back(m * delta);
            ys.push_back(std::log2(mean));
        }
    }
    if (xs.size() < 2) return dim_empty();
    return linear_fit(xs, ys).slope;
}

namespace {

// Dimension of the jump-time set itself: box counts at scales just below the
// resolution of the sample, where a finite set flattens out.
SpectrumRow jump_time_row(const std::vector<PathRecord>& paths, double h, double d_theory) {
    SpectrumRow row;
    row.h = h;
    row.d_theory = d_theory;
    double mean_events = 0.0;
    for (const auto& rec : paths) mean_events += static_cast<double>(rec.events.size());
    mean_events /= static_cast<double>(paths.size());
    if (mean_events < 1.0) {
        row.status = SpectrumRow::Status::empty;
        return row;
    }
    const int k_lo = static_cast<int>(std::ceil(std::log2(mean_events))) + 2;
    const int k_hi = k_lo + 6;
    std::vector<std::vector<double>> times(paths.size());
    for (std::size_t p = 0; p < paths.size(); ++p) {
        times[p].reserve(paths[p].events.size());
        for (const auto& e : paths[p].events) times[p].push_back(e.t);
    }
    std::vector<double> xs, ys;
    for (int k = k_lo; k <= k_hi; ++k) {
        double mean = 0.0;
        for (const auto& ts : times)
            mean += static_cast<double>(box_count(std::span<const double>(ts), std::exp2(-k)));
        mean /= static_cast<double>(paths.size());
        xs.push_back(static_cast<double>(k));
        ys.push_back(std::log2(mean));
    }
    for (const auto& rec : paths) row.n_samples += rec.events.size();
    row.d_hat = std::clamp(linear_fit(xs, ys).slope, 0.0, 1.0);
    row.status = SpectrumRow::Status::ok;
    return row;
}

}  // namespace

SpectrumEstimate empirical_spectrum(const std::vector<PathRecord>& paths,
                                    const std::vector<double>& h_grid, int m_lo, int m_hi,
                                    double tolerance, SpectrumKind kind) {
    if (paths.empty()) throw std::invalid_argument("empirical_spectrum: no paths");
    const double nu = paths[0].meta.nu;
    for (const auto& rec : paths)
        if (std::abs(rec.meta.nu - nu) > 1e-12)
            throw std::invalid_argument("empirical_spectrum: paths mix different nu");

    std::vector<BandIndex> indices;
    indices.reserve(paths.size());
    for (const auto& rec : paths) indices.emplace_back(rec, m_lo, m_hi);

    SpectrumEstimate est;
    est.nu = nu;
    est.kind = kind;

    const int n_bands = m_hi - m_lo + 1;
    for (const double h : h_grid) {
        const double hv = kind == SpectrumKind::position ? h - 1.0 : h;
        const double d_theory = theoretical_spectrum(h, nu, kind);

        if (hv < 0.0) {
            SpectrumRow row;
            row.h = h;
            row.d_theory = d_theory;
            row.status = SpectrumRow::Status::empty;
            est.rows.push_back(row);
            continue;
        }
        if (hv == 0.0) {
            est.rows.push_back(jump_time_row(paths, h, d_theory));
            continue;
        }

        const double delta = 1.0 / hv;
        SpectrumRow row;
        row.h = h;
        row.d_theory = d_theory;

        // counts[band], mean over paths, of boxes of width 2^(-m delta)
        // occupied by surviving test points.
        std::vector<double> mean_counts(static_cast<std::size_t>(n_bands), 0.0);
        std::uint64_t total_marks = 0;
        for (std::size_t p = 0; p < paths.size(); ++p) {
            const auto& idx = indices[p];
            const double horizon = paths[p].meta.horizon;
            for (int m = m_lo; m <= m_hi; ++m) {
                std::vector<double> marks;
                for (const auto& mark : idx.band(m)) {
                    const double r = std::pow(mark.size, delta);
                    for (const double t : {mark.t - r, mark.t + r}) {
                        if (t <= 0.0 || t >= horizon) continue;
                        const auto dh = approximation_index(idx, t);
                        if (!dh) continue;
                        const double hhat = *dh >= kDeltaCap ? 0.0
                                            : *dh == 0.0     ? std::numeric_limits<double>::infinity()
                                                             : 1.0 / *dh;
                        if (std::abs(hhat - hv) <= tolerance) marks.push_back(t);
                    }
                }
                std::sort(marks.begin(), marks.end());
                total_marks += marks.size();
                mean_counts[static_cast<std::size_t>(m - m_lo)] += static_cast<double>(
                    box_count(std::span<const double>(marks), std::exp2(-m * delta)));
            }
        }

        std::vector<double> xs, ys;
        for (int m = m_lo; m <= m_hi; ++m) {
            const double mean =
                mean_counts[static_cast<std::size_t>(m - m_lo)] / static_cast<double>(paths.size());
            if (mean > 0.0) {
                xs.push_back(m * delta);
                ys.push_back(std::log2(mean));
            }
        }
        row.n_samples = total_marks;
        if (total_marks < kSpectrumMinMarks) {
            row.status = SpectrumRow::Status::empty;
        } else if (xs.size() < 2) {
            row.status = SpectrumRow::Status::undetermined;
        } else {
            row.d_hat = std::clamp(linear_fit(xs, ys).slope, 0.0, 1.0);
            row.status = SpectrumRow::Status::ok;
        }
        est.rows.push_back(row);
    }
    return est;
}

double theoretical_spectrum(double h, double nu, SpectrumKind kind) {
    constexpr double kEdge = 1e-12;
    if (kind == SpectrumKind::velocity) {
        if (h < -kEdge || h > 1.0 / nu + kEdge) return dim_empty();
        return nu * h;
    }
    if (h < 1.0 - kEdge || h > 1.0 + 1.0 / nu + kEdge) return dim_empty();
    return nu * (h - 1.0);
}

double h_m_delta_density(double y, int m, double delta, const SupportConstants& sc,
                         const CrossSection& cs) {
    if (!(delta > 0.0)) throw std::domain_error("h_m_delta_density: delta must be positive");
    if (y <= 0.0) return 0.0;
    const double K = 1.0 / (sc.B + sc.c);
    const double cutoff = std::min(std::pow(sc.a * K * std::exp2(-(m + 2.0)), delta),
                                   std::pow(sc.a * std::numbers::pi / 8.0, delta));
    if (y > cutoff) return 0.0;
    const double theta = 4.0 * std::pow(y, 1.0 / delta) / sc.a;
    if (theta >= std::numbers::pi) return 0.0;
    const double prefactor =
        8.0 * std::numbers::pi * std::pow(sc.d, cs.gamma) * sc.b / (sc.a * delta);
    return prefactor * cs.beta_kernel(theta) * std::pow(y, 1.0 / delta - 1.0);
}

bool shepp_diverges(double delta, double nu) { return delta < nu; }

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("linear_fit: need >= 2 paired points");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
    LinearFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

}  // namespace boltzfrac
