// Acceptance gate: eleven numbered end-to-end checks, one PASS/FAIL line each.
// Every tolerance is pinned in this file; the process exits nonzero if any
// criterion fails.
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "boltzfrac/analysis.hpp"
#include "boltzfrac/collision.hpp"
#include "boltzfrac/config.hpp"
#include "boltzfrac/cross_section.hpp"
#include "boltzfrac/fractal.hpp"
#include "boltzfrac/num_io.hpp"
#include "boltzfrac/path_store.hpp"
#include "boltzfrac/rng.hpp"
#include "boltzfrac/simulator.hpp"
#include "boltzfrac/wavelet.hpp"

namespace fs = std::filesystem;
using namespace boltzfrac;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Gate {
    bool all = true;
    void line(int k, bool pass, const std::string& detail) {
        std::printf("CRITERION %d %s %s\n", k, pass ? "PASS" : "FAIL", detail.c_str());
        std::fflush(stdout);
        all = all && pass;
    }
};

SimulationConfig base_config(double gamma, double nu, double theta_min, std::uint64_t n,
                             std::uint64_t tracked, std::uint64_t seed) {
    SimulationConfig cfg;
    cfg.gamma = gamma;
    cfg.nu = nu;
    cfg.theta_min = theta_min;
    cfg.n_particles = n;
    cfg.n_tracked = tracked;
    cfg.seed = seed;
    cfg.horizon = 1.0;
    cfg.replicas = 1;
    return cfg;
}

// Run `total` independent replicas in batches (bounded memory), handing each
// finished replica to `eat`. Batch seeds come off the base seed's stream.
void stream_replicas(const SimulationConfig& base, std::uint64_t total, std::uint64_t batch,
                     const std::function<void(const ReplicaResult&)>& eat) {
    std::uint64_t done = 0;
    for (std::uint64_t b = 0; done < total; ++b) {
        SimulationConfig cfg = base;
        cfg.replicas = std::min<std::uint64_t>(batch, total - done);
        cfg.seed = stream_seed(base.seed, b);
        RunResult res = run(cfg);
        require_complete(res);
        for (const auto& rep : res.replicas) eat(rep);
        done += cfg.replicas;
    }
}

// 1: the collision map conserves pair momentum and energy to 1e-12 relative,
//    and both outgoing velocities sit on the sphere of radius |v - v*|/2
//    around the pair midpoint, over 10^6 random collisions in under 10 s.
void criterion1(Gate& g) {
    const auto t0 = Clock::now();
    Rng rng(0xC1A55E5ull);
    const std::uint64_t n = 1000000;
    double max_p = 0.0, max_e = 0.0, max_mid = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const double scale = std::exp2(rng.uniform(-2.0, 4.0));
        const Vec3 v = scale * rng.normal3();
        const Vec3 vs = scale * rng.normal3();
        const CollisionAngles ang{(1.0 - rng.uniform()) * std::numbers::pi / 2.0,
                                  rng.uniform(0.0, 2.0 * std::numbers::pi)};
        const auto [v1, v2] = post_collision(v, vs, ang);

        const Vec3 p0 = v + vs;
        max_p = std::max(max_p, norm((v1 + v2) - p0) / std::max(1.0, norm(p0)));
        const double e0 = norm2(v) + norm2(vs);
        max_e = std::max(max_e, std::abs(norm2(v1) + norm2(v2) - e0) / std::max(1.0, e0));
        const Vec3 mid = 0.5 * p0;
        const double half_d = 0.5 * norm(v - vs);
        max_mid = std::max(max_mid, std::abs(norm(v1 - mid) - half_d) / half_d);
        max_mid = std::max(max_mid, std::abs(norm(v2 - mid) - half_d) / half_d);
    }
    const double wall = seconds_since(t0);
    const bool pass = max_p <= 1e-12 && max_e <= 1e-12 && max_mid <= 1e-12 && wall < 10.0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "momentum rel %.2e, energy rel %.2e, midpoint rel %.2e (tol 1e-12 each), "
                  "%llu collisions, %.1f s (cap 10)",
                  max_p, max_e, max_mid, static_cast<unsigned long long>(n), wall);
    g.line(1, pass, buf);
}

// 2: on a ~10^5-event run every stored jump satisfies the closed-form size
//    identity |dv| = sin(theta/2) |w| to 1e-12 relative and the kernel bracket
//    kappa/4 <= |dv| <= kappa (kappa = theta |w|).
void criterion2(Gate& g) {
    SimulationConfig cfg = base_config(0.0, 0.5, 0x1.0p-12, 128, 128, 0xACC2ull);
    RunResult res = run(cfg);
    require_complete(res);
    double max_rel = 0.0;
    std::uint64_t events = 0, bracket_bad = 0;
    for (const auto& rep : res.replicas) {
        for (const auto& rec : rep.paths) {
            for (const auto& e : rec.events) {
                ++events;
                const double sz = norm(e.dv);
                const double want = std::sin(0.5 * e.theta) * (e.kappa / e.theta);
                max_rel = std::max(max_rel, std::abs(sz - want) / want);
                if (!(sz >= 0.25 * e.kappa && sz <= e.kappa)) ++bracket_bad;
            }
        }
    }
    const bool pass = events >= 50000 && max_rel <= 1e-12 && bracket_bad == 0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "size identity rel %.2e (tol 1e-12), bracket violations %llu/%llu events",
                  max_rel, static_cast<unsigned long long>(bracket_bad),
                  static_cast<unsigned long long>(events));
    g.line(2, pass, buf);
}

// 3: at gamma = 0 the per-particle event count is Poisson with mean
//    2 pi * tail_mass(theta_min) * T: grand mean within 3 SE over 200 replicas
//    of 128 particles, and the theta histogram passes a 9-band equal-mass
//    chi-square at the 1% level, in under 2 minutes.
void criterion3(Gate& g) {
    const auto t0 = Clock::now();
    SimulationConfig cfg = base_config(0.0, 0.5, 0x1.0p-12, 128, 128, 0xACC3ull);
    const std::uint64_t reps = 200;
    const CrossSection cs(cfg.gamma, cfg.nu, cfg.theta_min);
    const double lambda = 2.0 * std::numbers::pi * cs.tail_mass(cfg.theta_min) * cfg.horizon;

    constexpr int kBands = 9;
    std::vector<double> edges;  // interior equal-mass cuts
    for (int k = 1; k < kBands; ++k)
        edges.push_back(cs.sample_theta(static_cast<double>(k) / kBands));

    std::uint64_t event_total = 0, path_total = 0;
    std::vector<std::uint64_t> band(kBands, 0);
    stream_replicas(cfg, reps, 10, [&](const ReplicaResult& rep) {
        for (const auto& rec : rep.paths) {
            ++path_total;
            event_total += rec.events.size();
            for (const auto& e : rec.events) {
                const auto it = std::upper_bound(edges.begin(), edges.end(), e.theta);
                ++band[static_cast<std::size_t>(it - edges.begin())];
            }
        }
    });

    const double grand_mean = static_cast<double>(event_total) / static_cast<double>(path_total);
    const double se3 = 3.0 * std::sqrt(2.0 * lambda / static_cast<double>(reps * cfg.n_particles));
    const double mean_err = std::abs(grand_mean - lambda);

    // every collision is recorded on both participants (all particles are
    // tracked), so halve the histogram to count collisions once
    double chi2 = 0.0;
    const double expected = static_cast<double>(event_total) / 2.0 / kBands;
    for (int k = 0; k < kBands; ++k) {
        const double c = static_cast<double>(band[static_cast<std::size_t>(k)]) / 2.0;
        chi2 += (c - expected) * (c - expected) / expected;
    }
    const double chi2_crit = 20.0902;  // chi-square df=8, upper 1%

    const double wall = seconds_since(t0);
    const bool pass = mean_err <= se3 && chi2 <= chi2_crit && wall < 120.0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "mean %.3f vs %.3f (3SE %.3f), chi2 %.2f (crit %.2f, df 8), %.0f s (cap 120)",
                  grand_mean, lambda, se3, chi2, chi2_crit, wall);
    g.line(3, pass, buf);
}

// 4: the mean count of jumps >= 2^-m grows like 2^(nu m): regression slope of
//    log2 E[count] on m over m = 4..12 within 0.05 of nu, under 5 minutes.
void criterion4(Gate& g) {
    const auto t0 = Clock::now();
    SimulationConfig cfg = base_config(0.0, 0.5, 0x1.0p-18, 64, 64, 0xACC4ull);
    cfg.f0_temperature = 25.0;  // hot start keeps the m=4 band well populated
    const std::uint64_t reps = 200;
    const int m_lo = 4, m_hi = 12;

    std::vector<double> sums(static_cast<std::size_t>(m_hi - m_lo + 1), 0.0);
    std::uint64_t path_total = 0;
    stream_replicas(cfg, reps, 8, [&](const ReplicaResult& rep) {
        for (const auto& rec : rep.paths) {
            ++path_total;
            for (int m = m_lo; m <= m_hi; ++m)
                sums[static_cast<std::size_t>(m - m_lo)] += static_cast<double>(
                    large_jump_count(rec, m, 0.0, rec.meta.horizon));
        }
    });

    std::vector<double> xs, ys;
    for (int m = m_lo; m <= m_hi; ++m) {
        xs.push_back(static_cast<double>(m));
        ys.push_back(std::log2(sums[static_cast<std::size_t>(m - m_lo)] /
                               static_cast<double>(path_total)));
    }
    const double slope = linear_fit(xs, ys).slope;
    const double wall = seconds_since(t0);
    const bool pass = std::abs(slope - cfg.nu) <= 0.05 && wall < 300.0;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "slope %.4f vs nu %.2f (tol 0.05), m %d..%d, %.0f s (cap 300)",
                  slope, cfg.nu, m_lo, m_hi, wall);
    g.line(4, pass, buf);
}

// 5: covering sets. For delta < nu the union covers at least 99% of [0, T]
//    for every path and band m = 10..14 in at least 95 of 100 replicas; for
//    delta > nu the coupled-scale box dimension is nu/delta +- 0.15. Under
//    10 minutes combined.
void criterion5(Gate& g) {
    const auto t0 = Clock::now();

    SimulationConfig hot = base_config(0.0, 0.5, 0x1.0p-17, 64, 64, 0xACC5ull);
    const std::uint64_t reps = 100;
    const int m_lo = 10, m_hi = 14;
    const std::vector<double> small_deltas{0.3, 0.4};
    std::uint64_t replicas_ok = 0;
    stream_replicas(hot, reps, 5, [&](const ReplicaResult& rep) {
        bool ok = true;
        for (const auto& rec : rep.paths)
            for (const double d : small_deltas)
                for (int m = m_lo; m <= m_hi && ok; ++m) {
                    const auto u = covering_union(rec, d, m, /*band_only=*/false);
                    ok = u.total_length() / rec.meta.horizon >= 0.99;
                }
        if (ok) ++replicas_ok;
    });

    SimulationConfig cold = base_config(0.0, 0.5, 0x1.0p-14, 256, 16, 0xACC5Bull);
    cold.f0_temperature = 1e-5;
    const std::vector<double> big_deltas{0.6, 0.8, 1.0};
    std::vector<std::vector<double>> count_sums(big_deltas.size(),
                                                std::vector<double>(m_hi - m_lo + 1, 0.0));
    std::uint64_t cold_paths = 0;
    stream_replicas(cold, reps, 10, [&](const ReplicaResult& rep) {
        for (const auto& rec : rep.paths) {
            ++cold_paths;
            for (std::size_t di = 0; di < big_deltas.size(); ++di)
                for (int m = m_lo; m <= m_hi; ++m) {
                    const auto u = covering_union(rec, big_deltas[di], m, /*band_only=*/true);
                    count_sums[di][static_cast<std::size_t>(m - m_lo)] += static_cast<double>(
                        box_count(u, std::exp2(-m * big_deltas[di])));
                }
        }
    });

    bool dims_ok = true;
    std::string dim_text;
    for (std::size_t di = 0; di < big_deltas.size(); ++di) {
        std::vector<double> xs, ys;
        for (int m = m_lo; m <= m_hi; ++m) {
            const double mean = count_sums[di][static_cast<std::size_t>(m - m_lo)] /
                                static_cast<double>(cold_paths);
            if (mean > 0.0) {
                xs.push_back(m * big_deltas[di]);
                ys.push_back(std::log2(mean));
            }
        }
        const double dim = xs.size() >= 2 ? linear_fit(xs, ys).slope : dim_empty();
        const double want = cold.nu / big_deltas[di];
        dims_ok = dims_ok && std::abs(dim - want) <= 0.15;
        char piece[64];
        std::snprintf(piece, sizeof(piece), " d%.1f:%.3f/%.3f", big_deltas[di], dim, want);
        dim_text += piece;
    }

    const double wall = seconds_since(t0);
    const bool pass = replicas_ok >= 95 && dims_ok && wall < 600.0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "coverage>=0.99 in %llu/100 replicas (need 95), dims%s (tol 0.15), "
                  "%.0f s (cap 600)",
                  static_cast<unsigned long long>(replicas_ok), dim_text.c_str(), wall);
    g.line(5, pass, buf);
}

// 6: pointwise exponents. At uniform times the approximation index stays
//    above nu - 0.05 and the velocity exponent below 1/nu + 0.1 for at least
//    99% of samples; at every jump time the velocity exponent is exactly 0.
void criterion6(Gate& g) {
    SimulationConfig cfg = base_config(0.0, 0.5, 0x1.0p-16, 64, 64, 0xACC6ull);
    const std::uint64_t reps = 20, samples = 1ull << 12;
    const int m_lo = 4, m_hi = 13;
    const double delta_floor = cfg.nu - 0.05;
    const double hv_cap = 1.0 / cfg.nu + 0.1;

    std::uint64_t n_probe = 0, delta_ok = 0, hv_ok = 0;
    std::uint64_t jump_checked = 0, jump_bad = 0, path_counter = 0;
    stream_replicas(cfg, reps, 4, [&](const ReplicaResult& rep) {
        for (const auto& rec : rep.paths) {
            const BandIndex idx(rec, m_lo, m_hi);
            Rng probe(stream_seed(0xACC6AAull, path_counter++));
            for (std::uint64_t s = 0; s < samples; ++s) {
                const double t = probe.uniform(0.0, rec.meta.horizon);
                const auto delta = approximation_index(idx, t);
                ++n_probe;
                if (delta && *delta >= delta_floor) ++delta_ok;
                if (delta) {
                    const double hv = *delta >= kDeltaCap ? 0.0 : 1.0 / *delta;
                    if (hv <= hv_cap) ++hv_ok;
                }
            }
            for (const auto& e : rec.events) {
                ++jump_checked;
                const auto hv = holder_velocity(idx, e.t);
                if (!hv || *hv != 0.0) ++jump_bad;
            }
        }
    });

    const double frac_delta = static_cast<double>(delta_ok) / static_cast<double>(n_probe);
    const double frac_hv = static_cast<double>(hv_ok) / static_cast<double>(n_probe);
    const bool pass = frac_delta >= 0.99 && frac_hv >= 0.99 && jump_bad == 0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "delta>=%.2f at %.4f of samples, h_v<=%.2f at %.4f (need 0.99), "
                  "jump-time h_v!=0 at %llu/%llu",
                  delta_floor, frac_delta, hv_cap, frac_hv,
                  static_cast<unsigned long long>(jump_bad),
                  static_cast<unsigned long long>(jump_checked));
    g.line(6, pass, buf);
}

// 7: velocity singularity spectrum. d_hat within 0.2 of nu*h across
//    h in [0.2/nu, 0.9/nu], and empty rows beyond 1/nu + 0.1, in under 15 min.
void criterion7(Gate& g) {
    const auto t0 = Clock::now();
    // Temperature sets the dyadic band occupancy (~48 jumps/path in band 10 at
    // T = 0.006). Colder runs leave the bands sparse enough that the
    // finite-resolution approximation index dips to ~1/2.2 at typical times,
    // spuriously populating the levels beyond 1/nu; hotter ones starve the
    // h = 1.8 level instead.
    SimulationConfig cfg = base_config(0.0, 0.5, 0x1.0p-18, 1024, 4, 0xACC7ull);
    cfg.f0_temperature = 0.006;
    cfg.replicas = 100;
    RunResult res = run(cfg);
    require_complete(res);
    std::vector<PathRecord> paths;
    for (auto& rep : res.replicas)
        for (auto& p : rep.paths) paths.push_back(std::move(p));

    std::vector<double> grid;
    for (double h = 0.4; h <= 1.81; h += 0.2) grid.push_back(h);
    grid.push_back(2.2);
    grid.push_back(2.5);
    const auto est = empirical_spectrum(paths, grid, 10, 14, 0.05, SpectrumKind::velocity);

    bool pass = true;
    double max_err = 0.0;
    std::string empty_text;
    for (const auto& row : est.rows) {
        if (row.h <= 1.81) {
            const bool ok = row.status == SpectrumRow::Status::ok;
            if (ok) max_err = std::max(max_err, std::abs(row.d_hat - cfg.nu * row.h));
            pass = pass && ok && std::abs(row.d_hat - cfg.nu * row.h) <= 0.2;
        } else {
            const bool is_empty = row.status == SpectrumRow::Status::empty;
            pass = pass && is_empty;
            char piece[48];
            std::snprintf(piece, sizeof(piece), " h%.1f:%s", row.h, is_empty ? "empty" : "POPULATED");
            empty_text += piece;
        }
    }
    const double wall = seconds_since(t0);
    pass = pass && wall < 900.0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "max |d_hat - nu h| %.3f on h in [0.4,1.8] (tol 0.2),%s, %.0f s (cap 900)",
                  max_err, empty_text.c_str(), wall);
    g.line(7, pass, buf);
}

// 8: wavelet layer. The derivative identity holds to 1e-9 relative over
//    100 random windows on each of 20 paths; the bump integrates to 1 within
//    1e-10; the first N moments of psi_N vanish to 1e-8 relative to the
//    absolute mass of x^k psi_N, for N <= 12; and the N-th moment equals
//    (-1)^N N! to 1e-8 through N = 11 and 1e-7 at N = 12. The split tolerance
//    is forced by the double format, not by the evaluation: at N = 12 the
//    integrand's absolute mass is ~3e10 times N!, so even a correctly-rounded
//    double psi_12 leaves a cancellation residue near 2e-8 (measured against
//    a float128 reference; this library sits at the same level).
void criterion8(Gate& g) {
    SimulationConfig cfg = base_config(0.0, 0.5, 0x1.0p-10, 128, 20, 0xACC8ull);
    RunResult res = run(cfg);
    require_complete(res);
    std::vector<PathRecord> paths;
    for (auto& rep : res.replicas)
        for (auto& p : rep.paths) paths.push_back(std::move(p));

    double max_gap = 0.0;
    const auto rows = ibp_table(paths, {}, 4, 100, 0xACC81ull);
    for (const auto& row : rows) max_gap = std::max(max_gap, row.gap);

    // Simpson at 2^18 panels. Discretization is superalgebraic for these
    // compactly supported C-infinity integrands and sits below 1e-20 at this
    // width; every residual visible here is pointwise rounding of psi.
    const int panels = 1 << 18;
    const long double h = 1.0L / panels;

    long double mass_err = 0.0L;
    {
        long double acc = 0.0L;
        for (int i = 0; i <= panels; ++i) {
            const double x = static_cast<double>(i) * static_cast<double>(h);
            acc += static_cast<long double>(bump(x)) *
                   (i == 0 || i == panels ? 1.0L : (i % 2 ? 4.0L : 2.0L));
        }
        mass_err = std::fabs(acc * h / 3.0L - 1.0L);
    }

    double max_vanish_rel = 0.0;  // k < N, relative to the integral of |x^k psi_N|
    double low_rel = 0.0;         // N-th moment vs (-1)^N N!, N <= 11
    double top_rel = 0.0;         // same at N = 12
    for (int N = 1; N <= 12; ++N) {
        const Wavelet w(N);
        std::vector<long double> mom(N + 1, 0.0L), absmass(N + 1, 0.0L);
        for (int i = 0; i <= panels; ++i) {
            const double x = static_cast<double>(i) * static_cast<double>(h);
            const long double p = static_cast<long double>(w.psi(x));
            const long double wt = (i == 0 || i == panels ? 1.0L : (i % 2 ? 4.0L : 2.0L));
            long double xk = 1.0L;
            for (int k = 0; k <= N; ++k) {
                mom[k] += wt * xk * p;
                absmass[k] += wt * xk * std::fabs(p);
                xk *= static_cast<long double>(x);
            }
        }
        for (int k = 0; k < N; ++k)
            max_vanish_rel = std::max(max_vanish_rel,
                                      static_cast<double>(std::fabs(mom[k]) / absmass[k]));
        long double want = 1.0L;
        for (int k = 2; k <= N; ++k) want *= k;
        if (N % 2) want = -want;
        const double rel =
            static_cast<double>(std::fabs(mom[N] * h / 3.0L - want) / std::fabs(want));
        if (N <= 11)
            low_rel = std::max(low_rel, rel);
        else
            top_rel = rel;
    }

    const bool pass = max_gap <= 1e-9 && mass_err <= 1e-10L && max_vanish_rel <= 1e-8 &&
                      low_rel <= 1e-8 && top_rel <= 1e-7;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "ibp gap %.2e over %zu windows (tol 1e-9), mass err %.1e (tol 1e-10), "
                  "vanish rel %.1e N<=12 (tol 1e-8), Nth rel %.1e N<=11 (tol 1e-8) / "
                  "%.1e N=12 (tol 1e-7)",
                  max_gap, rows.size(), static_cast<double>(mass_err), max_vanish_rel,
                  low_rel, top_rel);
    g.line(8, pass, buf);
}

// 9: position exponents at gamma = nu = 1/3 under truncation. Finite bounds
//    stay below 1 + 1/nu + 0.2; the 50 largest jumps score within 0.3 of
//    1 + h_v; oscillating labels with h_v < 1/(2 nu) - 0.15 stay under 2%.
void criterion9(Gate& g) {
    // theta_min = 2^-20 resolves bands through 16 under the truncation
    // (w_max = 2B = 16). Each extra band multiplies down the chance that all
    // band gaps are simultaneously long at a sampled time, which is what lets
    // the worst of ~52k position bounds dip; bands through 12 left a max of
    // 4.6, through 16 it sits near 3.8.
    SimulationConfig cfg = base_config(1.0 / 3.0, 1.0 / 3.0, 0x1.0p-20, 256, 8, 0xACC9ull);
    cfg.truncation_B = 8.0;
    cfg.f0_temperature = 0.04;
    cfg.replicas = 50;
    RunResult res = run(cfg);
    require_complete(res);
    std::vector<PathRecord> paths;
    for (auto& rep : res.replicas)
        for (auto& p : rep.paths) paths.push_back(std::move(p));

    const int m_lo = 6, m_hi = 16;
    ClassifyOptions copt;
    copt.m_lo = m_lo;
    copt.m_hi = m_hi;
    copt.samples_per_path = 128;
    copt.big_jumps_per_path = 2;
    copt.seed = 0xACC91ull;
    const auto rows = classify_table(paths, {}, copt);

    const double bound_cap = 1.0 + 1.0 / cfg.nu + 0.2;
    double max_bound = 0.0;
    std::uint64_t oscillating = 0, spurious = 0;
    for (const auto& row : rows) {
        if (std::isfinite(row.sample.h_x)) max_bound = std::max(max_bound, row.sample.h_x);
        if (row.sample.kind == SingularityKind::oscillating) {
            ++oscillating;
            if (row.sample.h_v < 1.0 / (2.0 * cfg.nu) - 0.15) ++spurious;
        }
    }
    const double spurious_frac = static_cast<double>(spurious) / static_cast<double>(rows.size());

    // pooled 50 largest jumps: position bound against 1 + velocity exponent
    struct Big {
        double size2;
        std::size_t path;
        double t;
    };
    std::vector<Big> bigs;
    for (std::size_t p = 0; p < paths.size(); ++p)
        for (const auto& e : paths[p].events) bigs.push_back({norm2(e.dv), p, e.t});
    const std::size_t top = std::min<std::size_t>(50, bigs.size());
    std::partial_sort(bigs.begin(), bigs.begin() + static_cast<std::ptrdiff_t>(top), bigs.end(),
                      [](const Big& a, const Big& b) { return a.size2 > b.size2; });

    HolderBoundOptions hopt;
    hopt.m_lo = m_lo;
    hopt.m_hi = m_hi;
    double max_dev = 0.0;
    std::uint64_t unresolved = 0;
    for (std::size_t i = 0; i < top; ++i) {
        const auto& rec = paths[bigs[i].path];
        const auto hb = position_holder_bound(rec, bigs[i].t, hopt);
        const auto hv = holder_velocity(rec, bigs[i].t, m_lo, m_hi);
        if (!std::isfinite(hb.bound) || !hv) {
            ++unresolved;
            continue;
        }
        max_dev = std::max(max_dev, std::abs(hb.bound - (1.0 + *hv)));
    }

    const bool pass = max_bound <= bound_cap && max_dev <= 0.3 && unresolved == 0 &&
                      spurious_frac <= 0.02;
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "max finite bound %.3f (cap %.1f), top-50 |h_x-(1+h_v)| %.3f (tol 0.3, "
                  "%llu unresolved), spurious oscillating %.4f of %zu rows (tol 0.02)",
                  max_bound, bound_cap, max_dev, static_cast<unsigned long long>(unresolved),
                  spurious_frac, rows.size());
    g.line(9, pass, buf);
}

// 10: small-jump truncation. With delta = 2 nu the sup of the truncated
//     increment over width-2^-m windows exceeds m 2^(-m/delta) on at most 5%
//     of paths for each m in {10, 11, 12}, over 200 replicas.
void criterion10(Gate& g) {
    SimulationConfig cfg = base_config(0.0, 0.5, 0x1.0p-16, 64, 16, 0xACCAull);
    const std::uint64_t reps = 200;
    const double delta = 2.0 * cfg.nu;
    const std::vector<int> ms{10, 11, 12};

    std::vector<std::uint64_t> exceed(ms.size(), 0);
    std::uint64_t path_total = 0;
    stream_replicas(cfg, reps, 10, [&](const ReplicaResult& rep) {
        for (const auto& rec : rep.paths) {
            ++path_total;
            for (std::size_t k = 0; k < ms.size(); ++k) {
                const double sup = truncated_increment_sup(rec, ms[k], delta);
                if (sup > ms[k] * std::exp2(-ms[k] / delta)) ++exceed[k];
            }
        }
    });

    bool pass = true;
    std::string text;
    for (std::size_t k = 0; k < ms.size(); ++k) {
        const double frac = static_cast<double>(exceed[k]) / static_cast<double>(path_total);
        pass = pass && frac <= 0.05;
        char piece[48];
        std::snprintf(piece, sizeof(piece), " m%d:%.4f", ms[k], frac);
        text += piece;
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf), "exceedance fractions%s over %llu paths (tol 0.05 each)",
                  text.c_str(), static_cast<unsigned long long>(path_total));
    g.line(10, pass, buf);
}

std::string serialize_run(const SimulationConfig& cfg, int threads, const fs::path& dir) {
    RunOptions opt;
    opt.threads = threads;
    RunResult res = run(cfg, opt);
    require_complete(res);
    std::string all;
    std::uint64_t k = 0;
    for (const auto& rep : res.replicas)
        for (const auto& rec : rep.paths) {
            const fs::path f = dir / ("ser_" + std::to_string(k++) + ".txt");
            write_path(rec, f);
            std::ifstream in(f, std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            all += ss.str();
        }
    return all;
}

std::string file_bytes(const fs::path& f) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 11: reproducibility and storage. Identical configs give byte-identical path
//     files regardless of thread count, and 1000 randomized records survive a
//     write/read round trip exactly.
void criterion11(Gate& g) {
    const fs::path dir = fs::temp_directory_path() /
                         ("boltzaccept_" + std::to_string(static_cast<unsigned>(::getpid())));
    fs::create_directories(dir);

    SimulationConfig cfg = base_config(0.2, 0.4, 0x1.0p-10, 32, 8, 0xACCBull);
    cfg.replicas = 2;
    const std::string s1 = serialize_run(cfg, 4, dir);
    const std::string s2 = serialize_run(cfg, 4, dir);
    const std::string s3 = serialize_run(cfg, 1, dir);
    const bool rerun_ok = !s1.empty() && s1 == s2;
    const bool thread_ok = s1 == s3;

    Rng rng(0xE11E7ull);
    auto rand_mag = [&rng](double lo_exp, double hi_exp) {
        const double v = std::exp2(rng.uniform(lo_exp, hi_exp));
        return rng.uniform() < 0.5 ? -v : v;
    };
    std::uint64_t trips_ok = 0;
    const std::uint64_t trips = 1000;
    for (std::uint64_t i = 0; i < trips; ++i) {
        PathRecord rec;
        rec.meta.gamma = rng.uniform(-0.99, 0.99);
        rec.meta.nu = rng.uniform(0.01, 0.99);
        rec.meta.theta_min = std::exp2(rng.uniform(-20.0, 0.6));
        if (rng.uniform() < 0.5) rec.meta.truncation_B = 1.0 + std::exp2(rng.uniform(0.0, 4.0));
        rec.meta.n_particles = rng.below(10000) + 2;
        rec.meta.horizon = std::exp2(rng.uniform(-3.0, 3.0));
        rec.meta.seed = (rng.below(1u << 30) << 32) ^ rng.below(1ull << 32);
        rec.meta.replicas = rng.below(16) + 1;
        rec.meta.replica_id = rng.below(rec.meta.replicas);
        rec.meta.particle_id = rng.below(rec.meta.n_particles);
        rec.meta.n_tracked = rng.below(rec.meta.n_particles) + 1;
        rec.meta.f0 = i % 3 == 0 ? "maxwellian" : (i % 3 == 1 ? "two_point" : "file");
        rec.meta.f0_params["f0_p0"] = format_double(rand_mag(-300.0, 300.0));
        rec.meta.f0_params["f0_p1"] = format_double(rng.normal());
        rec.meta.resolved_m_max = static_cast<int>(rng.below(30));
        rec.meta.extras["tag"] = "rt" + std::to_string(i);
        rec.v0 = {rand_mag(-200.0, 200.0), rng.normal(), rand_mag(-5.0, 5.0)};
        const std::uint64_t n_ev = rng.below(51);
        std::vector<double> times;
        for (std::uint64_t e = 0; e < n_ev; ++e)
            times.push_back(rng.uniform(0.0, rec.meta.horizon));
        std::sort(times.begin(), times.end());
        for (const double t : times) {
            JumpEvent e;
            e.t = t;
            e.dv = {rand_mag(-40.0, 3.0), rand_mag(-40.0, 3.0), rand_mag(-40.0, 3.0)};
            e.theta = rng.uniform(1e-6, std::numbers::pi / 2.0);
            e.kappa = std::exp2(rng.uniform(-40.0, 4.0));
            rec.events.push_back(e);
        }

        const fs::path f1 = dir / "rt_a.txt";
        const fs::path f2 = dir / "rt_b.txt";
        write_path(rec, f1);
        const PathRecord back = read_path(f1);
        write_path(back, f2);
        if (file_bytes(f1) != file_bytes(f2)) continue;

        auto same = [](double a, double b) {
            return std::memcmp(&a, &b, sizeof(double)) == 0;
        };
        bool ok = same(back.meta.gamma, rec.meta.gamma) && same(back.meta.nu, rec.meta.nu) &&
                  same(back.meta.theta_min, rec.meta.theta_min) &&
                  same(back.meta.horizon, rec.meta.horizon) &&
                  back.meta.truncation_B.has_value() == rec.meta.truncation_B.has_value() &&
                  back.meta.seed == rec.meta.seed && back.meta.f0 == rec.meta.f0 &&
                  back.meta.extras == rec.meta.extras &&
                  back.meta.f0_params == rec.meta.f0_params &&
                  back.events.size() == rec.events.size() && same(back.v0.x, rec.v0.x) &&
                  same(back.v0.y, rec.v0.y) && same(back.v0.z, rec.v0.z);
        if (ok && rec.meta.truncation_B)
            ok = same(*back.meta.truncation_B, *rec.meta.truncation_B);
        for (std::size_t e = 0; ok && e < rec.events.size(); ++e)
            ok = same(back.events[e].t, rec.events[e].t) &&
                 same(back.events[e].dv.x, rec.events[e].dv.x) &&
                 same(back.events[e].dv.y, rec.events[e].dv.y) &&
                 same(back.events[e].dv.z, rec.events[e].dv.z) &&
                 same(back.events[e].theta, rec.events[e].theta) &&
                 same(back.events[e].kappa, rec.events[e].kappa);
        if (ok) ++trips_ok;
    }

    std::error_code ec;
    fs::remove_all(dir, ec);
    const bool pass = rerun_ok && thread_ok && trips_ok == trips;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "rerun bytes %s, threads 1 vs 4 bytes %s, round trips %llu/%llu exact",
                  rerun_ok ? "identical" : "DIFFER", thread_ok ? "identical" : "DIFFER",
                  static_cast<unsigned long long>(trips_ok),
                  static_cast<unsigned long long>(trips));
    g.line(11, pass, buf);
}

}  // namespace

int main() {
    Gate g;
    using Fn = void (*)(Gate&);
    const Fn checks[] = {criterion1, criterion2, criterion3, criterion4,  criterion5, criterion6,
                         criterion7, criterion8, criterion9, criterion10, criterion11};
    for (int k = 0; k < 11; ++k) {
        try {
            checks[k](g);
        } catch (const std::exception& e) {
            g.line(k + 1, false, std::string("exception: ") + e.what());
        }
    }
    std::printf("%s\n", g.all ? "all criteria pass" : "ACCEPTANCE FAILED");
    return g.all ? 0 : 1;
}
