#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "boltzfrac/config.hpp"
#include "boltzfrac/cross_section.hpp"
#include "boltzfrac/path_record.hpp"
#include "boltzfrac/simulator.hpp"

using namespace boltzfrac;

namespace {

SimulationConfig base_config() {
    SimulationConfig cfg;
    cfg.gamma = 0.0;
    cfg.nu = 0.5;
    cfg.theta_min = 0.05;
    cfg.n_particles = 64;
    cfg.horizon = 1.0;
    cfg.seed = 2718;
    cfg.replicas = 1;
    cfg.n_tracked = 1;
    return cfg;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& text) {
        path = std::string("/tmp/boltzfrac_test_") + std::to_string(::getpid()) + "_" +
               std::to_string(counter()++) + ".txt";
        std::ofstream out(path);
        out << text;
    }
    ~TempFile() { std::remove(path.c_str()); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

bool paths_identical(const PathRecord& a, const PathRecord& b) {
    if (!(a.v0 == b.v0) || a.events.size() != b.events.size()) return false;
    for (std::size_t k = 0; k < a.events.size(); ++k) {
        const auto& x = a.events[k];
        const auto& y = b.events[k];
        if (x.t != y.t || !(x.dv == y.dv) || x.theta != y.theta || x.kappa != y.kappa) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("radial truncation clips speed and fixes direction") {
    CHECK(truncate_velocity({0.0, 0.0, 0.0}, 2.0) == Vec3{0.0, 0.0, 0.0});
    CHECK(truncate_velocity({1.0, 1.0, 0.0}, 2.0) == Vec3{1.0, 1.0, 0.0});
    const Vec3 w = truncate_velocity({3.0, 4.0, 0.0}, 2.0);  // speed 5 -> 2
    CHECK(std::abs(norm(w) - 2.0) < 1e-15);
    CHECK(std::abs(w.x * 4.0 - w.y * 3.0) < 1e-15);  // collinear with input
    CHECK(w.x > 0.0);
}

TEST_CASE("initial sampling matches the configured law") {
    SimulationConfig cfg = base_config();
    cfg.n_particles = 200'000;
    cfg.f0_mean = {1.0, -2.0, 0.5};
    cfg.f0_temperature = 0.25;
    Rng rng(11);
    const auto vs = sample_initial(cfg, rng);
    REQUIRE(vs.size() == cfg.n_particles);
    Vec3 mean{0, 0, 0};
    double var = 0.0;
    for (const auto& v : vs) mean += v;
    mean = mean / static_cast<double>(vs.size());
    for (const auto& v : vs) var += norm2(v - mean);
    var /= 3.0 * static_cast<double>(vs.size());
    CHECK(std::abs(mean.x - 1.0) < 5e-3);
    CHECK(std::abs(mean.y + 2.0) < 5e-3);
    CHECK(std::abs(mean.z - 0.5) < 5e-3);
    CHECK(std::abs(var - 0.25) < 5e-3);

    cfg.f0 = SimulationConfig::F0Kind::two_point;
    cfg.f0_v1 = {2.0, 0.0, 0.0};
    cfg.f0_v2 = {0.0, -1.0, 0.0};
    cfg.f0_p = 0.25;
    const auto ts = sample_initial(cfg, rng);
    std::size_t at_v1 = 0;
    for (const auto& v : ts) {
        const bool is1 = v == cfg.f0_v1, is2 = v == cfg.f0_v2;
        CHECK((is1 || is2));
        at_v1 += is1;
    }
    CHECK(std::abs(static_cast<double>(at_v1) / ts.size() - 0.25) < 5e-3);
}

TEST_CASE("velocity files: sampling, blank rows, and rejection of bad input") {
    TempFile good("1 0 0\n\n-1 0.5 2\n0 0 3\n");
    SimulationConfig cfg = base_config();
    cfg.f0 = SimulationConfig::F0Kind::file;
    cfg.f0_file = good.path;
    Rng rng(3);
    const auto vs = sample_initial(cfg, rng);
    const std::vector<Vec3> rows = {{1, 0, 0}, {-1, 0.5, 2}, {0, 0, 3}};
    bool all_rows = true, saw_two = false;
    for (const auto& v : vs) {
        bool hit = false;
        for (const auto& r : rows) hit = hit || v == r;
        all_rows = all_rows && hit;
        saw_two = saw_two || !(v == vs.front());
    }
    CHECK(all_rows);
    CHECK(saw_two);

    TempFile bad("1 0 0\n2 nope 0\n");
    cfg.f0_file = bad.path;
    CHECK_THROWS_AS(sample_initial(cfg, rng), ConfigError);

    TempFile empty("\n\n");
    cfg.f0_file = empty.path;
    CHECK_THROWS_AS(sample_initial(cfg, rng), ConfigError);

    TempFile dirac("1 2 3\n1 2 3\n");
    cfg.f0_file = dirac.path;
    CHECK_THROWS_AS(sample_initial(cfg, rng), ConfigError);

    cfg.f0_file = "/nonexistent/vel.txt";
    CHECK_THROWS_AS(sample_initial(cfg, rng), ConfigError);
}

TEST_CASE("per-particle collision count matches the thinning-free rate") {
    // With gamma = 0 every proposal is accepted, so each particle's event
    // count is Poisson with mean 2*pi*tail_mass(theta_min) per unit time.
    SimulationConfig cfg = base_config();
    cfg.replicas = 40;
    cfg.n_tracked = 8;
    RunOptions opt;
    const auto res = run(cfg, opt);
    require_complete(res);

    const CrossSection cs(cfg.gamma, cfg.nu, cfg.theta_min);
    const double lam = 2.0 * std::numbers::pi * cs.tail_mass(cfg.theta_min);

    double total = 0.0;
    std::size_t n_paths = 0;
    for (const auto& rep : res.replicas) {
        CHECK(rep.stats.accepted == rep.stats.proposals);  // no thinning at gamma = 0
        CHECK(rep.stats.majorant_rate == doctest::Approx(lam).epsilon(1e-12));
        for (const auto& p : rep.paths) {
            total += static_cast<double>(p.events.size());
            ++n_paths;
        }
    }
    const double mean = total / static_cast<double>(n_paths);
    const double three_sigma = 3.0 * std::sqrt(lam / static_cast<double>(n_paths));
    CHECK(std::abs(mean - lam) < three_sigma + 0.05);
}

TEST_CASE("ensemble momentum and energy are conserved without truncation") {
    SimulationConfig cfg = base_config();
    cfg.gamma = 0.3;
    cfg.nu = 0.4;
    cfg.n_particles = 128;
    cfg.theta_min = 0.02;
    cfg.seed = 99;
    const auto res = run(cfg);
    require_complete(res);
    const auto& st = res.replicas[0].stats;
    CHECK(st.accepted > 100);
    CHECK(st.accepted <= st.proposals);
    CHECK(st.floor_bound == 0);
    CHECK(st.truncation_hits == 0);
    const Vec3 dp = st.momentum_final - st.momentum_initial;
    CHECK(std::abs(dp.x) < 1e-12);
    CHECK(std::abs(dp.y) < 1e-12);
    CHECK(std::abs(dp.z) < 1e-12);
    CHECK(std::abs(st.m2_final - st.m2_initial) < 1e-10 * std::max(1.0, st.m2_initial));
}

TEST_CASE("event records satisfy the kinematic invariants") {
    SimulationConfig cfg = base_config();
    cfg.truncation_B = 2.0;
    cfg.n_tracked = 8;
    cfg.seed = 5;
    const auto res = run(cfg);
    require_complete(res);
    const double pi = std::numbers::pi;
    for (const auto& p : res.replicas[0].paths) {
        double prev = 0.0;
        for (const auto& e : p.events) {
            CHECK(e.t > prev);           // strictly increasing times
            CHECK(e.t <= cfg.horizon);
            prev = e.t;
            CHECK(e.theta >= cfg.theta_min);
            CHECK(e.theta <= pi / 2.0);
            const double j = norm(e.dv);
            CHECK(j > 0.0);              // zero-size jumps are never recorded
            CHECK(j <= e.kappa * (1.0 + 1e-12));
            CHECK(j >= e.kappa / 4.0);
            CHECK(e.kappa <= pi / 2.0 * 4.0 * (1.0 + 1e-12));  // theta * d <= (pi/2)(2B)
        }
        CHECK(p.meta.truncation_B.has_value());
        CHECK(p.meta.n_particles == cfg.n_particles);
        CHECK(p.meta.resolved_m_max == cfg.resolved_m_max());
    }
}

TEST_CASE("an empty kernel support produces no events") {
    SimulationConfig cfg = base_config();
    cfg.theta_min = 3.0;  // at/beyond pi/2: zero tail mass
    const auto res = run(cfg);
    const auto& st = res.replicas[0].stats;
    CHECK(st.proposals == 0);
    CHECK(st.accepted == 0);
    CHECK(res.replicas[0].paths[0].events.empty());
    CHECK(st.m2_final == st.m2_initial);
}

TEST_CASE("negative gamma engages the soft speed floor") {
    SimulationConfig cfg = base_config();
    cfg.gamma = -0.3;
    cfg.nu = 0.5;
    cfg.f0 = SimulationConfig::F0Kind::two_point;
    cfg.f0_v1 = {1e-4, 0.0, 0.0};
    cfg.f0_v2 = {-1e-4, 0.0, 0.0};
    cfg.horizon = 0.05;
    const auto res = run(cfg);
    require_complete(res);
    CHECK(res.replicas[0].stats.floor_bound > 0);
    CHECK(res.replicas[0].stats.accepted > 0);
}

TEST_CASE("runs are bit-reproducible and thread-schedule independent") {
    SimulationConfig cfg = base_config();
    cfg.replicas = 6;
    cfg.n_tracked = 4;
    cfg.seed = 77;
    RunOptions serial;
    serial.threads = 1;
    RunOptions parallel;
    parallel.threads = 4;
    const auto a = run(cfg, serial);
    const auto b = run(cfg, parallel);
    const auto c = run(cfg, serial);
    REQUIRE(a.replicas.size() == b.replicas.size());
    for (std::size_t r = 0; r < a.replicas.size(); ++r) {
        CHECK(a.replicas[r].stats.proposals == b.replicas[r].stats.proposals);
        for (std::size_t k = 0; k < a.replicas[r].paths.size(); ++k) {
            CHECK(paths_identical(a.replicas[r].paths[k], b.replicas[r].paths[k]));
            CHECK(paths_identical(a.replicas[r].paths[k], c.replicas[r].paths[k]));
        }
    }

    // Replicas are genuinely distinct realizations.
    CHECK(!paths_identical(a.replicas[0].paths[0], a.replicas[1].paths[0]));
}

TEST_CASE("event-buffer overflow is reported and leaves valid partial paths") {
    SimulationConfig cfg = base_config();
    cfg.n_particles = 16;
    cfg.n_tracked = 16;
    cfg.max_events_per_path = 3;
    const auto res = run(cfg);
    CHECK(res.overflowed);
    CHECK_THROWS_AS(require_complete(res), ResourceError);
    for (const auto& p : res.replicas[0].paths) {
        CHECK(p.events.size() <= cfg.max_events_per_path + 1);
        double prev = 0.0;
        for (const auto& e : p.events) {
            CHECK(e.t > prev);
            prev = e.t;
        }
    }
}

TEST_CASE("support probe: hand values, vacuous grid, empty ensemble") {
    const std::vector<Vec3> snap = {{0, 0, 0}, {3, 0, 0}};
    CHECK_THROWS_AS(support_probe({}, 1.0, 2.0, snap), std::domain_error);
    CHECK(support_probe(snap, 1.0, 2.0, {}) == 1.0);

    // w = origin: the origin fails the distance test, (3,0,0) the speed cap.
    // w = (5,0,0): only the origin qualifies.
    CHECK(support_probe(snap, 1.0, 2.0, {{0, 0, 0}}) == 0.0);
    CHECK(support_probe(snap, 1.0, 2.0, {{5, 0, 0}}) == 0.5);
    CHECK(support_probe(snap, 1.0, 2.0, {{0, 0, 0}, {5, 0, 0}}) == 0.0);

    // a = 0 with an infinite cap accepts everything.
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(support_probe(snap, 0.0, inf, {{0, 0, 0}, {9, 9, 9}}) == 1.0);
}

TEST_CASE("ensemble snapshots spread mass away from concentration points") {
    SimulationConfig cfg = base_config();
    cfg.n_particles = 512;
    RunOptions opt;
    opt.store_ensembles = true;
    const auto res = run(cfg, opt);
    const auto& fin = res.replicas[0].final_ensemble;
    REQUIRE(fin.size() == cfg.n_particles);
    std::vector<Vec3> grid;
    for (double x : {-1.0, 0.0, 1.0}) grid.push_back({x, 0.0, 0.0});
    CHECK(support_probe(fin, 0.25, 6.0, grid) > 0.5);
}

TEST_CASE("THREADS environment variable caps the worker count") {
    ::unsetenv("THREADS");
    CHECK(effective_threads(3) == 3);
    CHECK(effective_threads(1) == 1);
    ::setenv("THREADS", "2", 1);
    CHECK(effective_threads(8) == 2);
    CHECK(effective_threads(1) == 1);
    ::setenv("THREADS", "junk", 1);
    CHECK(effective_threads(5) == 5);  // unparsable cap is ignored
    ::unsetenv("THREADS");
}

TEST_CASE("path reconstruction is cadlag and integrates exactly") {
    PathRecord rec;
    rec.meta.horizon = 1.0;
    rec.v0 = {1.0, 0.0, 0.0};
    rec.events.push_back({0.5, {-1.0, 1.0, 0.0}, 0.3, 0.1});

    CHECK(reconstruct(rec, 0.0) == Vec3{1.0, 0.0, 0.0});
    CHECK(reconstruct(rec, 0.49) == Vec3{1.0, 0.0, 0.0});
    CHECK(reconstruct(rec, 0.5) == Vec3{0.0, 1.0, 0.0});  // jump included at its own time
    CHECK(reconstruct(rec, 1.0) == Vec3{0.0, 1.0, 0.0});
    CHECK_THROWS_AS(reconstruct(rec, -0.1), std::domain_error);
    CHECK_THROWS_AS(reconstruct(rec, 1.1), std::domain_error);

    const auto vel = build_velocity_path(rec);
    CHECK(vel.at(0.25) == Vec3{1.0, 0.0, 0.0});
    CHECK(vel.at(0.5) == Vec3{0.0, 1.0, 0.0});
    CHECK(vel.at(0.75) == Vec3{0.0, 1.0, 0.0});

    const auto pos = build_position_path(rec);
    CHECK(pos.at(0.0) == Vec3{0.0, 0.0, 0.0});
    const Vec3 x1 = pos.at(1.0);  // 0.5*(1,0,0) + 0.5*(0,1,0)
    CHECK(std::abs(x1.x - 0.5) < 1e-15);
    CHECK(std::abs(x1.y - 0.5) < 1e-15);
    CHECK(x1.z == 0.0);
    const Vec3 quarter = pos.at(0.25);
    CHECK(std::abs(quarter.x - 0.25) < 1e-15);
    CHECK(quarter.y == 0.0);
}

TEST_CASE("velocity and position paths agree with event-sum reconstruction") {
    SimulationConfig cfg = base_config();
    cfg.n_tracked = 2;
    cfg.seed = 31;
    const auto res = run(cfg);
    require_complete(res);
    for (const auto& rec : res.replicas[0].paths) {
        const auto vel = build_velocity_path(rec);
        const auto pos = build_position_path(rec);
        REQUIRE(vel.values.size() == vel.times.size() + 1);
        REQUIRE(pos.anchors.size() == pos.times.size());
        for (int i = 0; i <= 50; ++i) {
            const double t = cfg.horizon * i / 50.0;
            CHECK(norm(vel.at(t) - reconstruct(rec, t)) == 0.0);
        }
        // X is continuous across event times and its increments average V.
        for (std::size_t k = 0; k < pos.times.size(); ++k) {
            const double t = pos.times[k];
            const double eps = 1e-12;
            if (t < eps || t + eps > cfg.horizon) continue;
            CHECK(norm(pos.at(t + eps) - pos.at(t - eps)) < 1e-9);
        }
        const Vec3 mid = pos.at(cfg.horizon) - pos.at(0.0);
        Vec3 riemann{0, 0, 0};
        const int steps = 20000;
        for (int i = 0; i < steps; ++i)
            riemann += vel.at((i + 0.5) * cfg.horizon / steps) * (cfg.horizon / steps);
        CHECK(norm(mid - riemann) < 5e-3);
    }
}
