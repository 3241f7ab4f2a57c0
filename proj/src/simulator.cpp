#include "boltzfrac/simulator.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include "boltzfrac/collision.hpp"
#include "boltzfrac/cross_section.hpp"
#include "boltzfrac/num_io.hpp"

namespace boltzfrac {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kHalfPi = std::numbers::pi / 2.0;

std::vector<Vec3> load_f0_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: key 'f0_file': cannot open '" + path + "'");
    std::vector<Vec3> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string a, b, c;
        if (!(ss >> a)) continue;  // blank line
        double x, y, z;
        if (!(ss >> b >> c) || !parse_double(a, x) || !parse_double(b, y) || !parse_double(c, z))
            throw ConfigError("config: key 'f0_file': malformed row at line " + std::to_string(lineno));
        rows.push_back({x, y, z});
    }
    if (rows.empty()) throw ConfigError("config: key 'f0_file': no velocities in '" + path + "'");
    bool all_equal = true;
    for (const auto& v : rows) all_equal = all_equal && (v == rows.front());
    if (all_equal)
        throw ConfigError("config: key 'f0_file': all rows identical (a point mass is not admissible)");
    return rows;
}

PathMeta make_meta(const SimulationConfig& cfg, std::uint64_t replica_id, std::uint64_t particle_id) {
    PathMeta m;
    m.gamma = cfg.gamma;
    m.nu = cfg.nu;
    m.theta_min = cfg.theta_min;
    m.truncation_B = cfg.truncation_B;
    m.n_particles = cfg.n_particles;
    m.horizon = cfg.horizon;
    m.seed = cfg.seed;
    m.replicas = cfg.replicas;
    m.replica_id = replica_id;
    m.particle_id = particle_id;
    m.n_tracked = cfg.n_tracked;
    m.resolved_m_max = cfg.resolved_m_max();
    switch (cfg.f0) {
        case SimulationConfig::F0Kind::maxwellian:
            m.f0 = "maxwellian";
            m.f0_params["f0_mean"] = format_double(cfg.f0_mean.x) + " " + format_double(cfg.f0_mean.y) +
                                     " " + format_double(cfg.f0_mean.z);
            m.f0_params["f0_temperature"] = format_double(cfg.f0_temperature);
            break;
        case SimulationConfig::F0Kind::two_point:
            m.f0 = "two_point";
            m.f0_params["f0_v1"] = format_double(cfg.f0_v1.x) + " " + format_double(cfg.f0_v1.y) + " " +
                                   format_double(cfg.f0_v1.z);
            m.f0_params["f0_v2"] = format_double(cfg.f0_v2.x) + " " + format_double(cfg.f0_v2.y) + " " +
                                   format_double(cfg.f0_v2.z);
            m.f0_params["f0_p"] = format_double(cfg.f0_p);
            break;
        case SimulationConfig::F0Kind::file:
            m.f0 = "file";
            m.f0_params["f0_file"] = cfg.f0_file;
            break;
    }
    return m;
}

struct EnsembleMoments {
    double m2;
    Vec3 momentum;
};

EnsembleMoments moments(const std::vector<Vec3>& vs) {
    double m2 = 0.0;
    Vec3 p{0.0, 0.0, 0.0};
    for (const auto& v : vs) {
        m2 += norm2(v);
        p += v;
    }
    const double n = static_cast<double>(vs.size());
    return {m2 / n, p / n};
}

ReplicaResult run_replica(const SimulationConfig& cfg, std::uint64_t replica_id,
                          const std::vector<Vec3>* f0_rows, bool store_ensembles) {
    ReplicaResult res;
    res.replica_id = replica_id;
    Rng rng(stream_seed(cfg.seed, replica_id));

    std::vector<Vec3> vel;
    if (cfg.f0 == SimulationConfig::F0Kind::file) {
        vel.reserve(cfg.n_particles);
        for (std::uint64_t i = 0; i < cfg.n_particles; ++i)
            vel.push_back((*f0_rows)[rng.below(f0_rows->size())]);
    } else {
        vel = sample_initial(cfg, rng);
    }
    if (store_ensembles) res.initial_ensemble = vel;

    const auto m0 = moments(vel);
    res.stats.m2_initial = m0.m2;
    res.stats.momentum_initial = m0.momentum;

    const std::uint64_t n = cfg.n_particles;
    res.paths.resize(cfg.n_tracked);
    for (std::uint64_t k = 0; k < cfg.n_tracked; ++k) {
        res.paths[k].meta = make_meta(cfg, replica_id, k);
        res.paths[k].v0 = vel[k];
    }

    const double theta_eff = std::min(cfg.theta_min, kHalfPi);
    const CrossSection cs(cfg.gamma, cfg.nu, theta_eff);

    // Pair-speed cap backing the majorant: 2B under truncation; otherwise
    // 2*sqrt(total energy), which dominates |v_i - v_j| and is invariant.
    double total_energy = 0.0;
    for (const auto& v : vel) total_energy += norm2(v);
    const double rel_cap =
        cfg.truncation_B ? 2.0 * *cfg.truncation_B : 2.0 * std::sqrt(total_energy) + 1e-12;
    const double lambda = majorant_collision_rate(cs, rel_cap);
    res.stats.majorant_rate = lambda;
    const double rate_total = static_cast<double>(n) * lambda / 2.0;

    double t = 0.0;
    const double B = cfg.truncation_B ? *cfg.truncation_B : 0.0;
    while (rate_total > 0.0) {
        double t_next = t + rng.exponential(rate_total);
        if (t_next <= t) t_next = std::nextafter(t, cfg.horizon + 1.0);  // keep times strictly increasing
        t = t_next;
        if (t > cfg.horizon) break;
        ++res.stats.proposals;

        std::uint64_t i = rng.below(n);
        std::uint64_t j = rng.below(n - 1);
        if (j >= i) ++j;

        const double theta = cs.sample_theta(rng.uniform());
        const double phi = rng.uniform(0.0, kTwoPi);

        const Vec3 wi = cfg.truncation_B ? truncate_velocity(vel[i], B) : vel[i];
        const Vec3 wj = cfg.truncation_B ? truncate_velocity(vel[j], B) : vel[j];
        const double d = norm(wi - wj);

        if (cfg.gamma > 0.0) {
            const double p = std::pow(d / rel_cap, cfg.gamma);
            if (rng.uniform() >= p) continue;
        } else if (cfg.gamma < 0.0) {
            if (d < kSoftSpeedFloor) {
                ++res.stats.floor_bound;  // acceptance clamped to one
            } else {
                const double p = std::pow(d / kSoftSpeedFloor, cfg.gamma);
                if (rng.uniform() >= p) continue;
            }
        }

        if (d == 0.0) continue;  // coincident pair: zero deviation, not a jump
        const Vec3 a = collision_deviation(wi, wj, {theta, phi});
        vel[i] += a;
        vel[j] -= a;
        ++res.stats.accepted;
        if (cfg.truncation_B && (norm2(vel[i] - a) > B * B || norm2(vel[j] + a) > B * B))
            ++res.stats.truncation_hits;

        const double kappa = theta * d;
        if (i < cfg.n_tracked || j < cfg.n_tracked) {
            if (i < cfg.n_tracked) res.paths[i].events.push_back({t, a, theta, kappa});
            if (j < cfg.n_tracked) res.paths[j].events.push_back({t, -a, theta, kappa});
            for (std::uint64_t k : {i, j})
                if (k < cfg.n_tracked && res.paths[k].events.size() > cfg.max_events_per_path) {
                    res.stats.overflowed = true;
                    break;
                }
            if (res.stats.overflowed) break;
        }
    }

    const auto m1 = moments(vel);
    res.stats.m2_final = m1.m2;
    res.stats.momentum_final = m1.momentum;
    if (store_ensembles) res.final_ensemble = std::move(vel);
    return res;
}

}  // namespace

Vec3 truncate_velocity(Vec3 v, double B) {
    const double n = norm(v);
    if (n <= B) return v;
    return (B / n) * v;
}

std::vector<Vec3> sample_initial(const SimulationConfig& cfg, Rng& rng) {
    std::vector<Vec3> vel;
    vel.reserve(cfg.n_particles);
    switch (cfg.f0) {
        case SimulationConfig::F0Kind::maxwellian: {
            const double sd = std::sqrt(cfg.f0_temperature);
            for (std::uint64_t i = 0; i < cfg.n_particles; ++i)
                vel.push_back(cfg.f0_mean + sd * rng.normal3());
            break;
        }
        case SimulationConfig::F0Kind::two_point:
            for (std::uint64_t i = 0; i < cfg.n_particles; ++i)
                vel.push_back(rng.uniform() < cfg.f0_p ? cfg.f0_v1 : cfg.f0_v2);
            break;
        case SimulationConfig::F0Kind::file: {
            const auto rows = load_f0_file(cfg.f0_file);
            for (std::uint64_t i = 0; i < cfg.n_particles; ++i)
                vel.push_back(rows[rng.below(rows.size())]);
            break;
        }
    }
    return vel;
}

int effective_threads(int requested) {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    int t = requested > 0 ? requested : hw;
    if (const char* env = std::getenv("THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) t = std::min(t, cap);
    }
    return std::max(1, t);
}

RunResult run(const SimulationConfig& cfg, const RunOptions& opt) {
    cfg.validate();
    RunResult result;
    result.replicas.resize(cfg.replicas);

    // f0=file rows are loaded once and shared; replica streams stay independent.
    std::vector<Vec3> f0_rows;
    if (cfg.f0 == SimulationConfig::F0Kind::file) f0_rows = load_f0_file(cfg.f0_file);

    const int threads = std::min<std::uint64_t>(effective_threads(opt.threads), cfg.replicas);
    std::atomic<std::uint64_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::uint64_t r = next.fetch_add(1);
            if (r >= cfg.replicas) break;
            result.replicas[r] = run_replica(cfg, r, &f0_rows, opt.store_ensembles);
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (const auto& rep : result.replicas) result.overflowed |= rep.stats.overflowed;
    return result;
}

void require_complete(const RunResult& result) {
    if (result.overflowed)
        throw ResourceError("simulator: event buffer cap exceeded; recorded paths are partial");
}

double support_probe(const std::vector<Vec3>& snapshot, double a, double c,
                     const std::vector<Vec3>& w_grid) {
    if (snapshot.empty()) throw std::domain_error("support_probe: empty ensemble");
    if (w_grid.empty()) return 1.0;
    double worst = 1.0;
    for (const auto& w : w_grid) {
        std::size_t hits = 0;
        for (const auto& v : snapshot)
            if (norm2(v - w) >= a * a && norm2(v) <= c * c) ++hits;
        worst = std::min(worst, static_cast<double>(hits) / static_cast<double>(snapshot.size()));
    }
    return worst;
}

}  // namespace boltzfrac
