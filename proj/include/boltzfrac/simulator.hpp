#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "boltzfrac/config.hpp"
#include "boltzfrac/path_record.hpp"
#include "boltzfrac/rng.hpp"
#include "boltzfrac/vec3.hpp"

namespace boltzfrac {

struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// H_B: radial truncation at speed B; H_B(0) = 0.
Vec3 truncate_velocity(Vec3 v, double B);

// Draw n_particles velocities from the configured initial law. For f0=file the
// rows are drawn with replacement from the file's velocities.
std::vector<Vec3> sample_initial(const SimulationConfig& cfg, Rng& rng);

struct EnsembleStats {
    double m2_initial = 0.0;     // mean |v|^2 over the ensemble
    double m2_final = 0.0;
    Vec3 momentum_initial;       // mean v
    Vec3 momentum_final;
    std::uint64_t proposals = 0;
    std::uint64_t accepted = 0;
    std::uint64_t floor_bound = 0;      // gamma < 0 proposals below the speed floor
    std::uint64_t truncation_hits = 0;  // accepted collisions with a clipped participant
    double majorant_rate = 0.0;         // per-particle thinning majorant
    bool overflowed = false;            // event buffer cap hit; paths are partial
};

struct ReplicaResult {
    std::uint64_t replica_id = 0;
    std::vector<PathRecord> paths;  // one per tracked particle
    EnsembleStats stats;
    std::vector<Vec3> initial_ensemble;  // populated when RunOptions::store_ensembles
    std::vector<Vec3> final_ensemble;
};

struct RunResult {
    std::vector<ReplicaResult> replicas;
    bool overflowed = false;
};

struct RunOptions {
    bool store_ensembles = false;
    int threads = 0;  // 0: hardware concurrency, capped by the THREADS env var
};

// Mean-field N-particle realization of the velocity jump process. A global
// exponential clock rings at rate N * Lambda / 2 with Lambda the per-particle
// majorant; each ring proposes a uniform unordered pair, draws (theta, phi)
// from the cutoff kernel, and accepts with probability
// (|H_B(v_i) - H_B(v_j)| / cap)^gamma. On acceptance the deviation a is
// computed from the truncated pair and applied symmetrically (v_i += a,
// v_j -= a), so ensemble momentum is conserved exactly and energy exactly
// whenever the truncation does not clip. Replicas use independent streams
// derived from (seed, replica_id) and results are bit-reproducible for a
// fixed config regardless of thread schedule.
RunResult run(const SimulationConfig& cfg, const RunOptions& opt = {});

// Throws ResourceError if any replica hit the event-buffer cap. The partial
// result remains usable (flushed paths are valid up to the overflow time).
void require_complete(const RunResult& result);

// min over w_grid of the ensemble fraction with |v_i - w| >= a and |v_i| <= c;
// a positive lower bound witnesses that the law spreads mass away from every
// candidate concentration point.
double support_probe(const std::vector<Vec3>& snapshot, double a, double c,
                     const std::vector<Vec3>& w_grid);

// Thread count after applying the THREADS environment cap.
int effective_threads(int requested);

}  // namespace boltzfrac
