#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "boltzfrac/fractal.hpp"
#include "boltzfrac/path_record.hpp"
#include "boltzfrac/wavelet.hpp"

namespace boltzfrac {

// FNV-1a over raw bytes; reports cite this hash of their exact inputs.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t hash_file_bytes(const std::vector<std::filesystem::path>& files);

// Expand a glob pattern (wildcards in the basename only) to a sorted file
// list. A pattern with no wildcard names a single file.
std::vector<std::filesystem::path> glob_paths(const std::string& pattern);

struct LoadedPaths {
    std::vector<PathRecord> records;
    std::vector<std::filesystem::path> files;
    std::uint64_t input_hash = 0;
};
LoadedPaths load_paths(const std::string& pattern);

// True when every record carries the same nu (tolerance 1e-12).
bool uniform_nu(const std::vector<PathRecord>& records);

// RFC-style CSV: fields containing comma, quote, or newline are quoted with
// internal quotes doubled. Written atomically (temp + rename).
std::string csv_field(std::string_view raw);
void write_csv(const std::filesystem::path& file, std::span<const std::string> header,
               const std::vector<std::vector<std::string>>& rows);

// Run fn(i) for i in [0, n) on up to `threads` workers (0: hardware limit,
// capped by the THREADS environment variable).
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// --- report pipelines ---------------------------------------------------

// Mean count of jumps of size >= 2^-m per path, with the log2 regression
// slope over the window (the growth-rate estimate nu_hat).
struct ScalingTable {
    std::vector<int> m;
    std::vector<double> count;  // mean over paths
    double slope = 0.0;
    double intercept = 0.0;
};
ScalingTable scaling_table(const std::vector<PathRecord>& paths, int m_lo, int m_hi);

struct CoverageRow {
    int m = 0;
    double delta = 0.0;
    double fraction = 0.0;  // mean Lebesgue fraction of the covering union
};
std::vector<CoverageRow> coverage_table(const std::vector<PathRecord>& paths,
                                        std::span<const double> deltas, int m_lo, int m_hi);

struct ClassifyOptions {
    int m_lo = 4;
    int m_hi = 12;
    double epsilon = 0.2;
    double osc_ratio = 0.2;
    double margin = 0.15;
    std::uint64_t samples_per_path = 256;   // uniform probe times
    std::uint64_t big_jumps_per_path = 0;   // additionally probe the largest jumps
    std::uint64_t seed = 0x51ab9ed1af5c2e6bULL;
    int threads = 0;
};

struct ClassifyRow {
    std::string path;
    ExponentSample sample;
    bool inconsistent = false;  // h_x below 1 + h_v - margin
};

// Exponent samples at uniform times (plus optionally the largest-jump times)
// of every path. h_x is the position bound with the oscillation hypothesis
// enforced; the oscillating flag is raised only when h_x also clears the
// geometric bound computed with the hypothesis waived (margin_eff), so a
// finite-resolution excess of the bound itself is not misread as a chirp.
std::vector<ClassifyRow> classify_table(const std::vector<PathRecord>& paths,
                                        std::span<const std::string> names,
                                        const ClassifyOptions& opt);

struct IbpRow {
    std::string path;
    double a = 0.0, b = 0.0;
    int order = 0;
    double lhs = 0.0, rhs = 0.0;  // largest-magnitude component of each side
    double gap = 0.0;
};
// Random (a, b) windows per path, a log-uniform in [a_min, a_max], window
// kept inside [0, horizon].
std::vector<IbpRow> ibp_table(const std::vector<PathRecord>& paths,
                              std::span<const std::string> names, int order,
                              std::uint64_t draws_per_path, std::uint64_t seed,
                              double a_min = 1e-3, double a_max = 0.3);

// --- analyze command ------------------------------------------------------

struct AnalyzeOptions {
    std::vector<double> h_grid;  // empty: {0.25..2.0} * (1/nu)/2
    int m_lo = 4;
    int m_hi = 0;  // 0: finest resolved band from metadata
    double tolerance = 0.05;
    ClassifyOptions classify;
    int ibp_order = 4;
    std::uint64_t ibp_draws = 100;
    std::vector<double> coverage_deltas{0.3, 0.4, 0.6, 0.8, 1.0};
    int coverage_m_lo = 10;
    int coverage_m_hi = 14;
    int threads = 0;
};

struct AnalyzeSummary {
    std::uint64_t n_paths = 0;
    std::uint64_t n_events = 0;
    double nu = 0.0;
    double nu_hat = 0.0;           // slope of the scaling table
    double max_position_bound = 0.0;  // max finite h_x over classify samples
    std::uint64_t cusp = 0, oscillating = 0, jump_time = 0, undetermined = 0;
    std::uint64_t inconsistent = 0;
    double max_ibp_gap = 0.0;
    double min_coverage_fraction = 1.0;  // over deltas < nu
};

// Emits spectrum.csv, scaling.csv, coverage.csv, classify.csv, ibp_audit.csv
// into out_dir and returns the headline numbers.
AnalyzeSummary run_analyze(const LoadedPaths& input, const std::filesystem::path& out_dir,
                           const AnalyzeOptions& opt);

}  // namespace boltzfrac
