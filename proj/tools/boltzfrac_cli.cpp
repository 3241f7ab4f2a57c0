// Batch front door: simulate velocity jump processes, analyze stored paths,
// run built-in invariant suites, and emit spectrum tables.
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "boltzfrac/analysis.hpp"
#include "boltzfrac/config.hpp"
#include "boltzfrac/fractal.hpp"
#include "boltzfrac/num_io.hpp"
#include "boltzfrac/path_store.hpp"
#include "boltzfrac/rng.hpp"
#include "boltzfrac/simulator.hpp"
#include "boltzfrac/wavelet.hpp"

namespace fs = std::filesystem;
using namespace boltzfrac;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

void write_text_atomic(const fs::path& file, const std::string& text) {
    const fs::path tmp = file.string() + ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot open for writing: " + tmp.string());
    out << text;
    out.flush();
    out.close();
    std::error_code ec;
    fs::rename(tmp, file, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw StorageError("cannot move into place: " + file.string());
    }
}

// The config layer defaults every key; reproducible simulation runs insist on
// an explicit seed so two invocations cannot silently share one.
bool config_names_seed(const std::string& config_path) {
    std::ifstream in(config_path);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.resize(hash_pos);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        key.erase(0, key.find_first_not_of(" \t"));
        const auto end = key.find_last_not_of(" \t");
        key.resize(end == std::string::npos ? 0 : end + 1);
        if (key == "seed") return true;
    }
    return false;
}

std::string path_file_name(std::uint64_t replica, std::uint64_t particle) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "path_r%04llu_p%04llu.txt",
                  static_cast<unsigned long long>(replica),
                  static_cast<unsigned long long>(particle));
    return std::string(buf);
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
    SimulationConfig cfg;
    try {
        cfg = parse_config_file(config_path);
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.find("gamma + nu must be positive") != std::string::npos)
            std::fprintf(stderr, "standing assumption violated: %s\n", msg.c_str());
        else
            std::fprintf(stderr, "%s\n", msg.c_str());
        return 2;
    }
    if (!config_names_seed(config_path)) {
        std::fprintf(stderr, "config: key 'seed': required for simulation runs\n");
        return 2;
    }

    const auto t0 = std::chrono::steady_clock::now();
    RunResult result;
    try {
        result = run(cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "simulate: %s\n", e.what());
        return 1;
    }

    std::vector<fs::path> outputs;
    std::uint64_t total_events = 0;
    try {
        fs::create_directories(out_dir);
        for (const auto& rep : result.replicas) {
            for (std::size_t p = 0; p < rep.paths.size(); ++p) {
                const fs::path file = fs::path(out_dir) / path_file_name(rep.replica_id, p);
                write_path(rep.paths[p], file);
                outputs.push_back(file);
                total_events += rep.paths[p].events.size();
            }
        }
    } catch (const StorageError& e) {
        std::fprintf(stderr, "simulate: %s\n", e.what());
        return 1;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ostringstream man;
    man << "#boltzmanifest 1\n";
    man << "tool=boltzfrac " << kVersion << "\n";
    man << "created_unix=" << static_cast<long long>(std::time(nullptr)) << "\n";
    man << "wall_clock_seconds=" << format_double(wall) << "\n";
    man << "threads=" << effective_threads(0) << "\n";
    for (const auto& [key, value] : config_echo(cfg)) man << "config." << key << "=" << value << "\n";
    for (const auto& rep : result.replicas)
        man << "replica_seed." << rep.replica_id << "="
            << stream_seed(cfg.seed, rep.replica_id) << "\n";
    for (const auto& file : outputs)
        man << "output." << file.filename().string() << "=" << hash_hex(hash_file_bytes({file}))
            << "\n";
    write_text_atomic(fs::path(out_dir) / "manifest.txt", man.str());

    std::printf("wrote %zu path files (%llu events) to %s in %.2f s\n", outputs.size(),
                static_cast<unsigned long long>(total_events), out_dir.c_str(), wall);
    if (result.overflowed) {
        std::fprintf(stderr,
                     "simulate: event buffer cap hit; flushed paths are partial "
                     "(raise max_events_per_path)\n");
        return 1;
    }
    return 0;
}

int cmd_analyze(const std::string& glob, const std::string& out_dir,
                const std::vector<double>& grid) {
    LoadedPaths lp;
    try {
        lp = load_paths(glob);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "analyze: %s\n", e.what());
        return 1;
    }
    if (lp.files.empty()) {
        std::fprintf(stderr, "analyze: no path files match '%s'\n", glob.c_str());
        return 3;
    }

    AnalyzeOptions opt;
    opt.h_grid = grid;
    AnalyzeSummary sum;
    try {
        sum = run_analyze(lp, out_dir, opt);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "analyze: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "analyze: %s\n", e.what());
        return 1;
    }

    const auto& meta = lp.records.front().meta;
    std::printf("paths           %llu files, %llu events, nu=%s gamma=%s\n",
                static_cast<unsigned long long>(sum.n_paths),
                static_cast<unsigned long long>(sum.n_events),
                format_double(meta.nu).c_str(), format_double(meta.gamma).c_str());
    std::printf("jump scaling    nu_hat = %s (law exponent nu = %s)\n",
                format_double(sum.nu_hat).c_str(), format_double(sum.nu).c_str());
    std::printf("position bound  max finite h_x = %s\n",
                format_double(sum.max_position_bound).c_str());
    std::printf("classification  cusp %llu | oscillating %llu | jump_time %llu | "
                "undetermined %llu | inconsistent %llu\n",
                static_cast<unsigned long long>(sum.cusp),
                static_cast<unsigned long long>(sum.oscillating),
                static_cast<unsigned long long>(sum.jump_time),
                static_cast<unsigned long long>(sum.undetermined),
                static_cast<unsigned long long>(sum.inconsistent));
    std::printf("wavelet         max relative ibp gap = %s\n",
                format_double(sum.max_ibp_gap).c_str());
    std::printf("coverage        min fraction at delta < nu = %s\n",
                format_double(sum.min_coverage_fraction).c_str());
    std::printf("reports         %s/{scaling,spectrum,coverage,classify,ibp_audit}.csv\n",
                out_dir.c_str());
    std::printf("input hash      %s\n", hash_hex(lp.input_hash).c_str());
    return 0;
}

int cmd_spectrum(const std::string& glob, const std::string& kind_name,
                 const std::string& out_file, std::vector<double> grid) {
    LoadedPaths lp;
    try {
        lp = load_paths(glob);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "spectrum: %s\n", e.what());
        return 1;
    }
    if (lp.files.empty()) {
        std::fprintf(stderr, "spectrum: no path files match '%s'\n", glob.c_str());
        return 3;
    }
    if (!uniform_nu(lp.records)) {
        std::fprintf(stderr, "spectrum: paths mix different nu\n");
        return 2;
    }
    const SpectrumKind kind =
        kind_name == "position" ? SpectrumKind::position : SpectrumKind::velocity;
    const double nu = lp.records.front().meta.nu;
    if (grid.empty()) {
        const double shift = kind == SpectrumKind::position ? 1.0 : 0.0;
        for (int k = 1; k <= 8; ++k) grid.push_back(shift + 0.25 * k / (2.0 * nu));
    }

    int m_hi = 0;
    for (const auto& r : lp.records)
        m_hi = m_hi == 0 ? r.meta.resolved_m_max : std::min(m_hi, r.meta.resolved_m_max);
    if (m_hi < 6) m_hi = 12;
    const int m_lo = std::max(4, m_hi - 4);

    SpectrumEstimate est;
    try {
        est = empirical_spectrum(lp.records, grid, m_lo, m_hi, 0.05, kind);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "spectrum: %s\n", e.what());
        return 2;
    }

    const std::string hash = hash_hex(lp.input_hash);
    const std::vector<std::string> header{"h", "d_hat", "d_theory", "n_samples", "input_hash"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : est.rows) {
        std::string d_hat;
        switch (row.status) {
            case SpectrumRow::Status::ok: d_hat = format_double(row.d_hat); break;
            case SpectrumRow::Status::empty: d_hat = "empty"; break;
            case SpectrumRow::Status::undetermined: d_hat = "undetermined"; break;
        }
        rows.push_back({format_double(row.h), d_hat, format_double(row.d_theory),
                        std::to_string(row.n_samples), hash});
    }
    write_csv(out_file, header, rows);
    std::printf("wrote %s (%zu rows, bands %d..%d, input hash %s)\n", out_file.c_str(),
                rows.size(), m_lo, m_hi, hash.c_str());
    return 0;
}

// --- verify suites ----------------------------------------------------------

struct PropResult {
    bool pass = true;
    void report(const char* name, bool ok, double observed, double bound) {
        std::printf("PROP %s %s %s %s\n", name, ok ? "PASS" : "FAIL",
                    format_double(observed).c_str(), format_double(bound).c_str());
        pass = pass && ok;
    }
};

SimulationConfig desk_config(double gamma, double nu, double theta_min, std::uint64_t n,
                             std::uint64_t tracked, std::uint64_t replicas,
                             std::uint64_t seed) {
    SimulationConfig cfg;
    cfg.gamma = gamma;
    cfg.nu = nu;
    cfg.theta_min = theta_min;
    cfg.n_particles = n;
    cfg.n_tracked = tracked;
    cfg.replicas = replicas;
    cfg.seed = seed;
    cfg.horizon = 1.0;
    return cfg;
}

std::vector<PathRecord> collect_paths(RunResult&& result) {
    std::vector<PathRecord> paths;
    for (auto& rep : result.replicas)
        for (auto& p : rep.paths) paths.push_back(std::move(p));
    return paths;
}

int verify_conservation() {
    PropResult r;
    SimulationConfig cfg = desk_config(0.3, 0.4, 0.02, 256, 1, 4, 20260816);
    const RunResult res = run(cfg);
    double worst_p = 0.0, worst_e = 0.0;
    for (const auto& rep : res.replicas) {
        const auto& st = rep.stats;
        worst_p = std::max(worst_p, norm(st.momentum_final - st.momentum_initial));
        worst_e = std::max(worst_e, std::abs(st.m2_final - st.m2_initial) /
                                        std::max(1.0, st.m2_initial));
    }
    r.report("conservation.momentum_drift", worst_p <= 1e-12, worst_p, 1e-12);
    r.report("conservation.energy_drift", worst_e <= 1e-10, worst_e, 1e-10);
    return r.pass ? 0 : 1;
}

int verify_scaling() {
    PropResult r;
    SimulationConfig cfg = desk_config(0.0, 0.5, 0x1.0p-12, 64, 64, 30, 909090);
    const auto paths = collect_paths(run(cfg));
    const auto tab = scaling_table(paths, 5, cfg.resolved_m_max());
    const double err = std::abs(tab.slope - cfg.nu);
    r.report("scaling.slope_error", err <= 0.05, err, 0.05);
    return r.pass ? 0 : 1;
}

int verify_coverage() {
    PropResult r;
    SimulationConfig cfg = desk_config(0.0, 0.5, 0x1.0p-16, 64, 64, 10, 411911);
    const auto paths = collect_paths(run(cfg));
    const std::vector<double> deltas{0.3, 0.4};
    double min_frac = 1.0;
    for (const auto& row : coverage_table(paths, deltas, 10, 12))
        min_frac = std::min(min_frac, row.fraction);
    r.report("coverage.min_fraction", min_frac >= 0.99, min_frac, 0.99);
    return r.pass ? 0 : 1;
}

int verify_dimension() {
    PropResult r;
    SimulationConfig cfg = desk_config(0.0, 0.5, 0x1.0p-14, 256, 16, 15, 5150);
    cfg.f0_temperature = 1e-5;  // cold start: band occupancy follows the kernel alone
    const auto paths = collect_paths(run(cfg));
    for (const double delta : {0.6, 0.8, 1.0}) {
        const double dim = covering_set_dimension(paths, delta, 10, 13);
        const double err = std::abs(dim - cfg.nu / delta);
        char name[64];
        std::snprintf(name, sizeof(name), "dimension.delta_%s", format_double(delta).c_str());
        r.report(name, err <= 0.15, err, 0.15);
    }
    return r.pass ? 0 : 1;
}

int verify_wavelet() {
    PropResult r;
    SimulationConfig cfg = desk_config(0.0, 0.5, 0x1.0p-10, 32, 16, 1, 777001);
    const auto paths = collect_paths(run(cfg));
    double max_gap = 0.0;
    for (const auto& row : ibp_table(paths, {}, 4, 50, 838383))
        max_gap = std::max(max_gap, row.gap);
    r.report("wavelet.ibp_gap", max_gap <= 1e-9, max_gap, 1e-9);
    return r.pass ? 0 : 1;
}

int verify_classify() {
    PropResult r;
    SimulationConfig cfg = desk_config(1.0 / 3.0, 1.0 / 3.0, 0x1.0p-16, 128, 16, 8, 24601);
    cfg.truncation_B = 8.0;
    cfg.f0_temperature = 0.04;
    const auto paths = collect_paths(run(cfg));
    ClassifyOptions opt;
    opt.m_lo = 6;
    opt.m_hi = cfg.resolved_m_max();
    opt.samples_per_path = 64;
    opt.big_jumps_per_path = 2;
    const auto rows = classify_table(paths, {}, opt);

    double max_bound = 0.0;
    double max_jump_hv = 0.0;
    std::uint64_t oscillating = 0, spurious = 0, total = 0;
    for (const auto& row : rows) {
        ++total;
        if (std::isfinite(row.sample.h_x)) max_bound = std::max(max_bound, row.sample.h_x);
        if (row.sample.kind == SingularityKind::jump_time)
            max_jump_hv = std::max(max_jump_hv, std::abs(row.sample.h_v));
        if (row.sample.kind == SingularityKind::oscillating) {
            ++oscillating;
            if (row.sample.h_v < 1.0 / (2.0 * cfg.nu) - 0.15) ++spurious;
        }
    }
    const double bound_cap = 1.0 + 1.0 / cfg.nu + 0.2;
    const double spurious_frac = total ? static_cast<double>(spurious) / total : 0.0;
    r.report("classify.position_bound", max_bound <= bound_cap, max_bound, bound_cap);
    r.report("classify.jump_time_h_v", max_jump_hv == 0.0, max_jump_hv, 0.0);
    r.report("classify.spurious_oscillating", spurious_frac <= 0.02, spurious_frac, 0.02);
    return r.pass ? 0 : 1;
}

int cmd_verify(const std::string& suite) {
    try {
        if (suite == "conservation") return verify_conservation();
        if (suite == "scaling") return verify_scaling();
        if (suite == "coverage") return verify_coverage();
        if (suite == "dimension") return verify_dimension();
        if (suite == "wavelet") return verify_wavelet();
        if (suite == "classify") return verify_classify();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "verify: %s\n", e.what());
        return 1;
    }
    std::fprintf(stderr,
                 "verify: unknown suite '%s' (expected conservation|scaling|coverage|"
                 "dimension|wavelet|classify)\n",
                 suite.c_str());
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"velocity jump-process simulator and multifractal analyzer"};
    app.set_version_flag("--version", std::string("boltzfrac ") + kVersion);
    app.require_subcommand(1);

    std::string config_path, out_dir, glob, out_file, suite;
    std::string kind = "velocity";
    std::vector<double> grid;

    auto* sim = app.add_subcommand("simulate", "run replicas and store path files");
    sim->add_option("--config", config_path, "key=value simulation config")->required();
    sim->add_option("--out", out_dir, "output directory")->required();

    auto* ana = app.add_subcommand("analyze", "emit csv reports for stored paths");
    ana->add_option("--paths", glob, "path-file glob (wildcards in basename)")->required();
    ana->add_option("--out", out_dir, "output directory")->required();
    ana->add_option("--grid", grid, "spectrum exponent grid")->delimiter(',');

    auto* ver = app.add_subcommand("verify", "run a built-in invariant suite");
    ver->add_option("--suite", suite, "conservation|scaling|coverage|dimension|wavelet|classify")
        ->required();

    auto* spec = app.add_subcommand("spectrum", "emit a singularity-spectrum csv");
    spec->add_option("--paths", glob, "path-file glob")->required();
    spec->add_option("--kind", kind, "velocity|position")
        ->check(CLI::IsMember({"velocity", "position"}));
    spec->add_option("--out", out_file, "output csv file")->required();
    spec->add_option("--grid", grid, "exponent grid")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(config_path, out_dir);
        if (ana->parsed()) return cmd_analyze(glob, out_dir, grid);
        if (ver->parsed()) return cmd_verify(suite);
        if (spec->parsed()) return cmd_spectrum(glob, kind, out_file, grid);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }
    return 0;
}
