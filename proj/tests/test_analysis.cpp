#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "boltzfrac/analysis.hpp"
#include "boltzfrac/path_store.hpp"
#include "boltzfrac/wavelet.hpp"

using namespace boltzfrac;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& sub) {
    const fs::path d = fs::temp_directory_path() /
                       ("boltzanalysis_test_" + std::to_string(::getpid())) / sub;
    fs::create_directories(d);
    return d;
}

fs::path write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
    return p;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

std::uint64_t fnv_str(const std::string& s, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    return fnv1a64(std::span<const unsigned char>(
                       reinterpret_cast<const unsigned char*>(s.data()), s.size()),
                   seed);
}

std::vector<std::string> lines_of(const fs::path& p) {
    std::vector<std::string> out;
    std::ifstream in(p, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

PathMeta base_meta() {
    PathMeta meta;
    meta.gamma = 0.0;
    meta.nu = 0.5;
    meta.theta_min = 0x1.0p-12;
    meta.n_particles = 64;
    meta.horizon = 1.0;
    meta.resolved_m_max = 12;
    return meta;
}

// Jump counts arranged so that #{|dv| >= 2^-m} is exactly 2^m for m = 1..7.
PathRecord geometric_record() {
    PathRecord rec;
    rec.meta = base_meta();
    rec.v0 = {0.1, -0.2, 0.3};
    std::size_t total = 0;
    for (int j = 1; j <= 7; ++j) total += (j == 1 ? 2 : (std::size_t{1} << (j - 1)));
    std::size_t k = 0;
    for (int j = 1; j <= 7; ++j) {
        const std::size_t n = (j == 1 ? 2 : (std::size_t{1} << (j - 1)));
        const double size = std::ldexp(1.0, -j);
        for (std::size_t i = 0; i < n; ++i, ++k) {
            const double t = static_cast<double>(k + 1) / static_cast<double>(total + 1);
            rec.events.push_back({t, {size, 0.0, 0.0}, 0.3, 4.0 * size});
        }
    }
    return rec;
}

// Three distinct-size jumps per band m = 4..8, times spread over (0, 1).
PathRecord band_record(double size_tweak = 0.0, double time_shift = 0.0) {
    PathRecord rec;
    rec.meta = base_meta();
    rec.v0 = {0.5, 0.25, -0.75};
    std::size_t k = 0;
    for (int m = 4; m <= 8; ++m) {
        for (int i = 0; i < 3; ++i, ++k) {
            const double size = (0.6 + 0.05 * i + size_tweak) * std::ldexp(1.0, -m);
            const double t = 0.03 + 0.06 * static_cast<double>(k) + time_shift;
            rec.events.push_back({t, {size, 0.0, 0.0}, 0.3, 4.0 * size});
        }
    }
    return rec;
}

PathRecord empty_record() {
    PathRecord rec;
    rec.meta = base_meta();
    rec.v0 = {1.0, 0.0, 0.0};
    return rec;
}

bool same_double(double a, double b) {
    return (std::isnan(a) && std::isnan(b)) || a == b;
}

bool rows_equal(const std::vector<ClassifyRow>& a, const std::vector<ClassifyRow>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].path != b[i].path) return false;
        if (!same_double(a[i].sample.t, b[i].sample.t)) return false;
        if (!same_double(a[i].sample.delta_hat, b[i].sample.delta_hat)) return false;
        if (!same_double(a[i].sample.h_v, b[i].sample.h_v)) return false;
        if (!same_double(a[i].sample.h_x, b[i].sample.h_x)) return false;
        if (a[i].sample.kind != b[i].sample.kind) return false;
        if (a[i].inconsistent != b[i].inconsistent) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("byte hashing matches the published reference vectors") {
    CHECK(fnv_str("") == 0xcbf29ce484222325ULL);
    CHECK(fnv_str("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv_str("foobar") == 0x85944171f73967e8ULL);

    // Chaining through the seed equals hashing the concatenation.
    CHECK(fnv_str("b", fnv_str("a")) == fnv_str("ab"));
    CHECK(fnv_str("ab") == 0x089c4407b545986aULL);
}

TEST_CASE("file hashing chains across files in order") {
    const fs::path dir = temp_dir("hash");
    const std::string a_text = "alpha file contents\n";
    const std::string b_text = "beta: 1,2,3\n";
    const fs::path fa = write_text(dir / "a.txt", a_text);
    const fs::path fb = write_text(dir / "b.txt", b_text);

    CHECK(hash_file_bytes({fa, fb}) == 0x75f25e9221ccd651ULL);
    CHECK(hash_file_bytes({fa, fb}) == fnv_str(a_text + b_text));
    CHECK(hash_file_bytes({fb, fa}) != hash_file_bytes({fa, fb}));
    CHECK_THROWS_AS(hash_file_bytes({dir / "missing.txt"}), StorageError);
}

TEST_CASE("csv fields quote exactly when needed") {
    CHECK(csv_field("abc") == "abc");
    CHECK(csv_field("") == "");
    CHECK(csv_field("with space") == "with space");
    CHECK(csv_field("1.5e-3") == "1.5e-3");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("line\nbreak") == "\"line\nbreak\"");
    CHECK(csv_field("cr\rend") == "\"cr\rend\"");
}

TEST_CASE("csv writer emits atomically") {
    const fs::path dir = temp_dir("csv");
    const fs::path file = dir / "out.csv";
    const std::vector<std::string> header{"a", "b"};

    write_csv(file, header, {{"1", "x,y"}, {"2", "plain"}});
    CHECK(read_text(file) == "a,b\n1,\"x,y\"\n2,plain\n");
    CHECK(!fs::exists(file.string() + ".tmp"));

    write_csv(file, header, {{"9", "z"}});
    CHECK(read_text(file) == "a,b\n9,z\n");

    CHECK_THROWS_AS(write_csv("/nonexistent_dir_zzz/out.csv", header, {}), StorageError);
}

TEST_CASE("glob selects by basename pattern") {
    const fs::path dir = temp_dir("glob");
    for (const char* name : {"p1.txt", "p2.txt", "px.txt", "q.txt", "p1.dat"})
        write_text(dir / name, "x");
    fs::create_directories(dir / "d.txt");  // directories never match

    const auto exact = glob_paths((dir / "q.txt").string());
    REQUIRE(exact.size() == 1);
    CHECK(exact[0] == dir / "q.txt");
    CHECK(glob_paths((dir / "missing.txt").string()).empty());

    const auto stars = glob_paths((dir / "p*.txt").string());
    REQUIRE(stars.size() == 3);
    CHECK(stars[0] == dir / "p1.txt");
    CHECK(stars[1] == dir / "p2.txt");
    CHECK(stars[2] == dir / "px.txt");

    const auto question = glob_paths((dir / "?.txt").string());
    REQUIRE(question.size() == 1);
    CHECK(question[0] == dir / "q.txt");

    CHECK(glob_paths((dir / "*.txt").string()).size() == 4);
    CHECK(glob_paths("/nonexistent_dir_zzz/*.txt").empty());
    CHECK(glob_paths((dir / "z*.txt").string()).empty());
}

TEST_CASE("uniform_nu tolerates only identical exponents") {
    CHECK(uniform_nu({}));
    PathRecord a = empty_record(), b = empty_record();
    CHECK(uniform_nu({a, b}));
    b.meta.nu = a.meta.nu + 1e-13;
    CHECK(uniform_nu({a, b}));
    b.meta.nu = a.meta.nu + 1e-9;
    CHECK(!uniform_nu({a, b}));
}

TEST_CASE("parallel_for covers every index exactly once") {
    for (int threads : {1, 4}) {
        std::atomic<std::uint64_t> sum{0};
        std::vector<std::atomic<int>> hits(1000);
        parallel_for(1000, threads, [&](std::size_t i) {
            sum += i;
            hits[i].fetch_add(1);
        });
        CHECK(sum.load() == 499500);
        bool once = true;
        for (const auto& h : hits) once = once && h.load() == 1;
        CHECK(once);
    }

    bool called = false;
    parallel_for(0, 4, [&](std::size_t) { called = true; });
    CHECK(!called);

    CHECK_THROWS_AS(parallel_for(100, 4,
                                 [](std::size_t i) {
                                     if (i == 37) throw std::logic_error("boom");
                                 }),
                    std::runtime_error);
}

TEST_CASE("scaling table reproduces exact geometric growth") {
    const PathRecord a = geometric_record();
    const PathRecord b = empty_record();
    const auto tab = scaling_table({a, b}, 0, 7);

    REQUIRE(tab.m.size() == 8);
    REQUIRE(tab.count.size() == 8);
    CHECK(tab.m.front() == 0);
    CHECK(tab.m.back() == 7);
    CHECK(tab.count[0] == 0.0);  // no jumps of size >= 1
    for (int m = 1; m <= 7; ++m)
        CHECK(tab.count[static_cast<std::size_t>(m)] == std::ldexp(1.0, m - 1));

    // count = 2^(m-1) exactly, so the log2 regression is exact.
    CHECK(tab.slope == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tab.intercept == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("scaling fit is undefined with fewer than two populated bands") {
    PathRecord rec = empty_record();
    rec.events.push_back({0.5, {0.125, 0.0, 0.0}, 0.3, 0.5});
    const auto tab = scaling_table({rec}, 2, 3);
    REQUIRE(tab.count.size() == 2);
    CHECK(tab.count[0] == 0.0);
    CHECK(tab.count[1] == 1.0);
    CHECK(std::isnan(tab.slope));
    CHECK(std::isnan(tab.intercept));
}

TEST_CASE("coverage table averages the covering measure") {
    PathRecord a = empty_record();
    a.events.push_back({0.5, {0.125, 0.0, 0.0}, 0.3, 0.5});
    const PathRecord b = empty_record();

    const std::vector<double> deltas{1.0, 2.0};
    const auto rows = coverage_table({a, b}, deltas, 3, 4);
    REQUIRE(rows.size() == 4);

    // Outer loop over deltas, inner over m.
    CHECK(rows[0].m == 3);
    CHECK(rows[0].delta == 1.0);
    CHECK(rows[1].m == 4);
    CHECK(rows[2].delta == 2.0);

    // Single jump of size 2^-3 at t = 1/2: selected at m = 3 only, interval
    // radius size^delta, averaged over the two paths.
    CHECK(rows[0].fraction == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(rows[1].fraction == 0.0);
    CHECK(rows[2].fraction == doctest::Approx(0.015625).epsilon(1e-12));
    CHECK(rows[3].fraction == 0.0);
}

TEST_CASE("classification rows are deterministic and ordered by path") {
    const std::vector<PathRecord> paths{band_record(), empty_record()};
    const std::vector<std::string> names{"alpha", "beta"};

    ClassifyOptions opt;
    opt.m_lo = 4;
    opt.m_hi = 10;
    opt.samples_per_path = 8;
    opt.big_jumps_per_path = 2;
    opt.seed = 777;
    opt.threads = 1;

    const auto rows = classify_table(paths, names, opt);
    REQUIRE(rows.size() == 18);  // 8 + 2 big jumps, then 8 (no jumps to add)
    for (std::size_t i = 0; i < 10; ++i) CHECK(rows[i].path == "alpha");
    for (std::size_t i = 10; i < 18; ++i) CHECK(rows[i].path == "beta");

    // The two extra probes sit on the largest-size jump times.
    const auto& rec = paths[0];
    std::vector<std::size_t> order(rec.events.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&rec](std::size_t x, std::size_t y) {
        return norm2(rec.events[x].dv) > norm2(rec.events[y].dv);
    });
    CHECK(rows[8].sample.t == rec.events[order[0]].t);
    CHECK(rows[9].sample.t == rec.events[order[1]].t);
    CHECK(rows[8].sample.kind == SingularityKind::jump_time);
    CHECK(rows[9].sample.kind == SingularityKind::jump_time);
    CHECK(rows[8].sample.h_v == 0.0);  // delta_hat capped at an event time

    // A path with no events yields undetermined samples with infinite bound.
    for (std::size_t i = 10; i < 18; ++i) {
        CHECK(rows[i].sample.kind == SingularityKind::undetermined);
        CHECK(std::isnan(rows[i].sample.h_v));
        CHECK(std::isnan(rows[i].sample.delta_hat));
        CHECK(std::isinf(rows[i].sample.h_x));
        CHECK(!rows[i].inconsistent);
    }

    // Thread count must not change a single value.
    ClassifyOptions wide = opt;
    wide.threads = 4;
    CHECK(rows_equal(rows, classify_table(paths, names, wide)));

    // Without names, paths are labeled by index.
    const auto anon = classify_table(paths, {}, opt);
    CHECK(anon[0].path == "0");
    CHECK(anon[17].path == "1");
}

TEST_CASE("derivative-identity audit reruns exactly") {
    PathRecord x = empty_record();
    x.events.push_back({0.45, {0.5, -1.0, 0.25}, 0.3, 4.0 * norm(Vec3{0.5, -1.0, 0.25})});
    PathRecord y = empty_record();
    y.events.push_back({0.6, {-0.25, 0.75, 0.5}, 0.3, 4.0 * norm(Vec3{-0.25, 0.75, 0.5})});
    const std::vector<PathRecord> paths{x, y};
    const std::vector<std::string> names{"x", "y"};

    const auto rows = ibp_table(paths, names, 3, 5, 4242);
    REQUIRE(rows.size() == 10);
    for (std::size_t i = 0; i < 5; ++i) CHECK(rows[i].path == "x");
    for (std::size_t i = 5; i < 10; ++i) CHECK(rows[i].path == "y");

    for (const auto& row : rows) {
        CHECK(row.order == 3);
        CHECK(row.a >= 1e-3);
        CHECK(row.a <= 0.3 * (1 + 1e-12));
        CHECK(row.b >= 0.0);
        CHECK(row.b + row.a <= 1.0 + 1e-12);
        CHECK(row.gap < 1e-9);

        // The row reports the largest-magnitude component of the exact check.
        const auto& rec = row.path == "x" ? x : y;
        const auto res = ibp_check(rec, row.a, row.b, 3);
        int comp = 0;
        for (int c = 1; c < 3; ++c)
            if (std::abs(res.lhs[c]) > std::abs(res.lhs[comp])) comp = c;
        CHECK(row.lhs == res.lhs[comp]);
        CHECK(row.rhs == res.rhs[comp]);
        CHECK(row.gap == res.gap);
    }

    const auto rerun = ibp_table(paths, names, 3, 5, 4242);
    REQUIRE(rerun.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rerun[i].a == rows[i].a);
        CHECK(rerun[i].b == rows[i].b);
        CHECK(rerun[i].lhs == rows[i].lhs);
        CHECK(rerun[i].rhs == rows[i].rhs);
        CHECK(rerun[i].gap == rows[i].gap);
    }
}

TEST_CASE("load_paths globs, reads, and hashes") {
    const fs::path dir = temp_dir("load");
    write_path(band_record(), dir / "path_0.txt");
    write_path(band_record(0.002, 0.005), dir / "path_1.txt");
    PathRecord other = band_record(0.001, 0.002);
    other.meta.nu = 0.25;
    write_path(other, dir / "other_2.txt");

    const auto lp = load_paths((dir / "path_*.txt").string());
    REQUIRE(lp.files.size() == 2);
    REQUIRE(lp.records.size() == 2);
    CHECK(lp.files[0].filename() == "path_0.txt");
    CHECK(lp.files[1].filename() == "path_1.txt");
    CHECK(lp.records[0].events.size() == 15);
    CHECK(lp.input_hash == hash_file_bytes(lp.files));
    CHECK(lp.input_hash != 0);
    CHECK(uniform_nu(lp.records));

    const auto all = load_paths((dir / "*.txt").string());
    REQUIRE(all.records.size() == 3);
    CHECK(!uniform_nu(all.records));

    const auto none = load_paths((dir / "zzz_*.txt").string());
    CHECK(none.files.empty());
    CHECK(none.records.empty());
    CHECK(none.input_hash == 0);
}

TEST_CASE("analyze pipeline writes the five reports") {
    const fs::path in_dir = temp_dir("analyze_in");
    const fs::path out_dir = temp_dir("analyze_out");
    write_path(band_record(), in_dir / "path_0.txt");
    write_path(band_record(0.002, 0.005), in_dir / "path_1.txt");
    const auto lp = load_paths((in_dir / "path_*.txt").string());
    REQUIRE(lp.records.size() == 2);

    AnalyzeOptions opt;
    opt.h_grid = {1.0, 2.0};
    opt.m_lo = 3;
    opt.m_hi = 8;
    opt.classify.samples_per_path = 16;
    opt.ibp_order = 3;
    opt.ibp_draws = 8;
    opt.coverage_deltas = {0.4, 1.0};
    opt.coverage_m_lo = 4;
    opt.coverage_m_hi = 6;

    const auto sum = run_analyze(lp, out_dir, opt);
    CHECK(sum.n_paths == 2);
    CHECK(sum.n_events == 30);
    CHECK(sum.nu == 0.5);
    CHECK(std::isfinite(sum.nu_hat));
    CHECK(sum.nu_hat > 0.0);
    CHECK(sum.max_ibp_gap < 1e-9);

    char hash_buf[17];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                  static_cast<unsigned long long>(lp.input_hash));
    const std::string hash(hash_buf);

    const auto scaling = lines_of(out_dir / "scaling.csv");
    REQUIRE(scaling.size() == 7);  // header + m = 3..8
    CHECK(scaling[0] == "m,count,fit,input_hash");
    for (std::size_t i = 1; i < scaling.size(); ++i) {
        const auto f = split_csv(scaling[i]);
        REQUIRE(f.size() == 4);
        CHECK(f[0] == std::to_string(2 + static_cast<int>(i)));
        CHECK(f[3] == hash);
    }

    const auto spectrum = lines_of(out_dir / "spectrum.csv");
    REQUIRE(spectrum.size() == 3);  // header + 2 grid points
    CHECK(spectrum[0] == "h,d_hat,d_theory,n_samples,input_hash");
    CHECK(split_csv(spectrum[1])[0] == "1");
    CHECK(split_csv(spectrum[2])[0] == "2");
    CHECK(split_csv(spectrum[1]).back() == hash);

    const auto coverage = lines_of(out_dir / "coverage.csv");
    REQUIRE(coverage.size() == 7);  // header + 2 deltas x 3 bands
    CHECK(coverage[0] == "m,delta,fraction,input_hash");
    double min_frac_04 = 1.0;
    for (std::size_t i = 1; i < coverage.size(); ++i) {
        const auto f = split_csv(coverage[i]);
        REQUIRE(f.size() == 4);
        if (std::stod(f[1]) < 0.5) min_frac_04 = std::min(min_frac_04, std::stod(f[2]));
    }
    CHECK(sum.min_coverage_fraction == min_frac_04);

    const auto classify = lines_of(out_dir / "classify.csv");
    REQUIRE(classify.size() == 33);  // header + 2 paths x 16 samples
    CHECK(classify[0] == "path,t,h_v,h_x,kind,input_hash");
    const std::set<std::string> kinds{"cusp", "oscillating", "jump_time", "undetermined",
                                      "inconsistent"};
    std::uint64_t labeled = 0;
    for (std::size_t i = 1; i < classify.size(); ++i) {
        const auto f = split_csv(classify[i]);
        REQUIRE(f.size() == 6);
        CHECK((f[0] == "path_0.txt" || f[0] == "path_1.txt"));
        CHECK(kinds.count(f[4]) == 1);
        if (f[4] == "cusp" || f[4] == "oscillating") ++labeled;
    }
    CHECK(sum.cusp + sum.oscillating >= labeled);  // inconsistent rows relabel the csv only

    const auto ibp = lines_of(out_dir / "ibp_audit.csv");
    REQUIRE(ibp.size() == 17);  // header + 2 paths x 8 draws
    CHECK(ibp[0] == "path,a,b,order,lhs,rhs,gap,input_hash");
    double max_gap = 0.0;
    for (std::size_t i = 1; i < ibp.size(); ++i) {
        const auto f = split_csv(ibp[i]);
        REQUIRE(f.size() == 8);
        CHECK(f[3] == "3");
        max_gap = std::max(max_gap, std::stod(f[6]));
    }
    CHECK(max_gap == sum.max_ibp_gap);  // shortest-round-trip decimals are lossless

    CHECK_THROWS_AS(run_analyze(LoadedPaths{}, out_dir, opt), std::invalid_argument);
    LoadedPaths mixed;
    mixed.records = {band_record(), band_record()};
    mixed.records[1].meta.nu = 0.25;
    CHECK_THROWS_AS(run_analyze(mixed, out_dir, opt), std::invalid_argument);
}
