#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "boltzfrac/path_store.hpp"
#include "boltzfrac/rng.hpp"

using namespace boltzfrac;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() /
                     ("boltzpath_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

fs::path temp_file(const std::string& name) { return temp_dir() / name; }

fs::path write_text(const std::string& name, const std::string& text) {
    const fs::path p = temp_file(name);
    std::ofstream out(p, std::ios::binary);
    out << text;
    return p;
}

// A parse failure whose message carries "file:line:" context.
std::string parse_error(const fs::path& p) {
    try {
        read_path(p);
    } catch (const ParseError& e) {
        return e.what();
    }
    return "";
}

double interesting_double(Rng& rng) {
    const double u = rng.uniform(-1.0, 1.0);
    switch (rng.below(4)) {
        case 0: return u;
        case 1: return u * 1e-300;
        case 2: return u * 1e300;
        default: return std::ldexp(u, static_cast<int>(rng.below(600)) - 300);
    }
}

PathRecord random_record(Rng& rng) {
    PathRecord rec;
    rec.meta.gamma = rng.uniform(-0.9, 0.9);
    rec.meta.nu = rng.uniform(0.05, 0.95);
    rec.meta.theta_min = std::ldexp(1.0, -static_cast<int>(rng.below(20)));
    if (rng.uniform() < 0.5) rec.meta.truncation_B = rng.uniform(1.0, 100.0);
    rec.meta.n_particles = 2 + rng.below(1 << 20);
    rec.meta.horizon = rng.uniform(0.5, 4.0);
    rec.meta.seed = rng.below(UINT64_MAX - 1);
    rec.meta.replicas = 1 + rng.below(100);
    rec.meta.replica_id = rng.below(rec.meta.replicas);
    rec.meta.particle_id = rng.below(64);
    rec.meta.n_tracked = 1 + rng.below(64);
    rec.meta.f0 = rng.uniform() < 0.5 ? "maxwellian" : "two_point";
    rec.meta.f0_params["f0_mean"] = "0 0 0";
    rec.meta.f0_params["f0_temperature"] = "1.5";
    if (rng.uniform() < 0.3) rec.meta.extras["lineage"] = "abc/def";
    rec.meta.resolved_m_max = static_cast<int>(rng.below(40));
    rec.v0 = {interesting_double(rng), interesting_double(rng), interesting_double(rng)};
    const std::size_t n = rng.below(30);
    double t = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        t += rng.exponential(50.0) + 1e-12;
        rec.events.push_back({t,
                              {interesting_double(rng), interesting_double(rng),
                               interesting_double(rng)},
                              rng.uniform(1e-6, 1.5),
                              rng.uniform(1e-6, 6.0)});
    }
    return rec;
}

bool meta_equal(const PathMeta& a, const PathMeta& b) {
    return a.gamma == b.gamma && a.nu == b.nu && a.theta_min == b.theta_min &&
           a.truncation_B == b.truncation_B && a.n_particles == b.n_particles &&
           a.horizon == b.horizon && a.seed == b.seed && a.replicas == b.replicas &&
           a.replica_id == b.replica_id && a.particle_id == b.particle_id &&
           a.n_tracked == b.n_tracked && a.f0 == b.f0 && a.f0_params == b.f0_params &&
           a.resolved_m_max == b.resolved_m_max && a.extras == b.extras;
}

bool record_equal(const PathRecord& a, const PathRecord& b) {
    if (!meta_equal(a.meta, b.meta) || !(a.v0 == b.v0) || a.events.size() != b.events.size())
        return false;
    for (std::size_t k = 0; k < a.events.size(); ++k)
        if (a.events[k].t != b.events[k].t || !(a.events[k].dv == b.events[k].dv) ||
            a.events[k].theta != b.events[k].theta || a.events[k].kappa != b.events[k].kappa)
            return false;
    return true;
}

}  // namespace

TEST_CASE("round-trip is exact bit-for-bit over randomized records") {
    Rng rng(0xfeedULL);
    const fs::path p = temp_file("roundtrip.path");
    for (int i = 0; i < 300; ++i) {
        const PathRecord rec = random_record(rng);
        write_path(rec, p);
        const PathRecord back = read_path(p);
        REQUIRE(record_equal(rec, back));
    }
}

TEST_CASE("writes are atomic and byte-stable") {
    Rng rng(7);
    const PathRecord rec = random_record(rng);
    const fs::path p = temp_file("stable.path");
    write_path(rec, p);
    CHECK(fs::exists(p));
    CHECK(!fs::exists(fs::path(p.string() + ".tmp")));

    std::ifstream a(p, std::ios::binary);
    std::string first((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    write_path(rec, p);
    std::ifstream b(p, std::ios::binary);
    std::string second((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(first == second);
    CHECK(first.rfind("#boltzpath 1\n", 0) == 0);

    CHECK_THROWS_AS(write_path(rec, "/nonexistent_dir_zzz/x.path"), StorageError);
}

TEST_CASE("optional truncation round-trips in both states") {
    Rng rng(9);
    PathRecord rec = random_record(rng);
    const fs::path p = temp_file("trunc.path");

    rec.meta.truncation_B.reset();
    write_path(rec, p);
    CHECK(!read_path(p).meta.truncation_B.has_value());

    rec.meta.truncation_B = 8.0;
    write_path(rec, p);
    const auto back = read_path(p);
    REQUIRE(back.meta.truncation_B.has_value());
    CHECK(*back.meta.truncation_B == 8.0);
}

TEST_CASE("a large event stream survives the round trip") {
    PathRecord rec;
    rec.v0 = {1.0, 0.0, 0.0};
    Rng rng(13);
    double t = 0.0;
    for (int k = 0; k < 10000; ++k) {
        t += rng.exponential(1e4);
        rec.events.push_back({t, rng.normal3(), 0.3, 1.1});
    }
    const fs::path p = temp_file("big.path");
    write_path(rec, p);
    const auto back = read_path(p);
    REQUIRE(back.events.size() == rec.events.size());
    CHECK(record_equal(rec, back));
}

TEST_CASE("unknown metadata keys are preserved verbatim") {
    const fs::path p = write_text("unknown.path",
                                  "#boltzpath 1\n"
                                  "gamma=0.25\n"
                                  "mystery=forty two\n"
                                  "f0_shape=ring\n"
                                  "V0 1 0 0\n"
                                  "E 0.5 0 1 0 0.3 0.6\n");
    const auto rec = read_path(p);
    CHECK(rec.meta.gamma == 0.25);
    REQUIRE(rec.meta.extras.count("mystery") == 1);
    CHECK(rec.meta.extras.at("mystery") == "forty two");
    CHECK(rec.meta.f0_params.at("f0_shape") == "ring");

    // Preserved fields are written back out and survive another cycle.
    const fs::path q = temp_file("unknown2.path");
    write_path(rec, q);
    const auto again = read_path(q);
    CHECK(again.meta.extras.at("mystery") == "forty two");
    CHECK(again.meta.f0_params.at("f0_shape") == "ring");
}

TEST_CASE("carriage returns are stripped") {
    const fs::path p = write_text("crlf.path",
                                  "#boltzpath 1\r\n"
                                  "gamma=0.5\r\n"
                                  "V0 1 2 3\r\n"
                                  "E 0.25 1 0 0 0.4 0.9\r\n");
    const auto rec = read_path(p);
    CHECK(rec.meta.gamma == 0.5);
    CHECK(rec.v0 == Vec3{1.0, 2.0, 3.0});
    REQUIRE(rec.events.size() == 1);
    CHECK(rec.events[0].t == 0.25);
}

TEST_CASE("malformed files fail with file:line context") {
    auto has = [](const std::string& msg, const std::string& part) {
        return msg.find(part) != std::string::npos;
    };

    CHECK(has(parse_error(write_text("e1.path", "")), ":1: empty file"));
    CHECK(has(parse_error(write_text("e2.path", "#boltzpath 2\nV0 0 0 0\n")),
              "unsupported format version"));
    CHECK(has(parse_error(write_text("e3.path", "gamma=1\nV0 0 0 0\n")),
              "missing #boltzpath header"));
    CHECK(has(parse_error(write_text("e4.path", "#boltzpath 1\n\nV0 0 0 0\n")),
              ":2: blank line"));
    CHECK(has(parse_error(write_text("e5.path", "#boltzpath 1\nE 0.5 1 0 0 0.3 0.6\nV0 0 0 0\n")),
              "event before V0"));
    CHECK(has(parse_error(write_text("e6.path", "#boltzpath 1\nV0 0 0 0\ngamma=1\n")),
              "metadata after V0"));
    CHECK(has(parse_error(write_text("e7.path", "#boltzpath 1\nV0 0 0 0\nV0 1 1 1\n")),
              "duplicate V0"));
    CHECK(has(parse_error(write_text("e8.path", "#boltzpath 1\nV0 0 0\n")), "3 components"));
    CHECK(has(parse_error(write_text("e9.path", "#boltzpath 1\nV0 0 0 0\nE 0.5 1 0 0 0.3\n")),
              "6 fields"));
    CHECK(has(parse_error(write_text("e10.path",
                                     "#boltzpath 1\nV0 0 0 0\n"
                                     "E 0.5 1 0 0 0.3 0.6\nE 0.5 1 0 0 0.3 0.6\n")),
              "strictly increasing"));
    CHECK(has(parse_error(write_text("e11.path",
                                     "#boltzpath 1\nV0 0 0 0\n"
                                     "E 0.7 1 0 0 0.3 0.6\nE 0.5 1 0 0 0.3 0.6\n")),
              ":4: event times not strictly increasing"));
    CHECK(has(parse_error(write_text("e12.path", "#boltzpath 1\nV0 a b c\n")),
              "malformed number"));
    CHECK(has(parse_error(write_text("e13.path", "#boltzpath 1\nV0 0 0 0\nE nan 1 0 0 0.3 0.6\n")),
              "malformed number"));
    CHECK(has(parse_error(write_text("e14.path", "#boltzpath 1\njust words\nV0 0 0 0\n")),
              "key=value"));
    CHECK(has(parse_error(write_text("e15.path", "#boltzpath 1\ngamma=0.5\n")), "missing V0"));
    CHECK(has(parse_error(write_text("e16.path", "#boltzpath 1\nseed=-3\nV0 0 0 0\n")),
              "malformed integer"));
    CHECK(parse_error("/nonexistent/zzz.path").find("cannot open") != std::string::npos);
}
