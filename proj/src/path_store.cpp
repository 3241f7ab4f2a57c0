#include "boltzfrac/path_store.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "boltzfrac/num_io.hpp"

namespace boltzfrac {

namespace {

constexpr std::string_view kHeader = "#boltzpath 1";

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

[[noreturn]] void fail(const std::filesystem::path& src, std::size_t line, const std::string& what) {
    throw ParseError(src.string() + ":" + std::to_string(line) + ": " + what);
}

double need_double(const std::filesystem::path& src, std::size_t line, std::string_view tok) {
    double v;
    if (!parse_double(tok, v) || !std::isfinite(v))
        fail(src, line, "malformed number '" + std::string(tok) + "'");
    return v;
}

std::uint64_t need_u64(const std::filesystem::path& src, std::size_t line, std::string_view tok) {
    std::uint64_t v;
    if (!parse_u64(tok, v)) fail(src, line, "malformed integer '" + std::string(tok) + "'");
    return v;
}

}  // namespace

void write_path(const PathRecord& rec, const std::filesystem::path& destination) {
    const std::filesystem::path tmp = destination.string() + ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot open for writing: " + tmp.string());

    const auto& m = rec.meta;
    out << kHeader << '\n';
    out << "gamma=" << format_double(m.gamma) << '\n';
    out << "nu=" << format_double(m.nu) << '\n';
    out << "theta_min=" << format_double(m.theta_min) << '\n';
    if (m.truncation_B) out << "truncation_B=" << format_double(*m.truncation_B) << '\n';
    out << "n_particles=" << m.n_particles << '\n';
    out << "horizon=" << format_double(m.horizon) << '\n';
    out << "seed=" << m.seed << '\n';
    out << "replicas=" << m.replicas << '\n';
    out << "replica_id=" << m.replica_id << '\n';
    out << "particle_id=" << m.particle_id << '\n';
    out << "n_tracked=" << m.n_tracked << '\n';
    out << "f0=" << m.f0 << '\n';
    for (const auto& [k, v] : m.f0_params) out << k << '=' << v << '\n';
    out << "resolved_m_max=" << m.resolved_m_max << '\n';
    for (const auto& [k, v] : m.extras) out << k << '=' << v << '\n';
    out << "V0 " << format_double(rec.v0.x) << ' ' << format_double(rec.v0.y) << ' '
        << format_double(rec.v0.z) << '\n';
    for (const auto& e : rec.events) {
        out << "E " << format_double(e.t) << ' ' << format_double(e.dv.x) << ' '
            << format_double(e.dv.y) << ' ' << format_double(e.dv.z) << ' '
            << format_double(e.theta) << ' ' << format_double(e.kappa) << '\n';
    }
    out.flush();
    if (!out) {
        out.close();
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        throw StorageError("write failed: " + tmp.string());
    }
    out.close();
    std::error_code ec;
    std::filesystem::rename(tmp, destination, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw StorageError("cannot move into place: " + destination.string());
    }
}

PathRecord read_path(const std::filesystem::path& source) {
    std::ifstream in(source, std::ios::binary);
    if (!in) throw ParseError("cannot open: " + source.string());

    PathRecord rec;
    std::string line;
    std::size_t lineno = 0;

    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };

    if (!next_line()) fail(source, 1, "empty file");
    if (line != kHeader) {
        if (line.rfind("#boltzpath ", 0) == 0)
            fail(source, lineno, "unsupported format version '" + line + "'");
        fail(source, lineno, "missing #boltzpath header");
    }

    bool saw_v0 = false;
    bool in_events = false;
    double prev_t = -std::numeric_limits<double>::infinity();
    std::vector<std::string> unknown;

    while (next_line()) {
        if (line.empty()) fail(source, lineno, "blank line not allowed");
        if (line.rfind("E ", 0) == 0) {
            if (!saw_v0) fail(source, lineno, "event before V0 line");
            in_events = true;
            const auto toks = split_ws(line);
            if (toks.size() != 7) fail(source, lineno, "event line needs 6 fields after E");
            JumpEvent e;
            e.t = need_double(source, lineno, toks[1]);
            e.dv = {need_double(source, lineno, toks[2]), need_double(source, lineno, toks[3]),
                    need_double(source, lineno, toks[4])};
            e.theta = need_double(source, lineno, toks[5]);
            e.kappa = need_double(source, lineno, toks[6]);
            if (!(e.t > prev_t)) fail(source, lineno, "event times not strictly increasing");
            prev_t = e.t;
            rec.events.push_back(e);
            continue;
        }
        if (in_events) fail(source, lineno, "non-event line after events began");
        if (line.rfind("V0 ", 0) == 0 || line == "V0") {
            if (saw_v0) fail(source, lineno, "duplicate V0 line");
            const auto toks = split_ws(line);
            if (toks.size() != 4) fail(source, lineno, "V0 line needs 3 components");
            rec.v0 = {need_double(source, lineno, toks[1]), need_double(source, lineno, toks[2]),
                      need_double(source, lineno, toks[3])};
            saw_v0 = true;
            continue;
        }
        if (saw_v0) fail(source, lineno, "metadata after V0 line");
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0) fail(source, lineno, "expected key=value metadata");
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        auto& m = rec.meta;
        if (key == "gamma") m.gamma = need_double(source, lineno, val);
        else if (key == "nu") m.nu = need_double(source, lineno, val);
        else if (key == "theta_min") m.theta_min = need_double(source, lineno, val);
        else if (key == "truncation_B") m.truncation_B = need_double(source, lineno, val);
        else if (key == "n_particles") m.n_particles = need_u64(source, lineno, val);
        else if (key == "horizon") m.horizon = need_double(source, lineno, val);
        else if (key == "seed") m.seed = need_u64(source, lineno, val);
        else if (key == "replicas") m.replicas = need_u64(source, lineno, val);
        else if (key == "replica_id") m.replica_id = need_u64(source, lineno, val);
        else if (key == "particle_id") m.particle_id = need_u64(source, lineno, val);
        else if (key == "n_tracked") m.n_tracked = need_u64(source, lineno, val);
        else if (key == "f0") m.f0 = val;
        else if (key == "resolved_m_max")
            m.resolved_m_max = static_cast<int>(need_double(source, lineno, val));
        else if (key.rfind("f0_", 0) == 0) m.f0_params[key] = val;
        else {
            m.extras[key] = val;
            unknown.push_back(key);
        }
    }
    if (in.bad()) throw ParseError("read failed: " + source.string());
    if (!saw_v0) fail(source, lineno + 1, "missing V0 line");

    for (const auto& k : unknown)
        std::cerr << "warning: " << source.string() << ": unknown metadata key '" << k
                  << "' (preserved)\n";
    return rec;
}

}  // namespace boltzfrac
