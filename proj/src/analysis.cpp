#include "boltzfrac/analysis.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "boltzfrac/num_io.hpp"
#include "boltzfrac/path_store.hpp"
#include "boltzfrac/rng.hpp"
#include "boltzfrac/simulator.hpp"

namespace boltzfrac {

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (const unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t hash_file_bytes(const std::vector<std::filesystem::path>& files) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::vector<unsigned char> buf(1 << 16);
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        if (!in) throw StorageError("cannot open for hashing: " + f.string());
        while (in) {
            in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
            const auto got = static_cast<std::size_t>(in.gcount());
            h = fnv1a64(std::span<const unsigned char>(buf.data(), got), h);
        }
    }
    return h;
}

std::vector<std::filesystem::path> glob_paths(const std::string& pattern) {
    namespace fs = std::filesystem;
    std::vector<fs::path> out;
    const fs::path pat(pattern);
    const std::string base = pat.filename().string();
    if (base.find_first_of("*?[") == std::string::npos) {
        if (fs::exists(pat)) out.push_back(pat);
        return out;
    }
    fs::path dir = pat.parent_path();
    if (dir.empty()) dir = ".";
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (fnmatch(base.c_str(), name.c_str(), 0) == 0) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

LoadedPaths load_paths(const std::string& pattern) {
    LoadedPaths lp;
    lp.files = glob_paths(pattern);
    lp.records.reserve(lp.files.size());
    for (const auto& f : lp.files) lp.records.push_back(read_path(f));
    if (!lp.files.empty()) lp.input_hash = hash_file_bytes(lp.files);
    return lp;
}

bool uniform_nu(const std::vector<PathRecord>& records) {
    for (const auto& r : records)
        if (std::abs(r.meta.nu - records.front().meta.nu) > 1e-12) return false;
    return true;
}

std::string csv_field(std::string_view raw) {
    if (raw.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(raw);
    std::string out = "\"";
    for (const char c : raw) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

void write_csv(const std::filesystem::path& file, std::span<const std::string> header,
               const std::vector<std::vector<std::string>>& rows) {
    const std::filesystem::path tmp = file.string() + ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot open for writing: " + tmp.string());
    auto emit = [&out](std::span<const std::string> fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out << ',';
            out << csv_field(fields[i]);
        }
        out << '\n';
    };
    emit(header);
    for (const auto& row : rows) emit(row);
    out.flush();
    if (!out) {
        out.close();
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        throw StorageError("write failed: " + tmp.string());
    }
    out.close();
    std::error_code ec;
    std::filesystem::rename(tmp, file, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw StorageError("cannot move into place: " + file.string());
    }
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    const int workers =
        std::min<int>(effective_threads(threads), static_cast<int>(std::max<std::size_t>(n, 1)));
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::atomic<bool> failed{false};
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    failed.store(true);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed.load()) throw std::runtime_error("parallel_for: worker failed");
}

ScalingTable scaling_table(const std::vector<PathRecord>& paths, int m_lo, int m_hi) {
    ScalingTable tab;
    std::vector<double> xs, ys;
    for (int m = m_lo; m <= m_hi; ++m) {
        double mean = 0.0;
        for (const auto& rec : paths)
            mean += static_cast<double>(large_jump_count(rec, m, 0.0, rec.meta.horizon));
        mean /= static_cast<double>(std::max<std::size_t>(paths.size(), 1));
        tab.m.push_back(m);
        tab.count.push_back(mean);
        if (mean > 0.0) {
            xs.push_back(static_cast<double>(m));
            ys.push_back(std::log2(mean));
        }
    }
    if (xs.size() >= 2) {
        const auto fit = linear_fit(xs, ys);
        tab.slope = fit.slope;
        tab.intercept = fit.intercept;
    } else {
        tab.slope = std::numeric_limits<double>::quiet_NaN();
        tab.intercept = std::numeric_limits<double>::quiet_NaN();
    }
    return tab;
}

std::vector<CoverageRow> coverage_table(const std::vector<PathRecord>& paths,
                                        std::span<const double> deltas, int m_lo, int m_hi) {
    std::vector<CoverageRow> rows;
    for (const double delta : deltas) {
        for (int m = m_lo; m <= m_hi; ++m) {
            double frac = 0.0;
            for (const auto& rec : paths) {
                const auto u = covering_union(rec, delta, m, /*band_only=*/false);
                frac += u.total_length() / rec.meta.horizon;
            }
            frac /= static_cast<double>(std::max<std::size_t>(paths.size(), 1));
            rows.push_back({m, delta, frac});
        }
    }
    return rows;
}

std::vector<ClassifyRow> classify_table(const std::vector<PathRecord>& paths,
                                        std::span<const std::string> names,
                                        const ClassifyOptions& opt) {
    std::vector<std::vector<ClassifyRow>> per_path(paths.size());
    parallel_for(paths.size(), opt.threads, [&](std::size_t p) {
        const auto& rec = paths[p];
        const BandIndex idx(rec, opt.m_lo, opt.m_hi);
        const JumpTable table(rec, opt.m_lo, opt.m_hi, opt.epsilon);
        HolderBoundOptions hb;
        hb.m_lo = opt.m_lo;
        hb.m_hi = opt.m_hi;
        hb.epsilon = opt.epsilon;
        hb.osc_ratio = opt.osc_ratio;

        std::vector<double> probes;
        Rng rng(stream_seed(opt.seed, p));
        for (std::uint64_t k = 0; k < opt.samples_per_path; ++k)
            probes.push_back(rng.uniform() * rec.meta.horizon);
        if (opt.big_jumps_per_path > 0 && !rec.events.empty()) {
            std::vector<std::size_t> order(rec.events.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(), [&rec](std::size_t a, std::size_t b) {
                return norm2(rec.events[a].dv) > norm2(rec.events[b].dv);
            });
            const std::size_t take =
                std::min<std::size_t>(opt.big_jumps_per_path, order.size());
            for (std::size_t i = 0; i < take; ++i) probes.push_back(rec.events[order[i]].t);
        }

        for (const double t : probes) {
            ClassifyRow row;
            row.path = names.empty() ? std::to_string(p) : names[p];
            ExponentSample& s = row.sample;
            s.t = t;
            const auto dh = approximation_index(idx, t);
            if (dh) {
                s.delta_hat = *dh;
                s.h_v = *dh >= kDeltaCap ? 0.0
                        : *dh == 0.0     ? std::numeric_limits<double>::infinity()
                                         : 1.0 / *dh;
            } else {
                s.delta_hat = std::numeric_limits<double>::quiet_NaN();
                s.h_v = std::numeric_limits<double>::quiet_NaN();
            }
            hb.check_oscillation = true;
            s.h_x = table.bound_at(t, hb).bound;

            if (idx.is_event_time(t)) {
                s.kind = SingularityKind::jump_time;
            } else if (!dh) {
                s.kind = SingularityKind::undetermined;
            } else {
                s.kind = classify_singularity(s, opt.margin);
                if (s.kind == SingularityKind::oscillating) {
                    // Require the excess to clear even the geometric bound with
                    // the oscillation hypothesis waived; otherwise the flag just
                    // reflects the finite-band floor of the bound.
                    hb.check_oscillation = false;
                    const double floor_bound = table.bound_at(t, hb).bound;
                    const double margin_eff =
                        opt.margin + std::max(0.0, (floor_bound - 1.0) - s.h_v);
                    if (!(s.h_x > 1.0 + s.h_v + margin_eff))
                        s.kind = SingularityKind::undetermined;
                }
            }
            row.inconsistent = estimator_inconsistent(s, opt.margin);
            per_path[p].push_back(row);
        }
    });
    std::vector<ClassifyRow> rows;
    for (auto& v : per_path)
        for (auto& r : v) rows.push_back(std::move(r));
    return rows;
}

std::vector<IbpRow> ibp_table(const std::vector<PathRecord>& paths,
                              std::span<const std::string> names, int order,
                              std::uint64_t draws_per_path, std::uint64_t seed, double a_min,
                              double a_max) {
    std::vector<std::vector<IbpRow>> per_path(paths.size());
    parallel_for(paths.size(), 0, [&](std::size_t p) {
        const auto& rec = paths[p];
        Rng rng(stream_seed(seed, p));
        for (std::uint64_t k = 0; k < draws_per_path; ++k) {
            const double a =
                std::exp(std::log(a_min) + rng.uniform() * (std::log(a_max) - std::log(a_min)));
            const double b = rng.uniform() * std::max(rec.meta.horizon - a, 0.0);
            const auto res = ibp_check(rec, a, b, order);
            IbpRow row;
            row.path = names.empty() ? std::to_string(p) : names[p];
            row.a = a;
            row.b = b;
            row.order = order;
            int comp = 0;
            for (int c = 1; c < 3; ++c)
                if (std::abs(res.lhs[c]) > std::abs(res.lhs[comp])) comp = c;
            row.lhs = res.lhs[comp];
            row.rhs = res.rhs[comp];
            row.gap = res.gap;
            per_path[p].push_back(row);
        }
    });
    std::vector<IbpRow> rows;
    for (auto& v : per_path)
        for (auto& r : v) rows.push_back(std::move(r));
    return rows;
}

namespace {

std::string hash_string(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::string kind_string(SingularityKind k) {
    switch (k) {
        case SingularityKind::cusp: return "cusp";
        case SingularityKind::oscillating: return "oscillating";
        case SingularityKind::jump_time: return "jump_time";
        case SingularityKind::undetermined: return "undetermined";
    }
    return "undetermined";
}

}  // namespace

AnalyzeSummary run_analyze(const LoadedPaths& input, const std::filesystem::path& out_dir,
                           const AnalyzeOptions& opt) {
    const auto& recs = input.records;
    if (recs.empty()) throw std::invalid_argument("run_analyze: no paths");
    if (!uniform_nu(recs)) throw std::invalid_argument("run_analyze: paths mix different nu");
    std::filesystem::create_directories(out_dir);

    AnalyzeSummary sum;
    sum.n_paths = recs.size();
    for (const auto& r : recs) sum.n_events += r.events.size();
    const double nu = recs.front().meta.nu;
    sum.nu = nu;
    const std::string hash = hash_string(input.input_hash);

    std::vector<std::string> names;
    names.reserve(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i)
        names.push_back(i < input.files.size() ? input.files[i].filename().string()
                                               : std::to_string(i));

    int m_hi = opt.m_hi;
    if (m_hi <= 0) {
        m_hi = 0;
        for (const auto& r : recs)
            m_hi = m_hi == 0 ? r.meta.resolved_m_max : std::min(m_hi, r.meta.resolved_m_max);
        if (m_hi < opt.m_lo + 2) m_hi = opt.m_lo + 8;
    }

    // scaling.csv: growth of the large-jump counters across bands
    const auto scal = scaling_table(recs, opt.m_lo, m_hi);
    sum.nu_hat = scal.slope;
    {
        const std::vector<std::string> header{"m", "count", "fit", "input_hash"};
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < scal.m.size(); ++i)
            rows.push_back({std::to_string(scal.m[i]), format_double(scal.count[i]),
                            format_double(scal.slope), hash});
        write_csv(out_dir / "scaling.csv", header, rows);
    }

    // spectrum.csv: velocity multifractal spectrum on the h grid
    std::vector<double> h_grid = opt.h_grid;
    if (h_grid.empty())
        for (int k = 1; k <= 8; ++k) h_grid.push_back(0.25 * k / (2.0 * nu));
    const int spec_lo = std::max(opt.m_lo, m_hi - 4);
    const auto est = empirical_spectrum(recs, h_grid, spec_lo, m_hi, opt.tolerance,
                                        SpectrumKind::velocity);
    {
        const std::vector<std::string> header{"h", "d_hat", "d_theory", "n_samples",
                                              "input_hash"};
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
        write_csv(out_dir / "spectrum.csv", header, rows);
    }

    // coverage.csv: Lebesgue fraction of the covering unions
    {
        const auto rows_cov =
            coverage_table(recs, opt.coverage_deltas, opt.coverage_m_lo, opt.coverage_m_hi);
        const std::vector<std::string> header{"m", "delta", "fraction", "input_hash"};
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : rows_cov) {
            rows.push_back({std::to_string(r.m), format_double(r.delta),
                            format_double(r.fraction), hash});
            if (r.delta < nu) sum.min_coverage_fraction = std::min(sum.min_coverage_fraction, r.fraction);
        }
        write_csv(out_dir / "coverage.csv", header, rows);
    }

    // classify.csv: exponent samples and cusp/oscillating labels
    {
        ClassifyOptions copt = opt.classify;
        copt.m_lo = opt.m_lo;
        copt.m_hi = m_hi;
        copt.threads = opt.threads;
        const auto rows_cls = classify_table(recs, names, copt);
        const std::vector<std::string> header{"path", "t", "h_v", "h_x", "kind", "input_hash"};
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : rows_cls) {
            rows.push_back({r.path, format_double(r.sample.t), format_double(r.sample.h_v),
                            format_double(r.sample.h_x),
                            r.inconsistent ? "inconsistent" : kind_string(r.sample.kind), hash});
            switch (r.sample.kind) {
                case SingularityKind::cusp: ++sum.cusp; break;
                case SingularityKind::oscillating: ++sum.oscillating; break;
                case SingularityKind::jump_time: ++sum.jump_time; break;
                case SingularityKind::undetermined: ++sum.undetermined; break;
            }
            if (r.inconsistent) ++sum.inconsistent;
            if (std::isfinite(r.sample.h_x))
                sum.max_position_bound = std::max(sum.max_position_bound, r.sample.h_x);
        }
        write_csv(out_dir / "classify.csv", header, rows);
    }

    // ibp_audit.csv: the derivative identity on random windows
    {
        const auto rows_ibp =
            ibp_table(recs, names, opt.ibp_order, opt.ibp_draws, 0x8f1bbcdc4d9ULL);
        const std::vector<std::string> header{"path", "a",   "b",   "order",
                                              "lhs",  "rhs", "gap", "input_hash"};
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : rows_ibp) {
            rows.push_back({r.path, format_double(r.a), format_double(r.b),
                            std::to_string(r.order), format_double(r.lhs), format_double(r.rhs),
                            format_double(r.gap), hash});
            sum.max_ibp_gap = std::max(sum.max_ibp_gap, r.gap);
        }
        write_csv(out_dir / "ibp_audit.csv", header, rows);
    }

    return sum;
}

}  // namespace boltzfrac
