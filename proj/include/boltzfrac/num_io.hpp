#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

namespace boltzfrac {

// Shortest decimal that round-trips to the same double (at most 17 significant
// digits). Non-finite values format as inf/-inf/nan.
inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double& out) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    const auto res = std::from_chars(b, e, out);
    return res.ec == std::errc{} && res.ptr == e;
}

inline bool parse_u64(std::string_view s, std::uint64_t& out) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    const auto res = std::from_chars(b, e, out);
    return res.ec == std::errc{} && res.ptr == e;
}

}  // namespace boltzfrac
