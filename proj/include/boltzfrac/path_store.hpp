#pragma once

#include <filesystem>
#include <stdexcept>

#include "boltzfrac/path_record.hpp"

namespace boltzfrac {

// I/O failure while persisting; any partial output file has been removed.
struct StorageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed path file; the message names the offending line number.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Line-oriented text format, one file per path:
//   #boltzpath 1
//   key=value          (metadata, fixed order; f0_* keys carry sampler params)
//   V0 <x> <y> <z>
//   E <t> <dvx> <dvy> <dvz> <theta> <kappa>   (one per event, time-ordered)
// All reals are shortest-round-trip decimals, so write/read is lossless.
void write_path(const PathRecord& rec, const std::filesystem::path& destination);

// Exact inverse of write_path. Unknown metadata keys are preserved in
// meta.extras and reported on stderr. Version mismatch, malformed numerics,
// and out-of-order events raise ParseError naming the line.
PathRecord read_path(const std::filesystem::path& source);

}  // namespace boltzfrac
