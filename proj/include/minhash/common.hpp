#pragma once

#include <bit>
#include <stdexcept>

namespace minhash {

inline constexpr const char* kVersion = "0.1.0";

static_assert(std::endian::native == std::endian::little,
              "binary container format is little-endian");

// Error taxonomy mirrored by the CLI exit codes: usage 64, format 65,
// data/variant incompatibility 2.
struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct incompat_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace minhash
