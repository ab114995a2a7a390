#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gmc {

/// Malformed user input: config files, CSV schemas, incompatible shapes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numeric failure at runtime: non-finite values, divergence, singular systems.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FNV-1a, used for provenance digests of parameter samples and headers.
inline std::uint64_t fnv1a(const void* data, std::size_t bytes,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a_u64(std::uint64_t v, std::uint64_t h) {
  return fnv1a(&v, sizeof(v), h);
}

}  // namespace gmc
