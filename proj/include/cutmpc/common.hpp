#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cutmpc {

using Vec2 = Eigen::Vector2d;

// Axis indices used for every 2-vector in the project: Y is the sawing axis,
// Z the cutting (vertical) axis.
inline constexpr int kY = 0;
inline constexpr int kZ = 1;

/// Bad user-facing configuration (unknown material, invalid gains, bad config key).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or insufficient data (short logs, missing files, schema mismatch).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical integrity violation (NaN state, diverging training loss).
struct NumericFault : std::runtime_error {
  explicit NumericFault(const std::string& what) : std::runtime_error(what) {}
};

/// Deterministic float formatting used for every file we emit.
std::string fmt_g(double v);

/// splitmix64 step; used to derive independent sub-seeds from one global seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// FNV-1a over raw bytes; used for model-file checksums and report hashing.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull);

inline bool finite2(const Vec2& v) { return std::isfinite(v[0]) && std::isfinite(v[1]); }

}  // namespace cutmpc
