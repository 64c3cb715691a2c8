#pragma once

#include "s5id/linalg.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>

namespace s5id {

enum class NoiseDistribution {
  Gaussian,
  /// Uniform on [-sqrt(3), sqrt(3)] (unit variance), for fourth-moment checks.
  Uniform,
};

}  // namespace s5id

namespace s5id::rng {

/// splitmix64 finalizer.
std::uint64_t mix(std::uint64_t x) noexcept;

/// Order-sensitive combination of a base seed with integer keys.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) noexcept;

/// Independent substreams drawn from one user seed.
enum class Stream : std::uint64_t {
  InputInnovations = 0x11,
  InputInitial = 0x12,
  OutputInnovations = 0x21,
  StateInitial = 0x22,
};

/// Zero-mean, unit-variance iid draws. Deterministic in (seed, stream).
class WhiteNoise {
 public:
  WhiteNoise(std::uint64_t seed, Stream stream, NoiseDistribution dist = NoiseDistribution::Gaussian);

  double next();
  /// rows x cols matrix filled column by column.
  Matrix matrix(Index rows, Index cols);

 private:
  std::mt19937_64 engine_;
  NoiseDistribution dist_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_;
};

}  // namespace s5id::rng
