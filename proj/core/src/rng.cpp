#include "s5id/rng.hpp"

#include <cmath>

namespace s5id::rng {

std::uint64_t mix(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = mix(base);
  for (const auto k : keys) h = mix(h ^ mix(k + 0x632BE59BD9B4E019ULL));
  return h;
}

WhiteNoise::WhiteNoise(std::uint64_t seed, Stream stream, NoiseDistribution dist)
    : engine_(derive_seed(seed, {static_cast<std::uint64_t>(stream)})),
      dist_(dist),
      uniform_(-std::sqrt(3.0), std::sqrt(3.0)) {}

double WhiteNoise::next() {
  return dist_ == NoiseDistribution::Gaussian ? normal_(engine_) : uniform_(engine_);
}

Matrix WhiteNoise::matrix(Index rows, Index cols) {
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) out(i, j) = next();
  }
  return out;
}

}  // namespace s5id::rng
