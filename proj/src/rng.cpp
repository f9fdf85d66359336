#include "ssp/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ssp {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt),
                    static_cast<std::uint32_t>(salt >> 32)};
  return std::mt19937_64(seq);
}

std::uint64_t name_salt(std::string_view name) {
  return fnv1a(std::as_bytes(std::span(name.data(), name.size())));
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed) : engine_(seeded_engine(seed, 0)) {}

RandomStream::RandomStream(std::uint64_t seed, std::string_view stream_name)
    : engine_(seeded_engine(seed, name_salt(stream_name))) {}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t RandomStream::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("RandomStream::index: empty range");
  auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return k < n ? k : n - 1;
}

double RandomStream::exponential() { return -std::log1p(-uniform()); }

std::size_t RandomStream::categorical(std::span<const double> weights) {
  const double u = uniform();
  double cumulative = 0.0;
  std::size_t last_positive = weights.size();
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    last_positive = k;
    cumulative += weights[k];
    if (u < cumulative) return k;
  }
  if (last_positive == weights.size())
    throw std::invalid_argument("categorical: no positive weight");
  return last_positive;
}

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ssp
