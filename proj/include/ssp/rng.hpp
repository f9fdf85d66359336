#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace ssp {

/// A seeded pseudo-random stream. Draws are defined bit-for-bit in terms of
/// std::mt19937_64 and std::seed_seq, so results do not depend on the
/// standard library's distribution implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);
  RandomStream(std::uint64_t seed, std::string_view stream_name);

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform integer in [0, n). Requires n > 0.
  std::size_t index(std::size_t n);
  /// Exponential(1) variate.
  double exponential();
  /// Inverse-CDF draw over ascending index. Weights must sum to ~1; any
  /// rounding deficit is absorbed by the last positive entry.
  std::size_t categorical(std::span<const double> weights);

  std::uint64_t next_raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Named substreams derived from one master seed, so algorithm variants
/// can share an environment stream while drawing actions independently.
struct RandomStreams {
  explicit RandomStreams(std::uint64_t master_seed)
      : environment(master_seed, "environment"),
        action(master_seed, "action"),
        component(master_seed, "component"),
        evaluation(master_seed, "evaluation") {}

  RandomStream environment;
  RandomStream action;
  RandomStream component;
  RandomStream evaluation;
};

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(std::span<const std::byte> bytes,
                    std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace ssp
