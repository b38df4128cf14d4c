#pragma once

#include "modeclust/types.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>

namespace modeclust {

/// Stage tags mixed into substream derivation so that independent parts of an
/// experiment never share random numbers.
enum class Stage : std::uint64_t {
  kSample = 1,
  kMixture = 2,
  kMonteCarlo = 3,
  kProbe = 4,
  kCheck = 5,
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// A seeded random stream. Not thread-safe; every worker owns its own stream.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  /// Counter-based substream: the seed is a hash of (master, path...), so the
  /// stream for one replication does not depend on which others were drawn.
  static RngStream derive(std::uint64_t master, std::initializer_list<std::uint64_t> path);
  static RngStream derive(std::uint64_t master, Stage stage,
                          std::initializer_list<std::uint64_t> path = {});

  std::uint64_t seed() const noexcept { return seed_; }

  double uniform();  // [0, 1)
  double normal();
  Vector normal_vector(int d);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace modeclust
