#pragma once

#include <cstdint>
#include <random>

namespace pcbo {

/// A seeded stream of uniform and standard-normal variates.
///
/// Streams are cheap to construct and are never shared between tasks; every
/// consumer derives its own from a SeedSequence.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return unit_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(engine_); }
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// What a substream is used for; part of the substream key.
enum class StreamPurpose : std::uint64_t {
  initialization = 1,
  proposal = 2,
  hyperparameters = 3,
  outer_hyperparameters = 4,
  objective = 5,
};

/// Derives independent substreams from one master seed.
///
/// The key (purpose, iteration, slot) fully determines the substream, so any
/// single proposal can be replayed without running the campaign up to it.
class SeedSequence {
 public:
  explicit SeedSequence(std::uint64_t master) : master_(master) {}

  std::uint64_t master() const noexcept { return master_; }
  std::uint64_t derive(StreamPurpose purpose, std::uint64_t iteration,
                       std::uint64_t slot) const noexcept;
  RandomStream stream(StreamPurpose purpose, std::uint64_t iteration,
                      std::uint64_t slot) const {
    return RandomStream(derive(purpose, iteration, slot));
  }

 private:
  std::uint64_t master_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace pcbo
