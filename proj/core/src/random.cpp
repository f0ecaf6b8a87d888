#include "pcbo/random.hpp"

namespace pcbo {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t SeedSequence::derive(StreamPurpose purpose, std::uint64_t iteration,
                                   std::uint64_t slot) const noexcept {
  std::uint64_t h = mix64(master_);
  h = mix64(h ^ static_cast<std::uint64_t>(purpose));
  h = mix64(h ^ iteration);
  h = mix64(h ^ slot);
  return h;
}

}  // namespace pcbo
