#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

namespace advtext {

/// splitmix64 stream. Identical seeds give identical streams on every
/// platform; every randomized operation in the library draws from this.
class SeededRng {
 public:
  explicit constexpr SeededRng(std::uint64_t seed = 0) noexcept
      : seed_(seed), state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform draw in [0, bound) by modulo reduction. bound must be > 0.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    return next() % bound;
  }

  /// Independent stream keyed by (seed, index). Does not touch this
  /// generator's state, so per-step streams are stable no matter how many
  /// draws happened before.
  constexpr SeededRng fork(std::uint64_t index) const noexcept {
    SeededRng mixer(seed_ ^ (index * 0xD1B54A32D192ED03ULL));
    return SeededRng(mixer.next());
  }

  constexpr std::uint64_t seed() const noexcept { return seed_; }
  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

/// Fisher-Yates permutation of [0, n): j = next() mod (i+1), swapping
/// downward from i = n-1.
inline std::vector<std::size_t> shuffle(std::size_t n, SeededRng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i-- > 1;) {
    const auto j = static_cast<std::size_t>(rng.next() % (i + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

}  // namespace advtext
