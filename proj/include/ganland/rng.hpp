#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ganland {

/// splitmix64 finalizer; used for seeding and for deriving stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Independent seed domains. A stream for (seed, domain, index) never
/// overlaps with another domain's stream for the same seed.
enum class SeedDomain : std::uint64_t {
  kInit = 1,
  kMixture = 2,
  kLatent = 3,
  kProbe = 4,
  kInterp = 5,
  kEval = 6,
  kTrainData = 7,
  kExperiment = 8,
};

constexpr std::uint64_t derive_seed(std::uint64_t seed, SeedDomain domain, std::uint64_t index = 0) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s);
  s = h ^ (static_cast<std::uint64_t>(domain) * 0xD1B54A32D192ED03ULL);
  h = splitmix64(s);
  s = h ^ (index * 0x8CB92BA72F3D8DD7ULL);
  return splitmix64(s);
}

/// xoshiro256** seeded from splitmix64(seed).
///
/// uniform() = (next() >> 11) * 2^-53, in [0, 1).
/// normal() uses Box-Muller on two uniforms u1, u2 with r = sqrt(-2 ln(1 - u1)):
/// it returns r cos(2 pi u2) and caches r sin(2 pi u2) for the following call.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4]{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ganland
