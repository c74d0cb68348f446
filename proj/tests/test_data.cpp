#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "ganland/data.hpp"
#include "ganland/rng.hpp"

using namespace ganland;

namespace {

// Reference xoshiro256** written out from the published algorithm.
struct RefXoshiro {
  std::uint64_t s[4];
  explicit RefXoshiro(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s) {
      x += 0x9E3779B97F4A7C15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      w = z ^ (z >> 31);
    }
  }
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t next() {
    const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }
};

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("rng stream matches the reference generator") {
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xDEADBEEFULL}) {
    Rng rng(seed);
    RefXoshiro ref(seed);
    for (int i = 0; i < 100; ++i) CHECK(rng.next() == ref.next());
  }
  Rng a(5);
  RefXoshiro b(5);
  for (int i = 0; i < 10; ++i) CHECK(a.uniform() == static_cast<double>(b.next() >> 11) * 0x1.0p-53);
}

TEST_CASE("box-muller pairs") {
  Rng rng(9);
  RefXoshiro ref(9);
  for (int i = 0; i < 20; ++i) {
    const double z0 = rng.normal();
    const double z1 = rng.normal();
    const double u1 = 1.0 - static_cast<double>(ref.next() >> 11) * 0x1.0p-53;
    const double u2 = static_cast<double>(ref.next() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    CHECK(z0 == r * std::cos(2.0 * std::numbers::pi * u2));
    CHECK(z1 == r * std::sin(2.0 * std::numbers::pi * u2));
  }
}

TEST_CASE("derived seeds separate domains and indices") {
  std::vector<std::uint64_t> seen;
  for (auto d : {SeedDomain::kInit, SeedDomain::kMixture, SeedDomain::kLatent, SeedDomain::kProbe,
                 SeedDomain::kEval, SeedDomain::kTrainData}) {
    for (std::uint64_t i = 0; i < 4; ++i) seen.push_back(derive_seed(42, d, i));
  }
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  CHECK(derive_seed(42, SeedDomain::kEval, 1) == derive_seed(42, SeedDomain::kEval, 1));
}

TEST_CASE("degenerate single mode") {
  const auto spec = GaussianMixtureSpec::grid(1, 9.0, 1e-12);
  const SampleSet s = sample_mixture(spec, 3, 1);
  CHECK(s.size() == 3);
  CHECK(s.origin == Origin::kReal);
  for (double v : s.points.data()) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("grid layout") {
  const auto spec = GaussianMixtureSpec::grid(9, 9.0);
  CHECK(spec.min_center_distance() == doctest::Approx(9.0).epsilon(1e-15));
  CHECK(spec.component_std == doctest::Approx(0.45));
  double cx = 0.0, cy = 0.0;
  for (std::size_t m = 0; m < 9; ++m) cx += spec.centers(m, 0), cy += spec.centers(m, 1);
  CHECK(std::abs(cx) < 1e-12);
  CHECK(std::abs(cy) < 1e-12);
  CHECK_NOTHROW(spec.validate());
  CHECK_THROWS_AS(GaussianMixtureSpec::grid(8, 9.0), ContractError);
  CHECK_THROWS_AS(GaussianMixtureSpec::grid(4, 0.0), ContractError);

  auto bad = spec;
  bad.spacing = 10.0;
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad = spec;
  bad.component_std = 0.0;
  CHECK_THROWS_AS(bad.validate(), ContractError);
}

TEST_CASE("component counts follow the binomial law") {
  const auto spec = GaussianMixtureSpec::grid(9, 9.0);
  const std::size_t n = 90000;
  std::vector<std::size_t> labels;
  sample_mixture(spec, n, 3, &labels);
  std::vector<double> counts(9, 0.0);
  for (auto l : labels) counts[l] += 1.0;
  const double p = 1.0 / 9.0;
  const double tol = 3.0 * std::sqrt(n * p * (1.0 - p));
  for (double c : counts) CHECK(std::abs(c - n * p) <= tol);
}

TEST_CASE("each component has its Gaussian law") {
  const auto spec = GaussianMixtureSpec::grid(4, 10.0, 0.5);
  const std::size_t n = 40000;
  std::vector<std::size_t> labels;
  const SampleSet s = sample_mixture(spec, n, 17, &labels);
  for (std::size_t m = 0; m < 4; ++m) {
    double cnt = 0, mx = 0, my = 0, vx = 0, vy = 0, cxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] != m) continue;
      const double dx = s.points(i, 0) - spec.centers(m, 0);
      const double dy = s.points(i, 1) - spec.centers(m, 1);
      cnt += 1, mx += dx, my += dy, vx += dx * dx, vy += dy * dy, cxy += dx * dy;
    }
    mx /= cnt, my /= cnt, vx /= cnt, vy /= cnt, cxy /= cnt;
    const double se = 0.5 / std::sqrt(cnt);
    CHECK(std::abs(mx) < 5 * se);
    CHECK(std::abs(my) < 5 * se);
    // var of a sample variance ~ 2 sigma^4 / n
    const double vse = std::sqrt(2.0 / cnt) * 0.25;
    CHECK(std::abs(vx - 0.25) < 5 * vse);
    CHECK(std::abs(vy - 0.25) < 5 * vse);
    CHECK(std::abs(cxy) < 5 * 0.25 / std::sqrt(cnt));
  }
}

TEST_CASE("latent moments") {
  const SampleSet z = sample_latent(LatentSpec{2}, 100000, 8);
  for (std::size_t c = 0; c < 2; ++c) {
    double m = 0, v = 0;
    for (std::size_t i = 0; i < z.size(); ++i) m += z.points(i, c);
    m /= z.size();
    for (std::size_t i = 0; i < z.size(); ++i) v += (z.points(i, c) - m) * (z.points(i, c) - m);
    v /= z.size() - 1;
    CHECK(std::abs(m) < 0.02);
    CHECK(std::abs(v - 1.0) < 0.03);
  }
  CHECK(z.origin == Origin::kGenerated);
}

TEST_CASE("latent determinism") {
  CHECK(sample_latent(LatentSpec{3}, 500, 99).points == sample_latent(LatentSpec{3}, 500, 99).points);
  CHECK(sample_latent(LatentSpec{3}, 500, 99).points != sample_latent(LatentSpec{3}, 500, 100).points);
  const auto spec = GaussianMixtureSpec::grid(9, 9.0);
  CHECK(sample_mixture(spec, 200, 4).points == sample_mixture(spec, 200, 4).points);
}

TEST_CASE("latent one-dimensional KS statistic") {
  const std::size_t n = 10000;
  const SampleSet z = sample_latent(LatentSpec{1}, n, 21);
  std::vector<double> v = z.points.data();
  std::sort(v.begin(), v.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = normal_cdf(v[i]);
    ks = std::max({ks, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  CHECK(ks < 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("uniform sampler range") {
  const SampleSet u = sample_uniform(1000, 1, 0.5, 1.5, 3);
  for (double v : u.points.data()) {
    CHECK(v >= 0.5);
    CHECK(v < 1.5);
  }
}
