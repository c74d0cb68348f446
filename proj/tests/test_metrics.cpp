#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ganland/data.hpp"
#include "ganland/kdtree.hpp"
#include "ganland/metrics.hpp"
#include "ganland/rng.hpp"

using namespace ganland;

namespace {

Tensor random_points(std::size_t n, std::size_t d, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Tensor t(n, d);
  for (auto& v : t.data()) v = scale * rng.normal();
  return t;
}

SampleSet set_of(Tensor t) { return SampleSet{std::move(t), Origin::kReal, 0}; }

// O(n^2) reference: sort all distances to the other points.
std::vector<double> brute_radii_sq(const Tensor& p, std::size_t k) {
  std::vector<double> out(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < p.rows(); ++j) {
      if (j != i) d.push_back(squared_distance(p.row(i), p.row(j)));
    }
    std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
    out[i] = d[k - 1];
  }
  return out;
}

std::vector<bool> brute_flags(const Tensor& x, const Tensor& y, std::size_t k) {
  const auto r = brute_radii_sq(y, k);
  std::vector<bool> f(x.rows(), false);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < y.rows() && !f[i]; ++j) f[i] = squared_distance(x.row(i), y.row(j)) <= r[j];
  }
  return f;
}

double brute_hausdorff(const Tensor& a, const Tensor& b) {
  auto directed = [](const Tensor& p, const Tensor& q) {
    double worst = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
      double best = HUGE_VAL;
      for (std::size_t j = 0; j < q.rows(); ++j) best = std::min(best, squared_distance(p.row(i), q.row(j)));
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  return std::max(directed(a, b), directed(b, a));
}

// Rotation in the (0, 1) plane plus a translation.
Tensor rigid(const Tensor& p, double angle, double tx, double ty) {
  Tensor out = p;
  const double c = std::cos(angle), s = std::sin(angle);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    out(i, 0) = c * p(i, 0) - s * p(i, 1) + tx;
    out(i, 1) = s * p(i, 0) + c * p(i, 1) + ty;
  }
  return out;
}

double mean(const std::vector<bool>& v) {
  double s = 0;
  for (bool b : v) s += b;
  return s / v.size();
}

}  // namespace

TEST_CASE("identical sets are fully precise and recalled") {
  const Tensor p = random_points(200, 2, 1);
  const PrReport r = improved_pr(set_of(p), set_of(p), 3);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.n_x == 200);
  CHECK(r.n_y == 200);
  CHECK(r.k == 3);
}

TEST_CASE("far apart clusters share nothing") {
  Tensor a = random_points(100, 2, 2, 0.1);
  Tensor b = random_points(100, 2, 3, 0.1);
  for (std::size_t i = 0; i < b.rows(); ++i) b(i, 0) += 100.0;
  const PrReport r = improved_pr(set_of(a), set_of(b), 3);
  CHECK(r.precision == 0.0);
  CHECK(r.recall == 0.0);
}

TEST_CASE("one-dimensional hand example") {
  const Tensor y(3, 1, {0.0, 1.0, 2.0});
  const Tensor x(2, 1, {0.5, 10.0});
  const PrReport r = improved_pr(set_of(x), set_of(y), 1);
  CHECK(r.precision == 0.5);
  CHECK(r.per_point_precision == std::vector<bool>{true, false});
  CHECK(r.recall == 1.0);
  CHECK(knn_radii_sq(y, 1) == std::vector<double>{1.0, 1.0, 1.0});
  CHECK(knn_radii_sq(x, 1) == std::vector<double>{9.5 * 9.5, 9.5 * 9.5});
}

TEST_CASE("report invariants and contract") {
  const SampleSet a = set_of(random_points(50, 2, 4));
  const SampleSet b = set_of(random_points(60, 2, 5));
  const PrReport r = improved_pr(a, b, 4);
  CHECK(r.precision == mean(r.per_point_precision));
  CHECK(r.recall == mean(r.per_point_recall));
  CHECK(r.per_point_precision.size() == 50);
  CHECK(r.per_point_recall.size() == 60);
  CHECK_THROWS_AS(improved_pr(a, b, 0), ContractError);
  CHECK_THROWS_AS(improved_pr(a, b, 50), ContractError);
  CHECK_NOTHROW(improved_pr(a, b, 49));
  CHECK_THROWS_AS(improved_pr(a, set_of(random_points(60, 3, 5)), 3), DimensionError);
}

TEST_CASE("k-d tree equals brute force exactly") {
  for (std::size_t dim : {1, 2, 3, 5}) {
    for (std::size_t n : {5, 17, 120, 300}) {
      const Tensor x = random_points(n, dim, 10 * dim + n);
      const Tensor y = random_points(n - 1, dim, 1000 + 10 * dim + n, 1.3);
      for (std::size_t k : {1, 3}) {
        CAPTURE(dim);
        CAPTURE(n);
        CAPTURE(k);
        const auto tree = knn_radii_sq(y, k, NeighborSearch::kKdTree);
        CHECK(tree == knn_radii_sq(y, k, NeighborSearch::kBruteForce));
        CHECK(tree == brute_radii_sq(y, k));
        const auto fx = precision_flags(x, y, k, NeighborSearch::kKdTree);
        CHECK(fx == precision_flags(x, y, k, NeighborSearch::kBruteForce));
        CHECK(fx == brute_flags(x, y, k));
        const PrReport a = improved_pr(set_of(x), set_of(y), k, NeighborSearch::kKdTree);
        const PrReport b = improved_pr(set_of(x), set_of(y), k, NeighborSearch::kBruteForce);
        CHECK(a.per_point_precision == b.per_point_precision);
        CHECK(a.per_point_recall == b.per_point_recall);
      }
    }
  }
}

TEST_CASE("duplicates and ties") {
  // Integer lattice points with repeats: many equal distances.
  Rng rng(6);
  Tensor x(150, 2), y(150, 2);
  for (auto& v : x.data()) v = static_cast<double>(rng.below(6));
  for (auto& v : y.data()) v = static_cast<double>(rng.below(6));
  for (std::size_t k : {1, 2, 5}) {
    CHECK(knn_radii_sq(y, k) == brute_radii_sq(y, k));
    CHECK(precision_flags(x, y, k) == brute_flags(x, y, k));
  }
  KdTree tree(y, 4);
  for (std::size_t i = 0; i < 20; ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < y.rows(); ++j) d.push_back(squared_distance(x.row(i), y.row(j)));
    std::sort(d.begin(), d.end());
    CHECK(tree.nearest_sq(x.row(i)) == d[0]);
    CHECK(tree.kth_neighbor_sq(x.row(i), 7) == d[6]);
  }
}

TEST_CASE("symmetry between precision and recall") {
  const SampleSet a = set_of(random_points(80, 2, 7));
  const SampleSet b = set_of(random_points(90, 2, 8, 2.0));
  for (std::size_t k : {1, 3, 7}) {
    CHECK(improved_pr(a, b, k).precision == improved_pr(b, a, k).recall);
    CHECK(improved_pr(a, b, k).recall == improved_pr(b, a, k).precision);
  }
}

TEST_CASE("monotone in k") {
  const SampleSet a = set_of(random_points(150, 2, 9));
  const SampleSet b = set_of(random_points(150, 2, 10, 1.5));
  double p = -1, r = -1;
  for (std::size_t k = 1; k < 30; ++k) {
    const PrReport rep = improved_pr(a, b, k);
    CHECK(rep.precision >= p);
    CHECK(rep.recall >= r);
    p = rep.precision;
    r = rep.recall;
  }
}

TEST_CASE("isometry invariance") {
  const Tensor a = random_points(200, 2, 11);
  const Tensor b = random_points(220, 2, 12, 1.4);
  const Tensor ra = rigid(a, 0.7, 3.0, -2.0);
  const Tensor rb = rigid(b, 0.7, 3.0, -2.0);
  const PrReport p0 = improved_pr(set_of(a), set_of(b), 3);
  const PrReport p1 = improved_pr(set_of(ra), set_of(rb), 3);
  CHECK(std::abs(p0.precision - p1.precision) <= 1e-9);
  CHECK(std::abs(p0.recall - p1.recall) <= 1e-9);
  CHECK(std::abs(hausdorff(set_of(a), set_of(b)) - hausdorff(set_of(ra), set_of(rb))) <= 1e-9);
  CHECK(std::abs(frechet_gaussian(set_of(a), set_of(b)) - frechet_gaussian(set_of(ra), set_of(rb))) <= 1e-9);
}

TEST_CASE("hausdorff") {
  const Tensor a = random_points(200, 2, 13);
  CHECK(hausdorff(set_of(a), set_of(a)) == 0.0);
  CHECK(hausdorff(set_of(Tensor(1, 1, {0.0})), set_of(Tensor(1, 1, {3.0}))) == 3.0);
  const Tensor b = random_points(200, 2, 14, 2.0);
  CHECK(hausdorff(set_of(a), set_of(b)) == brute_hausdorff(a, b));
  CHECK(hausdorff(set_of(a), set_of(b), NeighborSearch::kBruteForce) == brute_hausdorff(a, b));
  CHECK_THROWS_AS(hausdorff(set_of(Tensor(0, 2)), set_of(a)), ContractError);
}

TEST_CASE("frechet distance of Gaussian fits") {
  const std::size_t n = 50000;
  const SampleSet a = sample_latent(LatentSpec{2}, n, 15);
  const SampleSet b = sample_latent(LatentSpec{2}, n, 16);
  CHECK(frechet_gaussian(a, b) <= 0.05);

  SampleSet shifted = sample_latent(LatentSpec{2}, n, 17);
  for (std::size_t i = 0; i < n; ++i) shifted.points(i, 0) += 3.0, shifted.points(i, 1) -= 4.0;
  CHECK(std::abs(frechet_gaussian(a, shifted) - 25.0) / 25.0 < 0.02);

  const SampleSet one = sample_latent(LatentSpec{1}, n, 18);
  SampleSet four = sample_latent(LatentSpec{1}, n, 19);
  for (auto& v : four.points.data()) v *= 2.0;
  CHECK(std::abs(frechet_gaussian(one, four) - 1.0) < 0.02);

  CHECK_THROWS_AS(frechet_gaussian(set_of(Tensor(2, 2, {0, 0, 1, 1})), a), ContractError);
}

TEST_CASE("keep count") {
  CHECK(keep_count(0.7, 2500) == 1750);
  CHECK(keep_count(1.0, 7) == 7);
  CHECK(keep_count(0.1, 10) == 1);
  CHECK(keep_count(0.3, 10) == 3);
  CHECK(keep_count(0.05, 10) == 1);
  CHECK(keep_count(0.0, 10) == 0);
}

TEST_CASE("marginal curve") {
  const SampleSet real = set_of(random_points(300, 2, 20));
  const Tensor gen = random_points(200, 2, 21, 1.5);
  std::vector<double> scores(200);
  for (std::size_t i = 0; i < 200; ++i) scores[i] = std::hypot(gen(i, 0), gen(i, 1));

  SUBCASE("single ratio equals the overall precision") {
    const std::vector<double> one{1.0};
    const MarginalCurve c = marginal_precision_curve(gen, scores, real, one, 3);
    REQUIRE(c.kept_ratios.size() == 1);
    const double p = improved_pr(set_of(gen), real, 3).precision;
    CHECK(c.cumulative_precision[0] == p);
    CHECK(c.marginal_precision[0] == p);
    CHECK(c.bucket_sizes[0] == 200);
  }
  SUBCASE("deciles partition the ordered points") {
    const auto d = decile_ratios();
    const MarginalCurve c = marginal_precision_curve(gen, scores, real, d, 3);
    REQUIRE(c.kept_ratios.size() == 10);
    std::vector<std::size_t> order(200);
    for (std::size_t i = 0; i < 200; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    const auto flags = brute_flags(gen, real.points, 3);
    for (std::size_t b = 0; b < 10; ++b) {
      CHECK(c.bucket_sizes[b] == 20);
      double hits = 0;
      for (std::size_t i = 20 * b; i < 20 * (b + 1); ++i) hits += flags[order[i]];
      CHECK(c.marginal_precision[b] == hits / 20.0);
      // Bucket alone against the real set.
      std::vector<std::size_t> idx(order.begin() + 20 * b, order.begin() + 20 * (b + 1));
      CHECK(c.marginal_precision[b] == improved_pr(set_of(gen.gather_rows(idx)), real, 3).precision);
    }
    CHECK(c.kept_ratios.size() == c.cumulative_precision.size());
    CHECK(c.cumulative_precision.back() == improved_pr(set_of(gen), real, 3).precision);
  }
  SUBCASE("constant scores keep index order") {
    const std::vector<double> flat(200, 1.0);
    const std::vector<double> half{0.5, 1.0};
    const MarginalCurve c = marginal_precision_curve(gen, flat, real, half, 3);
    std::vector<std::size_t> first(100);
    for (std::size_t i = 0; i < 100; ++i) first[i] = i;
    CHECK(c.marginal_precision[0] == improved_pr(set_of(gen.gather_rows(first)), real, 3).precision);
  }
  SUBCASE("empty buckets merge and are flagged") {
    const Tensor small = gen.slice_rows(0, 5);
    const std::vector<double> s(scores.begin(), scores.begin() + 5);
    const std::vector<double> fine{0.05, 0.1, 0.15, 0.2, 0.4, 0.6, 0.8, 1.0};
    const MarginalCurve c = marginal_precision_curve(small, s, real, fine, 3);
    std::size_t total = 0;
    for (auto b : c.bucket_sizes) total += b;
    CHECK(total == 5);
    CHECK(c.kept_ratios.size() == c.marginal_precision.size());
    CHECK(std::find(c.merged.begin(), c.merged.end(), true) != c.merged.end());
    for (std::size_t i = 1; i < c.kept_ratios.size(); ++i) CHECK(c.kept_ratios[i] > c.kept_ratios[i - 1]);
  }
  SUBCASE("bad ratio grids") {
    const std::vector<double> dec{0.5, 0.4};
    const std::vector<double> zero{0.0, 1.0};
    CHECK_THROWS_AS(marginal_precision_curve(gen, scores, real, dec, 3), ContractError);
    CHECK_THROWS_AS(marginal_precision_curve(gen, scores, real, zero, 3), ContractError);
  }
}

TEST_CASE("support convergence on uniforms") {
  const std::size_t n[] = {10000};
  CHECK(default_k_rule(10000) == 28);
  const auto identical = pr_convergence_experiment(OverlapFamily::kIdentical, n, 5, 1);
  CHECK(identical[0].target == 1.0);
  CHECK(identical[0].mean_precision >= 0.97);
  const auto half = pr_convergence_experiment(OverlapFamily::kHalfOverlap, n, 20, 2);
  CHECK(half[0].target == 0.5);
  CHECK(half[0].abs_error <= 0.05);
  const auto disjoint = pr_convergence_experiment(OverlapFamily::kDisjoint, n, 5, 3);
  CHECK(disjoint[0].mean_precision <= 0.03);
  CHECK(parse_overlap_family(to_string(OverlapFamily::kHalfOverlap)) == OverlapFamily::kHalfOverlap);
  CHECK_THROWS_AS(parse_overlap_family("nope"), ContractError);
}
