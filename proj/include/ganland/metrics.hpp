#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ganland/data.hpp"
#include "ganland/tensor.hpp"

namespace ganland {

enum class NeighborSearch { kKdTree, kBruteForce };

/// Improved precision/recall of a generated set X against a real set Y.
struct PrReport {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t k = 0;
  std::size_t n_x = 0;
  std::size_t n_y = 0;
  std::vector<bool> per_point_precision;  // over X
  std::vector<bool> per_point_recall;     // over Y
};

/// Squared distance from every row to its k-th nearest other row.
std::vector<double> knn_radii_sq(const Tensor& points, std::size_t k,
                                 NeighborSearch search = NeighborSearch::kKdTree);

/// For each query row: is it inside some closed ball (center = row i of
/// `centers`, squared radius radii_sq[i])?
std::vector<bool> ball_coverage(const Tensor& queries, const Tensor& centers,
                                std::span<const double> radii_sq,
                                NeighborSearch search = NeighborSearch::kKdTree);

/// x in X counts toward precision iff |x - y| <= (distance from y to its k-th
/// neighbor in Y \ {y}) for some y in Y. Recall swaps the roles.
/// Requires 1 <= k < min(n_x, n_y) and matching dimensions.
PrReport improved_pr(const SampleSet& x, const SampleSet& y, std::size_t k = 3,
                     NeighborSearch search = NeighborSearch::kKdTree);

/// Precision flags only (X against Y's k-NN balls); needs k < n_y.
std::vector<bool> precision_flags(const Tensor& x, const Tensor& y, std::size_t k,
                                  NeighborSearch search = NeighborSearch::kKdTree);

double hausdorff(const SampleSet& a, const SampleSet& b,
                 NeighborSearch search = NeighborSearch::kKdTree);

/// |m_a - m_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}) with unbiased sample
/// covariances. The trace of the square root is taken on the symmetric
/// product S_a^{1/2} S_b S_a^{1/2}; eigenvalues in [-1e-8 scale, 0) are
/// clamped to 0, more negative ones are an error.
double frechet_gaussian(const SampleSet& a, const SampleSet& b);

/// Number of points kept at `ratio` of n: ceil(ratio * n), clamped to [0, n].
std::size_t keep_count(double ratio, std::size_t n);

struct MarginalCurve {
  std::vector<double> kept_ratios;
  std::vector<double> cumulative_precision;
  std::vector<double> marginal_precision;
  std::vector<std::size_t> bucket_sizes;
  std::vector<bool> merged;  // bucket absorbed one or more empty neighbours
};

/// Points are ordered by ascending score (ties by index). Bucket i holds the
/// points between ratio i-1 and ratio i. The marginal precision of a bucket
/// is the improved precision of that bucket alone against `real`; since a
/// point's precision flag depends only on the real set, this is the mean
/// of the per-point flags inside the bucket.
MarginalCurve marginal_precision_curve(const Tensor& generated, std::span<const double> scores,
                                       const SampleSet& real, std::span<const double> ratios,
                                       std::size_t k = 3);

/// Deciles 0.1, 0.2, ..., 1.0.
std::vector<double> decile_ratios();

/// 1-D support-overlap families with a known maximal precision.
enum class OverlapFamily { kIdentical, kHalfOverlap, kDisjoint };

struct ConvergenceRow {
  std::size_t n = 0;
  std::size_t k = 0;
  double target = 0.0;         // analytic maximal precision
  double mean_precision = 0.0; // averaged over seeds
  double abs_error = 0.0;      // |mean_precision - target|
  double max_seed_error = 0.0;
};

/// k = ceil((log n)^1.5).
std::size_t default_k_rule(std::size_t n);

/// The model set is Uniform on a shifted interval, the real set Uniform[0, 1]:
/// identical -> [0, 1] (target 1), half overlap -> [0.5, 1.5] (0.5),
/// disjoint -> [2, 3] (0).
std::vector<ConvergenceRow> pr_convergence_experiment(OverlapFamily family,
                                                      std::span<const std::size_t> n_grid,
                                                      std::size_t num_seeds, std::uint64_t seed);

std::string to_string(OverlapFamily family);
OverlapFamily parse_overlap_family(const std::string& name);

}  // namespace ganland
