#include "ganland/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "ganland/kdtree.hpp"
#include "ganland/rng.hpp"
#include "ganland/tape.hpp"

namespace ganland {
namespace {

double mean_of(const std::vector<bool>& flags) {
  if (flags.empty()) return 0.0;
  const auto hits = std::count(flags.begin(), flags.end(), true);
  return static_cast<double>(hits) / static_cast<double>(flags.size());
}

double kth_brute(const Tensor& points, std::span<const double> q, std::size_t k, std::size_t exclude) {
  std::vector<double> d2;
  d2.reserve(points.rows());
  for (std::size_t j = 0; j < points.rows(); ++j) {
    if (j == exclude) continue;
    d2.push_back(squared_distance(q, points.row(j)));
  }
  std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(k - 1), d2.end());
  return d2[k - 1];
}

Eigen::MatrixXd to_eigen(const Tensor& t) {
  Eigen::MatrixXd m(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) m(i, j) = t(i, j);
  }
  return m;
}

}  // namespace

std::vector<double> knn_radii_sq(const Tensor& points, std::size_t k, NeighborSearch search) {
  if (k == 0 || k >= points.rows()) {
    throw ContractError("k=" + std::to_string(k) + " must lie in [1, " +
                        std::to_string(points.rows()) + ")");
  }
  std::vector<double> out(points.rows());
  if (search == NeighborSearch::kBruteForce) {
    for (std::size_t i = 0; i < points.rows(); ++i) out[i] = kth_brute(points, points.row(i), k, i);
    return out;
  }
  const KdTree tree(points);
  for (std::size_t i = 0; i < points.rows(); ++i) out[i] = tree.kth_neighbor_sq(points.row(i), k, i);
  return out;
}

std::vector<bool> ball_coverage(const Tensor& queries, const Tensor& centers,
                                std::span<const double> radii_sq, NeighborSearch search) {
  if (queries.cols() != centers.cols()) throw DimensionError("ball_coverage: dimension mismatch");
  if (radii_sq.size() != centers.rows()) throw DimensionError("ball_coverage: radii count mismatch");
  std::vector<bool> out(queries.rows(), false);
  if (queries.rows() == 0) return out;
  if (search == NeighborSearch::kBruteForce) {
    for (std::size_t i = 0; i < queries.rows(); ++i) {
      for (std::size_t j = 0; j < centers.rows(); ++j) {
        if (squared_distance(queries.row(i), centers.row(j)) <= radii_sq[j]) {
          out[i] = true;
          break;
        }
      }
    }
    return out;
  }
  KdTree tree(centers);
  tree.set_radii_sq(std::vector<double>(radii_sq.begin(), radii_sq.end()));
  for (std::size_t i = 0; i < queries.rows(); ++i) out[i] = tree.covered(queries.row(i));
  return out;
}

std::vector<bool> precision_flags(const Tensor& x, const Tensor& y, std::size_t k,
                                  NeighborSearch search) {
  const auto radii = knn_radii_sq(y, k, search);
  return ball_coverage(x, y, radii, search);
}

PrReport improved_pr(const SampleSet& x, const SampleSet& y, std::size_t k, NeighborSearch search) {
  if (x.dim() != y.dim()) throw DimensionError("improved_pr: point dimensions differ");
  if (k == 0 || k >= std::min(x.size(), y.size())) {
    throw ContractError("improved_pr: k=" + std::to_string(k) + " must satisfy 1 <= k < min(" +
                        std::to_string(x.size()) + ", " + std::to_string(y.size()) + ")");
  }
  PrReport r;
  r.k = k;
  r.n_x = x.size();
  r.n_y = y.size();
  r.per_point_precision = precision_flags(x.points, y.points, k, search);
  r.per_point_recall = precision_flags(y.points, x.points, k, search);
  r.precision = mean_of(r.per_point_precision);
  r.recall = mean_of(r.per_point_recall);
  return r;
}

double hausdorff(const SampleSet& a, const SampleSet& b, NeighborSearch search) {
  if (a.size() == 0 || b.size() == 0) throw ContractError("hausdorff: empty point set");
  if (a.dim() != b.dim()) throw DimensionError("hausdorff: point dimensions differ");
  auto directed = [search](const Tensor& from, const Tensor& to) {
    double worst = 0.0;
    if (search == NeighborSearch::kBruteForce) {
      for (std::size_t i = 0; i < from.rows(); ++i) {
        double best = INFINITY;
        for (std::size_t j = 0; j < to.rows(); ++j) {
          best = std::min(best, squared_distance(from.row(i), to.row(j)));
        }
        worst = std::max(worst, best);
      }
      return worst;
    }
    const KdTree tree(to);
    for (std::size_t i = 0; i < from.rows(); ++i) worst = std::max(worst, tree.nearest_sq(from.row(i)));
    return worst;
  };
  return std::sqrt(std::max(directed(a.points, b.points), directed(b.points, a.points)));
}

double frechet_gaussian(const SampleSet& a, const SampleSet& b) {
  if (a.dim() != b.dim()) throw DimensionError("frechet_gaussian: point dimensions differ");
  const std::size_t d = a.dim();
  if (a.size() < d + 1 || b.size() < d + 1) {
    throw ContractError("frechet_gaussian: need at least dim+1 points per set");
  }
  auto moments = [](const Tensor& t) {
    const Eigen::MatrixXd m = to_eigen(t);
    const Eigen::VectorXd mean = m.colwise().mean();
    const Eigen::MatrixXd centered = m.rowwise() - mean.transpose();
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(t.rows() - 1);
    return std::pair{mean, cov};
  };
  const auto [mean_a, cov_a] = moments(a.points);
  const auto [mean_b, cov_b] = moments(b.points);

  auto psd_eigen = [](const Eigen::MatrixXd& m) {
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    Eigen::VectorXd ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (ev(i) < -1e-8 * scale) {
        throw NumericError("frechet_gaussian: matrix is not positive semi-definite (eigenvalue " +
                           std::to_string(ev(i)) + ")");
      }
      ev(i) = std::max(ev(i), 0.0);
    }
    return std::pair{ev, Eigen::MatrixXd(es.eigenvectors())};
  };

  const auto [ev_a, vec_a] = psd_eigen(cov_a);
  const Eigen::MatrixXd sqrt_a = vec_a * ev_a.cwiseSqrt().asDiagonal() * vec_a.transpose();
  const auto [ev_prod, unused] = psd_eigen(sqrt_a * cov_b * sqrt_a);
  (void)unused;
  const double trace_sqrt = ev_prod.cwiseSqrt().sum();
  return (mean_a - mean_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * trace_sqrt;
}

std::vector<double> decile_ratios() {
  std::vector<double> r;
  for (int i = 1; i <= 10; ++i) r.push_back(i / 10.0);
  return r;
}

std::size_t keep_count(double ratio, std::size_t n) {
  // Slack absorbs representation error such as 0.7 * 2500 = 1749.9999999999998.
  const double raw = std::ceil(ratio * static_cast<double>(n) - 1e-9);
  return std::min(n, static_cast<std::size_t>(std::max(0.0, raw)));
}

MarginalCurve marginal_precision_curve(const Tensor& generated, std::span<const double> scores,
                                       const SampleSet& real, std::span<const double> ratios,
                                       std::size_t k) {
  if (scores.size() != generated.rows()) throw DimensionError("marginal curve: one score per point");
  if (ratios.empty()) throw ContractError("marginal curve: empty ratio grid");
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (!(ratios[i] > 0.0 && ratios[i] <= 1.0) || (i > 0 && ratios[i] <= ratios[i - 1])) {
      throw ContractError("marginal curve: ratios must be strictly increasing in (0, 1]");
    }
  }
  const std::size_t n = generated.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  const std::vector<bool> flags = precision_flags(generated, real.points, k);

  MarginalCurve curve;
  std::size_t prev_cut = 0;
  std::size_t hits_total = 0;
  bool pending_merge = false;
  for (double ratio : ratios) {
    const std::size_t cut = keep_count(ratio, n);
    if (cut == prev_cut) {
      if (curve.kept_ratios.empty()) {
        pending_merge = true;
      } else {
        curve.kept_ratios.back() = ratio;
        curve.merged.back() = true;
      }
      continue;
    }
    std::size_t hits = 0;
    for (std::size_t i = prev_cut; i < cut; ++i) hits += flags[order[i]] ? 1 : 0;
    hits_total += hits;
    curve.kept_ratios.push_back(ratio);
    curve.bucket_sizes.push_back(cut - prev_cut);
    curve.marginal_precision.push_back(static_cast<double>(hits) / static_cast<double>(cut - prev_cut));
    curve.cumulative_precision.push_back(static_cast<double>(hits_total) / static_cast<double>(cut));
    curve.merged.push_back(pending_merge);
    pending_merge = false;
    prev_cut = cut;
  }
  return curve;
}

std::size_t default_k_rule(std::size_t n) {
  return static_cast<std::size_t>(std::ceil(std::pow(std::log(static_cast<double>(n)), 1.5)));
}

std::string to_string(OverlapFamily family) {
  switch (family) {
    case OverlapFamily::kIdentical: return "identical";
    case OverlapFamily::kHalfOverlap: return "half-overlap";
    case OverlapFamily::kDisjoint: return "disjoint";
  }
  return "?";
}

OverlapFamily parse_overlap_family(const std::string& name) {
  if (name == "identical") return OverlapFamily::kIdentical;
  if (name == "half-overlap") return OverlapFamily::kHalfOverlap;
  if (name == "disjoint") return OverlapFamily::kDisjoint;
  throw ContractError("unknown overlap family '" + name + "'");
}

std::vector<ConvergenceRow> pr_convergence_experiment(OverlapFamily family,
                                                      std::span<const std::size_t> n_grid,
                                                      std::size_t num_seeds, std::uint64_t seed) {
  double shift = 0.0;
  double target = 1.0;
  switch (family) {
    case OverlapFamily::kIdentical: shift = 0.0; target = 1.0; break;
    case OverlapFamily::kHalfOverlap: shift = 0.5; target = 0.5; break;
    case OverlapFamily::kDisjoint: shift = 2.0; target = 0.0; break;
  }
  std::vector<ConvergenceRow> rows;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const std::size_t n = n_grid[g];
    ConvergenceRow row;
    row.n = n;
    row.k = default_k_rule(n);
    row.target = target;
    double sum = 0.0;
    for (std::size_t s = 0; s < num_seeds; ++s) {
      const std::uint64_t base = derive_seed(seed, SeedDomain::kExperiment, g * 1000003 + s);
      const SampleSet real = sample_uniform(n, 1, 0.0, 1.0, derive_seed(base, SeedDomain::kMixture));
      const SampleSet model = sample_uniform(n, 1, shift, shift + 1.0, derive_seed(base, SeedDomain::kLatent));
      const double alpha = mean_of(precision_flags(model.points, real.points, row.k));
      sum += alpha;
      row.max_seed_error = std::max(row.max_seed_error, std::abs(alpha - target));
    }
    row.mean_precision = sum / static_cast<double>(num_seeds);
    row.abs_error = std::abs(row.mean_precision - target);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ganland
