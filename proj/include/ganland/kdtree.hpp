#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ganland/tensor.hpp"

namespace ganland {

/// Squared Euclidean distance, summed in coordinate order. Every exact
/// neighbor computation in the library goes through this function so that
/// accelerated and brute-force paths agree bit for bit.
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

inline constexpr std::size_t kNoExclude = std::numeric_limits<std::size_t>::max();

/// Static k-d tree over the rows of a tensor with exact k-NN and
/// variable-radius ball coverage queries.
class KdTree {
 public:
  explicit KdTree(const Tensor& points, std::size_t leaf_size = 8);

  std::size_t size() const { return points_.rows(); }

  /// Squared distance from `query` to its k-th nearest stored point, skipping
  /// stored index `exclude`. k is 1-based.
  double kth_neighbor_sq(std::span<const double> query, std::size_t k,
                         std::size_t exclude = kNoExclude) const;

  double nearest_sq(std::span<const double> query) const { return kth_neighbor_sq(query, 1); }

  /// Attaches a squared radius to every stored point (original row order).
  void set_radii_sq(std::vector<double> radii_sq);

  /// True iff some stored point i satisfies squared_distance(query, p_i) <= radii_sq[i].
  bool covered(std::span<const double> query) const;

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t left = 0;  // 0 means leaf (the root is never a child)
    std::size_t right = 0;
    double max_r2 = 0.0;
  };

  std::size_t build(std::size_t begin, std::size_t end);
  double refresh_radii(std::size_t node);
  double box_distance_sq(std::size_t node, std::span<const double> q) const;
  std::span<const double> lo(std::size_t node) const { return {boxes_.data() + 2 * node * dim_, dim_}; }
  std::span<const double> hi(std::size_t node) const {
    return {boxes_.data() + (2 * node + 1) * dim_, dim_};
  }

  Tensor points_;  // permuted copy, contiguous per leaf
  std::vector<std::size_t> index_;  // permuted position -> original row
  std::vector<Node> nodes_;
  std::vector<double> boxes_;
  std::vector<double> radii_sq_;  // in permuted order
  std::size_t dim_ = 0;
  std::size_t leaf_size_ = 8;
};

}  // namespace ganland
