#include "ganland/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace ganland {

KdTree::KdTree(const Tensor& points, std::size_t leaf_size)
    : dim_(points.cols()), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  if (points.rows() == 0) throw ContractError("KdTree: empty point set");
  index_.resize(points.rows());
  std::iota(index_.begin(), index_.end(), std::size_t{0});
  points_ = points;  // rewritten in permuted order after build
  nodes_.reserve(2 * points.rows() / leaf_size_ + 2);
  build(0, points.rows());
  points_ = points.gather_rows(index_);
  radii_sq_.assign(points.rows(), 0.0);
}

std::size_t KdTree::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back(Node{begin, end, 0, 0, 0.0});
  boxes_.resize(2 * (id + 1) * dim_);
  for (std::size_t d = 0; d < dim_; ++d) {
    double mn = points_(index_[begin], d);
    double mx = mn;
    for (std::size_t i = begin + 1; i < end; ++i) {
      mn = std::min(mn, points_(index_[i], d));
      mx = std::max(mx, points_(index_[i], d));
    }
    boxes_[2 * id * dim_ + d] = mn;
    boxes_[(2 * id + 1) * dim_ + d] = mx;
  }
  if (end - begin <= leaf_size_) return id;

  std::size_t split_dim = 0;
  double widest = -1.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    const double w = boxes_[(2 * id + 1) * dim_ + d] - boxes_[2 * id * dim_ + d];
    if (w > widest) {
      widest = w;
      split_dim = d;
    }
  }
  if (widest <= 0.0) return id;  // all points identical

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(index_.begin() + static_cast<std::ptrdiff_t>(begin),
                   index_.begin() + static_cast<std::ptrdiff_t>(mid),
                   index_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     const double va = points_(a, split_dim);
                     const double vb = points_(b, split_dim);
                     return va < vb || (va == vb && a < b);
                   });
  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double KdTree::box_distance_sq(std::size_t node, std::span<const double> q) const {
  const auto l = lo(node);
  const auto h = hi(node);
  double acc = 0.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    double diff = 0.0;
    if (q[d] < l[d]) {
      diff = l[d] - q[d];
    } else if (q[d] > h[d]) {
      diff = q[d] - h[d];
    }
    acc += diff * diff;
  }
  return acc;
}

double KdTree::kth_neighbor_sq(std::span<const double> query, std::size_t k,
                               std::size_t exclude) const {
  if (query.size() != dim_) throw DimensionError("KdTree query dimension mismatch");
  const std::size_t available = size() - (exclude < size() ? 1 : 0);
  if (k == 0 || k > available) {
    throw ContractError("KdTree: k=" + std::to_string(k) + " out of range for " +
                        std::to_string(available) + " candidate points");
  }
  // best holds the k smallest squared distances seen so far, ascending.
  std::vector<double> best;
  best.reserve(k + 1);
  auto bound = [&] { return best.size() < k ? std::numeric_limits<double>::infinity() : best.back(); };

  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const std::size_t id = stack.back();
    stack.pop_back();
    if (box_distance_sq(id, query) > bound()) continue;
    const Node& node = nodes_[id];
    if (node.left == 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        if (index_[i] == exclude) continue;
        const double d2 = squared_distance(query, points_.row(i));
        if (best.size() == k && d2 >= best.back()) continue;
        best.insert(std::upper_bound(best.begin(), best.end(), d2), d2);
        if (best.size() > k) best.pop_back();
      }
      continue;
    }
    const double dl = box_distance_sq(node.left, query);
    const double dr = box_distance_sq(node.right, query);
    // Push the farther child first so the nearer one is explored first.
    if (dl <= dr) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  return best[k - 1];
}

void KdTree::set_radii_sq(std::vector<double> radii_sq) {
  if (radii_sq.size() != size()) throw DimensionError("KdTree: radii count mismatch");
  for (std::size_t i = 0; i < size(); ++i) radii_sq_[i] = radii_sq[index_[i]];
  refresh_radii(0);
}

double KdTree::refresh_radii(std::size_t id) {
  Node& node = nodes_[id];
  double m = 0.0;
  if (node.left == 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) m = std::max(m, radii_sq_[i]);
  } else {
    m = std::max(refresh_radii(node.left), refresh_radii(node.right));
  }
  nodes_[id].max_r2 = m;
  return m;
}

bool KdTree::covered(std::span<const double> query) const {
  if (query.size() != dim_) throw DimensionError("KdTree query dimension mismatch");
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const std::size_t id = stack.back();
    stack.pop_back();
    const Node& node = nodes_[id];
    // Every stored point is at least box distance away, so no ball in this
    // subtree can reach the query.
    if (box_distance_sq(id, query) > node.max_r2) continue;
    if (node.left == 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        if (squared_distance(query, points_.row(i)) <= radii_sq_[i]) return true;
      }
      continue;
    }
    stack.push_back(node.right);
    stack.push_back(node.left);
  }
  return false;
}

}  // namespace ganland
