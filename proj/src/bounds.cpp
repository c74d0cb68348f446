#include "ganland/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ganland {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;  // sqrt(2 pi)

// Quantile for p in (0, 0.5].
double lower_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  double x;
  if (p < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  // Newton polish; the rational seed is good to ~1e-9 relative.
  const double e = phi(x) - p;
  x -= e * kSqrt2Pi * std::exp(0.5 * x * x);
  return x;
}

double tail_factor(double x, double epsilon) {
  return (1.0 + x * x) / (x * x) * std::exp(-0.5 * epsilon * epsilon) * std::exp(-epsilon * x);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

double phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double phi_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("phi_inv: p must lie in (0, 1), got " + fmt(p));
  if (p == 0.5) return 0.0;
  if (p < 0.5) return lower_quantile(p);
  return -lower_quantile(1.0 - p);  // exact for p >= 0.5
}

double lambert_w0(double x) {
  constexpr double kBranch = -1.0 / std::numbers::e;
  if (!(x >= kBranch)) throw DomainError("lambert_w0: x must be >= -1/e, got " + fmt(x));
  if (x == 0.0) return 0.0;
  if (x == kBranch) return -1.0;
  double w;
  if (x < -0.25) {
    // Series around the branch point.
    const double p = std::sqrt(2.0 * (std::numbers::e * x + 1.0));
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else if (x < 3.0) {
    w = std::log1p(x) * (1.0 - std::log1p(std::log1p(x)) / (2.0 + std::log1p(x)));
  } else {
    const double l1 = std::log(x);
    const double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }
  for (int it = 0; it < 64; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    w -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(w))) break;
  }
  return w;
}

void BoundInputs::validate() const {
  if (!(D > 0.0)) throw DomainError("bounds: D must be positive");
  if (!(L > 0.0)) throw DomainError("bounds: L must be positive");
  if (!(M >= 2.0)) throw DomainError("bounds: M must be at least 2");
  if (!(beta_bar > 0.0 && beta_bar <= 1.0)) throw DomainError("bounds: beta_bar must lie in (0, 1]");
  if (!(beta_bar * M > 1.0)) throw DomainError("bounds: beta_bar * M must exceed 1");
}

BoundValue make_bound(double raw) { return BoundValue{raw, std::clamp(raw, 0.0, 1.0)}; }

double thm2_residual(double alpha, double epsilon) {
  if (alpha <= 0.0) return -1.0;  // limit: the exponential term vanishes
  const double x = phi_inv(std::min(alpha, 1.0) / 2.0);
  return alpha + 2.0 * epsilon / kSqrt2Pi * std::exp(-0.5 * x * x) - 1.0;
}

double thm2_bound(double D, double L) {
  if (!(D > 0.0) || !(L > 0.0)) throw DomainError("thm2_bound: D and L must be positive");
  const double eps = D / (2.0 * L);
  if (thm2_residual(1.0, eps) <= 0.0) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (thm2_residual(mid, eps) <= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

double thm2_bound_lambert(double D, double L) {
  if (!(D > 0.0) || !(L > 0.0)) throw DomainError("thm2_bound_lambert: D and L must be positive");
  const double eps = D / (2.0 * L);
  return 1.0 - std::sqrt(2.0 / std::numbers::pi) * lambert_w0(eps * eps);
}

BoundValue thm3_bound(double epsilon, double M, double beta_bar) {
  if (!(epsilon >= 0.0)) throw DomainError("thm3_bound: epsilon must be non-negative");
  if (!(beta_bar * M > 2.0)) {
    throw DomainError("thm3_bound: requires beta_bar * M > 2 (so that x > 0), got " +
                      fmt(beta_bar * M));
  }
  const double x = -phi_inv(1.0 / (beta_bar * M));  // phi_inv(1 - q) without rounding 1 - q
  return make_bound(tail_factor(x, epsilon));
}

BoundValue thm3_bound(const BoundInputs& in) {
  in.validate();
  return thm3_bound(in.epsilon(), in.M, in.beta_bar);
}

double PartitionWeights::complement() const {
  double s = 0.0;
  for (double v : w) s += v;
  return 1.0 - s;
}

double PartitionWeights::max() const {
  return w.empty() ? 0.0 : *std::max_element(w.begin(), w.end());
}

BoundValue thm3_bound_general(double epsilon, const PartitionWeights& weights) {
  if (!(epsilon >= 0.0)) throw DomainError("thm3_bound_general: epsilon must be non-negative");
  if (weights.w.empty()) throw DomainError("thm3_bound_general: no weights");
  for (double v : weights.w) {
    if (!(v > 0.0 && v <= 0.25)) throw DomainError("thm3_bound_general: weights must lie in (0, 1/4]");
  }
  double wc = weights.complement();
  if (wc < -1e-12) throw DomainError("thm3_bound_general: weights sum above 1");
  wc = std::max(wc, 0.0);
  const double m = std::max(wc, weights.max());
  if (!(m < 0.5)) throw DomainError("thm3_bound_general: max(w_c, w_max) must be below 1/2");
  const double x = -phi_inv(m);
  return make_bound(tail_factor(x, epsilon) - wc);
}

BoundValue thm3_bound_general(const BoundInputs& in, const PartitionWeights& weights) {
  if (!(in.D > 0.0) || !(in.L > 0.0)) throw DomainError("bounds: D and L must be positive");
  return thm3_bound_general(in.epsilon(), weights);
}

double thm3_asymptotic(double epsilon, double M, double beta_bar) {
  if (!(beta_bar * M > 1.0)) throw DomainError("thm3_asymptotic: requires beta_bar * M > 1");
  return std::exp(-0.5 * epsilon * epsilon) *
         std::exp(-epsilon * std::sqrt(2.0 * std::log(beta_bar * M)));
}

double thm3_asymptotic(const BoundInputs& in) {
  in.validate();
  return thm3_asymptotic(in.epsilon(), in.M, in.beta_bar);
}

BoundValue partition_boundary_lower(double epsilon, const PartitionWeights& weights) {
  const auto fail = [] {
    throw DomainError("partition_boundary_lower: requires K >= 4 and w_k in (0,1/4] summing to 1");
  };
  if (weights.w.size() < 4 || !(epsilon >= 0.0)) fail();
  for (double v : weights.w) {
    if (!(v > 0.0 && v <= 0.25)) fail();
  }
  if (std::abs(weights.complement()) > 1e-12) fail();
  const double x = -phi_inv(weights.max());
  return make_bound(1.0 - tail_factor(x, epsilon));
}

double phi_inv_upper_q(double K) {
  if (!(K > 1.0)) throw DomainError("phi_inv_upper_q: K must exceed 1");
  return std::sqrt(2.0 * std::log(kSqrt2Pi * K));
}

double phi_inv_lower_crudeman(double K) {
  if (!(K >= 8.0)) throw DomainError("phi_inv_lower_crudeman: requires K >= 8, got " + fmt(K));
  const double q = phi_inv_upper_q(K);
  return std::sqrt(2.0 * std::log(K * (q * q - 1.0) / (kSqrt2Pi * q * q * q)));
}

}  // namespace ganland
