#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ganland {

/// Argument outside the domain of a special function or bound.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Standard normal c.d.f.
double phi(double x);

/// Standard normal quantile for p in (0, 1). Acklam's rational approximation
/// followed by one Newton step against phi.
double phi_inv(double p);

/// Principal branch of the Lambert W function, x >= -1/e.
double lambert_w0(double x);

/// Generator/target geometry feeding the precision bounds.
struct BoundInputs {
  double D = 9.0;         // distance between modes
  double L = 1.0;         // Lipschitz constant of the generator
  double M = 9.0;         // number of modes
  double beta_bar = 1.0;  // recall

  double epsilon() const { return D / (2.0 * L); }
  void validate() const;
};

/// Raw formula value and the value clamped to [0, 1].
struct BoundValue {
  double raw = 0.0;
  double clamped = 0.0;
};

BoundValue make_bound(double raw);

/// alpha + (2 eps / sqrt(2 pi)) exp(-phi_inv(alpha/2)^2 / 2) - 1; increasing in alpha.
double thm2_residual(double alpha, double epsilon);

/// Largest alpha in [0, 1] with a non-positive residual, by bisection.
double thm2_bound(double D, double L);

/// 1 - sqrt(2/pi) W(eps^2). Only meaningful when the bound is >= 3/4.
double thm2_bound_lambert(double D, double L);

/// (1 + x^2)/x^2 exp(-eps^2/2) exp(-eps x), x = phi_inv(1 - 1/(beta_bar M)).
/// Needs beta_bar M > 2 so that x > 0.
BoundValue thm3_bound(double epsilon, double M, double beta_bar);
BoundValue thm3_bound(const BoundInputs& in);

/// Mode masses w_1..w_K of a partition; whatever is left over is the complement.
struct PartitionWeights {
  std::vector<double> w;

  double complement() const;
  double max() const;
};

/// (1 + x^2)/x^2 exp(-eps^2/2) exp(-eps x) - w_c, x = phi_inv(1 - max(w_c, w_max)).
BoundValue thm3_bound_general(double epsilon, const PartitionWeights& weights);
BoundValue thm3_bound_general(const BoundInputs& in, const PartitionWeights& weights);

/// exp(-eps^2/2) exp(-eps sqrt(2 log(beta_bar M))).
double thm3_asymptotic(double epsilon, double M, double beta_bar);
double thm3_asymptotic(const BoundInputs& in);

/// Lower bound on the Gaussian measure of the eps-boundary between the cells
/// of a partition: 1 - (1 + x^2)/x^2 exp(-eps^2/2) exp(-eps x), x = phi_inv(1 - max w).
/// Requires K >= 4, every w_k in (0, 1/4] and sum w = 1.
BoundValue partition_boundary_lower(double epsilon, const PartitionWeights& weights);

/// Lower bound on phi_inv(1 - 1/K) for K >= 8:
/// sqrt(2 log(K (q^2 - 1) / (sqrt(2 pi) q^3))), q = sqrt(2 log(sqrt(2 pi) K)).
double phi_inv_lower_crudeman(double K);

/// q(K) = sqrt(2 log(sqrt(2 pi) K)), an upper bound on phi_inv(1 - 1/K).
double phi_inv_upper_q(double K);

}  // namespace ganland
