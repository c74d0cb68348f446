#include "ganland/jfn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ganland/kdtree.hpp"
#include "ganland/metrics.hpp"
#include "ganland/rng.hpp"

namespace ganland {

std::string to_string(JfnMethod method) {
  return method == JfnMethod::kExact ? "exact" : "stochastic";
}

JfnMethod parse_jfn_method(const std::string& name) {
  if (name == "exact") return JfnMethod::kExact;
  if (name == "stochastic") return JfnMethod::kStochastic;
  throw ContractError("unknown JFN method '" + name + "'");
}

std::vector<Tensor> jacobians(const Mlp& gen, const Tensor& latents) {
  const std::size_t n = latents.rows();
  const std::size_t out_dim = gen.output_dim();
  const std::size_t in_dim = gen.input_dim();
  std::vector<Tensor> jac(n, Tensor(out_dim, in_dim));
  if (n == 0) return jac;
  Tape tape;
  const BoundMlp bound = bind(tape, gen, false);
  const Var z = tape.leaf(latents, true);
  const Var y = forward(tape, bound, z);
  const Var wrt[] = {z};
  for (std::size_t c = 0; c < out_dim; ++c) {
    Tensor seed(n, out_dim);
    for (std::size_t r = 0; r < n; ++r) seed(r, c) = 1.0;
    const auto g = tape.grad(y, wrt, tape.constant(std::move(seed)));
    if (!g[0]) continue;  // output does not depend on z
    const Tensor& rows = tape.value(*g[0]);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < in_dim; ++j) jac[r](c, j) = rows(r, j);
    }
  }
  return jac;
}

std::vector<double> jfn_exact(const Mlp& gen, const Tensor& latents) {
  const auto jac = jacobians(gen, latents);
  std::vector<double> out(jac.size());
  for (std::size_t r = 0; r < jac.size(); ++r) {
    double acc = 0.0;
    for (double v : jac[r].data()) acc += v * v;
    out[r] = std::sqrt(acc);
  }
  return out;
}

double jfn_exact(const Mlp& gen, std::span<const double> z) {
  return jfn_exact(gen, Tensor(1, z.size(), std::vector<double>(z.begin(), z.end())))[0];
}

std::vector<double> jfn_stochastic(const Mlp& gen, const Tensor& latents, double sigma,
                                   std::size_t probes, std::uint64_t seed) {
  if (!(sigma > 0.0)) throw ContractError("jfn_stochastic: sigma must be positive");
  if (probes == 0) throw ContractError("jfn_stochastic: need at least one probe");
  const std::size_t n = latents.rows();
  const std::size_t d = latents.cols();
  const std::size_t block = probes + 1;
  // Bound the forward batch; rows are independent so chunking does not change results.
  const std::size_t per_chunk = std::max<std::size_t>(1, (std::size_t{1} << 16) / block);
  std::vector<double> est(n);
  for (std::size_t lo = 0; lo < n; lo += per_chunk) {
    const std::size_t hi = std::min(n, lo + per_chunk);
    Tensor batch((hi - lo) * block, d);
    for (std::size_t r = lo; r < hi; ++r) {
      Rng rng(derive_seed(seed, SeedDomain::kProbe, r));
      const std::size_t at = (r - lo) * block;
      for (std::size_t j = 0; j < d; ++j) batch(at, j) = latents(r, j);
      for (std::size_t p = 1; p < block; ++p) {
        for (std::size_t j = 0; j < d; ++j) batch(at + p, j) = latents(r, j) + sigma * rng.normal();
      }
    }
    const Tensor out = forward(gen, batch);
    for (std::size_t r = lo; r < hi; ++r) {
      double acc = 0.0;
      const auto base = out.row((r - lo) * block);
      for (std::size_t p = 1; p < block; ++p) acc += squared_distance(out.row((r - lo) * block + p), base);
      est[r] = std::sqrt(acc / (static_cast<double>(probes) * sigma * sigma));
    }
  }
  return est;
}

double jfn_stochastic(const Mlp& gen, std::span<const double> z, double sigma, std::size_t probes,
                      std::uint64_t seed) {
  return jfn_stochastic(gen, Tensor(1, z.size(), std::vector<double>(z.begin(), z.end())), sigma,
                        probes, seed)[0];
}

void JbtConfig::validate() const {
  if (!(keep_ratio > 0.0 && keep_ratio <= 1.0)) throw ContractError("jbt: keep_ratio must lie in (0, 1]");
  if (probes == 0) throw ContractError("jbt: probes must be at least 1");
  if (!(sigma > 0.0)) throw ContractError("jbt: sigma must be positive");
  if (check_sigma_range && (sigma < 1e-4 || sigma > 1e-2)) {
    throw ContractError("jbt: sigma must lie in [1e-4, 1e-2] (disable the range check to override)");
  }
}

std::vector<double> jfn_scores(const Mlp& gen, const Tensor& latents, const JbtConfig& cfg) {
  if (cfg.method == JfnMethod::kExact) return jfn_exact(gen, latents);
  return jfn_stochastic(gen, latents, cfg.sigma, cfg.probes, cfg.seed);
}

JbtResult jbt_filter(const Mlp& gen, const SampleSet& latents, const JbtConfig& cfg) {
  cfg.validate();
  JbtResult r;
  const std::size_t n = latents.size();
  const std::size_t out_dim = gen.output_dim();
  r.kept = SampleSet{Tensor(0, out_dim), Origin::kGenerated, latents.seed};
  r.rejected = r.kept;
  if (n == 0) {
    r.outputs = Tensor(0, out_dim);
    return r;
  }
  r.outputs = forward(gen, latents.points);
  r.jfn = jfn_scores(gen, latents.points, cfg);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return r.jfn[a] < r.jfn[b]; });
  const std::size_t keep = keep_count(cfg.keep_ratio, n);
  r.kept_mask.assign(n, false);
  for (std::size_t i = 0; i < keep; ++i) r.kept_mask[order[i]] = true;

  std::vector<std::size_t> kept_idx;
  std::vector<std::size_t> rejected_idx;
  for (std::size_t i = 0; i < n; ++i) (r.kept_mask[i] ? kept_idx : rejected_idx).push_back(i);
  r.kept.points = r.outputs.gather_rows(kept_idx);
  r.rejected.points = r.outputs.gather_rows(rejected_idx);
  return r;
}

double spectral_norm(const Tensor& w) {
  if (w.size() == 0) return 0.0;
  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  Rng rng(0x5EEDF00DULL);
  std::vector<double> v(cols);
  for (auto& x : v) x = rng.normal();
  std::vector<double> wv(rows);
  double sigma = 0.0;
  constexpr int kMaxIter = 10000;
  for (int it = 0; it < kMaxIter; ++it) {
    double vnorm = 0.0;
    for (double x : v) vnorm += x * x;
    vnorm = std::sqrt(vnorm);
    if (vnorm == 0.0) return 0.0;
    for (auto& x : v) x /= vnorm;
    for (std::size_t i = 0; i < rows; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < cols; ++j) acc += w(i, j) * v[j];
      wv[i] = acc;
    }
    double next = 0.0;
    for (double x : wv) next += x * x;
    next = std::sqrt(next);
    for (std::size_t j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < rows; ++i) acc += w(i, j) * wv[i];
      v[j] = acc;
    }
    if (it > 0 && std::abs(next - sigma) <= 1e-10 * next) return next;
    sigma = next;
  }
  throw NumericError("spectral_norm: power iteration did not converge in 10000 iterations");
}

double lipschitz_upper(const Mlp& net) {
  if (!net.hidden_activation.contractive() || !net.output_activation.contractive()) {
    throw ContractError("lipschitz_upper: activations must be 1-Lipschitz");
  }
  double l = 1.0;
  for (const Tensor& w : net.weights) l *= spectral_norm(w);
  return l;
}

}  // namespace ganland
