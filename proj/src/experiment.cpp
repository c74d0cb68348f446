#include "ganland/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <set>
#include <thread>

namespace ganland {

namespace {

// Reads the keys of `j` into `fields`, rejecting unknown ones.
class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <typename T>
  Reader& get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return *this;
    try {
      out = j_.at(key).get<T>();
    } catch (const Json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
    return *this;
  }

  const Json* child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

GaussianMixtureSpec MixtureConfig::spec() const {
  const auto root = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(M))));
  if (M == 0 || root * root != M) throw ConfigError("mixture.M must be a perfect square");
  if (!(D > 0.0)) throw ConfigError("mixture.D must be positive");
  return GaussianMixtureSpec::grid(M, D, component_std);
}

void ExperimentConfig::sync() {
  train.seed = seed;
  jbt.seed = seed;
  train.eval_k = metrics.k;
  train.eval_samples = metrics.n_eval;
}

void ExperimentConfig::validate() const {
  try {
    mixture.spec().validate();
    train.validate();
    jbt.validate();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  if (metrics.k == 0) throw ConfigError("metrics.k must be positive");
  if (metrics.n_eval < metrics.k + 1) throw ConfigError("metrics.n_eval must be at least k + 1");
}

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig cfg;
  Reader top(j, "config");
  top.get("seed", cfg.seed).get("output_dir", cfg.output_dir);
  if (const Json* m = top.child("mixture")) {
    Reader r(*m, "mixture");
    r.get("M", cfg.mixture.M).get("D", cfg.mixture.D).get("component_std", cfg.mixture.component_std);
    r.finish();
  }
  if (const Json* t = top.child("train")) {
    TrainConfig& c = cfg.train;
    Reader r(*t, "train");
    r.get("gen_hidden", c.gen_hidden)
        .get("disc_hidden", c.disc_hidden)
        .get("gen_activation", c.gen_activation)
        .get("disc_activation", c.disc_activation)
        .get("leaky_slope", c.leaky_slope)
        .get("batch_size", c.batch_size)
        .get("gp_weight", c.gp_weight)
        .get("lr", c.lr)
        .get("adam_beta1", c.adam_beta1)
        .get("adam_beta2", c.adam_beta2)
        .get("adam_eps", c.adam_eps)
        .get("steps", c.steps)
        .get("disc_steps_per_gen_step", c.disc_steps_per_gen_step)
        .get("latent_dim", c.latent_dim)
        .get("trace_interval", c.trace_interval);
    r.finish();
  }
  if (const Json* b = top.child("jbt")) {
    JbtConfig& c = cfg.jbt;
    Reader r(*b, "jbt");
    std::string method = to_string(c.method);
    r.get("keep_ratio", c.keep_ratio)
        .get("sigma", c.sigma)
        .get("probes", c.probes)
        .get("method", method)
        .get("check_sigma_range", c.check_sigma_range);
    r.finish();
    try {
      c.method = parse_jfn_method(method);
    } catch (const ContractError& e) {
      throw ConfigError(e.what());
    }
  }
  if (const Json* m = top.child("metrics")) {
    Reader r(*m, "metrics");
    r.get("k", cfg.metrics.k).get("n_eval", cfg.metrics.n_eval);
    r.finish();
  }
  top.finish();
  cfg.sync();
  cfg.validate();
  return cfg;
}

Json to_json(const ExperimentConfig& cfg) {
  const TrainConfig& t = cfg.train;
  Json j;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["mixture"] = {{"M", cfg.mixture.M}, {"D", cfg.mixture.D}, {"component_std", cfg.mixture.component_std}};
  j["train"] = {{"gen_hidden", t.gen_hidden},
                {"disc_hidden", t.disc_hidden},
                {"gen_activation", t.gen_activation},
                {"disc_activation", t.disc_activation},
                {"leaky_slope", t.leaky_slope},
                {"batch_size", t.batch_size},
                {"gp_weight", t.gp_weight},
                {"lr", t.lr},
                {"adam_beta1", t.adam_beta1},
                {"adam_beta2", t.adam_beta2},
                {"adam_eps", t.adam_eps},
                {"steps", t.steps},
                {"disc_steps_per_gen_step", t.disc_steps_per_gen_step},
                {"latent_dim", t.latent_dim},
                {"trace_interval", t.trace_interval}};
  j["jbt"] = {{"keep_ratio", cfg.jbt.keep_ratio},
              {"sigma", cfg.jbt.sigma},
              {"probes", cfg.jbt.probes},
              {"method", to_string(cfg.jbt.method)},
              {"check_sigma_range", cfg.jbt.check_sigma_range}};
  j["metrics"] = {{"k", cfg.metrics.k}, {"n_eval", cfg.metrics.n_eval}};
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

EvalSets evaluation_sets(const ExperimentConfig& cfg) {
  ExperimentConfig c = cfg;
  c.sync();
  return eval_sets(c.mixture.spec(), c.train);
}

RunEvaluation evaluate_generator(const Mlp& gen, const ExperimentConfig& cfg,
                                 const std::vector<double>& ratios) {
  const EvalSets ev = evaluation_sets(cfg);
  JbtConfig jc = cfg.jbt;
  jc.seed = cfg.seed;
  RunEvaluation r;
  r.jbt = jbt_filter(gen, ev.latents, jc);
  const SampleSet all{r.jbt.outputs, Origin::kGenerated, cfg.seed};
  r.full = improved_pr(all, ev.real, cfg.metrics.k);
  r.truncated = improved_pr(r.jbt.kept, ev.real, cfg.metrics.k);
  r.curve = marginal_precision_curve(r.jbt.outputs, r.jbt.jfn, ev.real, ratios, cfg.metrics.k);
  return r;
}

std::uint64_t cell_seed(std::uint64_t seed, std::size_t M, double D) {
  return seed ^ fnv1a(std::to_string(M) + "," + format_double(D));
}

std::size_t default_thread_count() {
  if (const char* env = std::getenv("GANLAND_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<HeatmapCell> run_heatmap(const ExperimentConfig& base, const std::vector<std::size_t>& Ms,
                                     const std::vector<double>& Ds, std::size_t replicates,
                                     std::size_t threads,
                                     const std::function<void(const std::string&)>& log) {
  if (Ms.empty() || Ds.empty()) throw ConfigError("heatmap: M and D grids must be nonempty");
  if (replicates == 0) throw ConfigError("heatmap: need at least one replicate");
  std::vector<HeatmapCell> cells;
  for (std::size_t M : Ms) {
    for (double D : Ds) {
      HeatmapCell c;
      c.M = M;
      c.D = D;
      c.precision.assign(replicates, std::nan(""));
      c.recall.assign(replicates, std::nan(""));
      c.lipschitz.assign(replicates, std::nan(""));
      cells.push_back(std::move(c));
      ExperimentConfig probe = base;
      probe.mixture.M = M;
      probe.mixture.D = D;
      probe.validate();
    }
  }

  const std::size_t jobs = cells.size() * replicates;
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      HeatmapCell& cell = cells[job / replicates];
      const std::size_t rep = job % replicates;
      ExperimentConfig cfg = base;
      cfg.mixture.M = cell.M;
      cfg.mixture.D = cell.D;
      cfg.seed = derive_seed(cell_seed(base.seed, cell.M, cell.D), SeedDomain::kExperiment, rep);
      cfg.sync();
      cfg.train.trace_interval = 0;
      std::string note;
      try {
        const TrainResult tr = train(cfg.mixture.spec(), cfg.train);
        const EvalSets ev = evaluation_sets(cfg);
        const SampleSet fake{forward(tr.generator, ev.latents.points), Origin::kGenerated, cfg.seed};
        const PrReport pr = improved_pr(fake, ev.real, cfg.metrics.k);
        cell.precision[rep] = pr.precision;
        cell.recall[rep] = pr.recall;
        cell.lipschitz[rep] = tr.lipschitz;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", pr.precision);
        note = std::string("precision ") + buf;
      } catch (const DivergenceError& e) {
        note = std::string("diverged: ") + e.what();
      }
      if (log) {
        std::lock_guard lock(log_mutex);
        log("cell M=" + std::to_string(cell.M) + " D=" + format_double(cell.D) + " replicate " +
            std::to_string(rep) + ": " + note);
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(threads, jobs));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (HeatmapCell& c : cells) {
    auto mean = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;  // NaN propagates: a diverged replicate marks the cell
      return s / static_cast<double>(v.size());
    };
    c.mean_precision = mean(c.precision);
    c.mean_recall = mean(c.recall);
    c.mean_lipschitz = mean(c.lipschitz);
    c.bound = {std::nan(""), std::nan("")};
    if (std::isfinite(c.mean_lipschitz) && c.mean_lipschitz > 0.0) {
      try {
        c.bound = thm3_bound(BoundInputs{c.D, c.mean_lipschitz, static_cast<double>(c.M), 1.0});
      } catch (const DomainError&) {
      }
    }
  }
  return cells;
}

}  // namespace ganland
