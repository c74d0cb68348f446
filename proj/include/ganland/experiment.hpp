#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganland/bounds.hpp"
#include "ganland/io.hpp"
#include "ganland/jfn.hpp"
#include "ganland/metrics.hpp"
#include "ganland/train.hpp"

namespace ganland {

/// Invalid or unreadable experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MixtureConfig {
  std::size_t M = 9;
  double D = 9.0;
  double component_std = 0.0;  // <= 0: 0.05 D

  GaussianMixtureSpec spec() const;
};

struct MetricsConfig {
  std::size_t k = 3;
  std::size_t n_eval = 2500;
};

/// Everything one pipeline run needs. The top-level seed drives training,
/// evaluation sampling and the JFN probes.
struct ExperimentConfig {
  MixtureConfig mixture;
  TrainConfig train;
  JbtConfig jbt;
  MetricsConfig metrics;
  std::string output_dir = "out";
  std::uint64_t seed = 42;

  /// Copies seed and metric settings into the sub-configs.
  void sync();
  /// Throws ConfigError on any invalid field.
  void validate() const;
};

/// Unknown keys are rejected. Missing keys keep their defaults.
ExperimentConfig config_from_json(const Json& j);
Json to_json(const ExperimentConfig& cfg);
/// ConfigError (naming the path) if the file is missing or malformed.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Evaluation sets of a run: cfg.metrics.n_eval real points and as many
/// latents, from the evaluation streams of cfg.seed.
EvalSets evaluation_sets(const ExperimentConfig& cfg);

/// Full/truncated improved PR and the decile marginal-precision curve of a
/// trained generator on the evaluation sets.
struct RunEvaluation {
  PrReport full;
  PrReport truncated;
  JbtResult jbt;
  MarginalCurve curve;
};
RunEvaluation evaluate_generator(const Mlp& gen, const ExperimentConfig& cfg,
                                 const std::vector<double>& ratios = decile_ratios());

/// seed XOR fnv1a("M,D") with D printed to 17 digits.
std::uint64_t cell_seed(std::uint64_t seed, std::size_t M, double D);

struct HeatmapCell {
  std::size_t M = 0;
  double D = 0.0;
  std::vector<double> precision;  // one per replicate, NaN when training diverged
  std::vector<double> recall;
  std::vector<double> lipschitz;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_lipschitz = 0.0;
  BoundValue bound;  // thm3 with beta_bar = 1 and the mean Lipschitz estimate; NaN if undefined
};

/// One training run per (M, D, replicate). Replicate r of a cell uses seed
/// derive_seed(cell_seed(seed, M, D), kExperiment, r). Results do not depend
/// on the thread count.
std::vector<HeatmapCell> run_heatmap(const ExperimentConfig& base, const std::vector<std::size_t>& Ms,
                                     const std::vector<double>& Ds, std::size_t replicates,
                                     std::size_t threads,
                                     const std::function<void(const std::string&)>& log = {});

/// GANLAND_THREADS if set and positive, else the hardware concurrency.
std::size_t default_thread_count();

}  // namespace ganland
