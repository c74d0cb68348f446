#include "ganland/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "ganland/experiment.hpp"

#ifndef GANLAND_VERSION
#define GANLAND_VERSION "0.0.0"
#endif

namespace ganland {

namespace fs = std::filesystem;

namespace {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

// Options shared by commands that start from an experiment config.
struct ConfigOptions {
  std::string config_path;
  std::uint64_t seed = 42;
  CLI::Option* seed_opt = nullptr;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> M;
  std::optional<double> D;

  void add(CLI::App* cmd, bool with_mixture = true) {
    cmd->add_option("--config", config_path, "JSON experiment config");
    seed_opt = cmd->add_option("--seed", seed, "master seed")->capture_default_str();
    cmd->add_option("--steps", steps, "override train.steps");
    if (with_mixture) {
      cmd->add_option("--M", M, "override mixture.M");
      cmd->add_option("--D", D, "override mixture.D");
    }
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (config_path.empty() || seed_opt->count() > 0) cfg.seed = seed;
    if (steps) cfg.train.steps = *steps;
    if (M) cfg.mixture.M = *M;
    if (D) cfg.mixture.D = *D;
    cfg.sync();
    cfg.validate();
    return cfg;
  }
};

std::string pr_json(const PrReport& pr, const std::optional<double>& hausdorff_value,
                    const std::optional<double>& frechet_value) {
  Json j;
  j["precision"] = pr.precision;
  j["recall"] = pr.recall;
  j["k"] = pr.k;
  j["n_x"] = pr.n_x;
  j["n_y"] = pr.n_y;
  if (hausdorff_value) j["hausdorff"] = *hausdorff_value;
  if (frechet_value) j["frechet"] = *frechet_value;
  return j.dump(2);
}

Json bound_or_null(const std::function<double()>& f) {
  try {
    return f();
  } catch (const DomainError&) {
    return nullptr;
  }
}

template <typename T>
std::vector<T> non_empty(const std::vector<T>& v, const std::string& what) {
  if (v.empty()) throw ConfigError(what + " must be nonempty");
  return v;
}

SampleSet latents_for(const Mlp& gen, std::size_t n, std::uint64_t seed) {
  return sample_latent(LatentSpec{gen.input_dim()}, n, derive_seed(seed, SeedDomain::kEval, 1));
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ganland: WGAN-GP on Gaussian mixtures, Jacobian-based truncation, precision bounds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", GANLAND_VERSION);

  // train
  ConfigOptions train_opts;
  std::string train_out;
  auto* train_cmd = app.add_subcommand("train", "train a generator; writes model.json, trace.csv, manifest.json");
  train_opts.add(train_cmd);
  train_cmd->add_option("--out", train_out, "output directory (default: config output_dir)");

  // sample
  std::string sample_model, sample_out;
  std::size_t sample_n = 2500;
  bool sample_real = false;
  ConfigOptions sample_opts;
  auto* sample_cmd = app.add_subcommand("sample", "write generated (--model) or real (--real) points as CSV");
  sample_opts.add(sample_cmd);
  sample_cmd->add_option("--model", sample_model, "generator checkpoint");
  sample_cmd->add_flag("--real", sample_real, "sample the target mixture instead");
  sample_cmd->add_option("--n", sample_n, "number of points")->capture_default_str();
  sample_cmd->add_option("--out", sample_out, "CSV path (stdout if omitted)");

  // jbt
  std::string jbt_model, jbt_out, jbt_method = "stochastic";
  std::size_t jbt_n = 2500, jbt_probes = 10;
  double jbt_keep = 0.7, jbt_sigma = 1e-3;
  std::uint64_t jbt_seed = 42;
  bool jbt_no_check = false;
  auto* jbt_cmd = app.add_subcommand("jbt", "Jacobian-based truncation of fresh generated samples");
  jbt_cmd->add_option("--model", jbt_model, "generator checkpoint")->required();
  jbt_cmd->add_option("--n", jbt_n, "number of latents")->capture_default_str();
  jbt_cmd->add_option("--keep", jbt_keep, "keep ratio in (0, 1]")->capture_default_str();
  jbt_cmd->add_option("--sigma", jbt_sigma, "probe std")->capture_default_str();
  jbt_cmd->add_option("--probes", jbt_probes, "probes per latent")->capture_default_str();
  jbt_cmd->add_option("--method", jbt_method, "exact | stochastic")->capture_default_str();
  jbt_cmd->add_flag("--no-sigma-check", jbt_no_check, "allow sigma outside [1e-4, 1e-2]");
  jbt_cmd->add_option("--seed", jbt_seed, "seed")->capture_default_str();
  jbt_cmd->add_option("--out", jbt_out, "CSV path (stdout if omitted)");

  // metrics
  std::string met_real, met_fake, met_out;
  std::size_t met_k = 3;
  bool met_no_dist = false;
  auto* met_cmd = app.add_subcommand("metrics", "improved precision/recall of --fake against --real");
  met_cmd->add_option("--real", met_real, "real points CSV")->required();
  met_cmd->add_option("--fake", met_fake, "generated points CSV")->required();
  met_cmd->add_option("--k", met_k, "neighbour count")->capture_default_str();
  met_cmd->add_flag("--no-distances", met_no_dist, "skip Hausdorff and Frechet distances");
  met_cmd->add_option("--out", met_out, "JSON path (stdout if omitted)");

  // marginal
  std::string mar_model, mar_real, mar_out, mar_svg, mar_method = "stochastic";
  std::size_t mar_n = 2500, mar_buckets = 10, mar_k = 3, mar_probes = 10;
  double mar_sigma = 1e-3;
  std::uint64_t mar_seed = 42;
  auto* mar_cmd = app.add_subcommand("marginal", "marginal precision curve over JFN-ordered buckets");
  mar_cmd->add_option("--model", mar_model, "generator checkpoint")->required();
  mar_cmd->add_option("--real", mar_real, "real points CSV")->required();
  mar_cmd->add_option("--n", mar_n, "number of latents")->capture_default_str();
  mar_cmd->add_option("--buckets", mar_buckets, "number of equal-ratio buckets (10 = deciles)")->capture_default_str();
  mar_cmd->add_option("--k", mar_k, "neighbour count")->capture_default_str();
  mar_cmd->add_option("--sigma", mar_sigma, "probe std")->capture_default_str();
  mar_cmd->add_option("--probes", mar_probes, "probes per latent")->capture_default_str();
  mar_cmd->add_option("--method", mar_method, "exact | stochastic")->capture_default_str();
  mar_cmd->add_option("--seed", mar_seed, "seed")->capture_default_str();
  mar_cmd->add_option("--out", mar_out, "CSV path (stdout if omitted)");
  mar_cmd->add_option("--svg", mar_svg, "SVG line plot path");

  // heatmap
  ConfigOptions heat_opts;
  std::vector<std::size_t> heat_M{4, 9, 25};
  std::vector<double> heat_D{9, 18, 27};
  std::size_t heat_reps = 3;
  std::optional<std::size_t> heat_threads;
  std::string heat_out;
  auto* heat_cmd = app.add_subcommand("heatmap", "precision over an (M, D) grid, one training run per cell and seed");
  heat_opts.add(heat_cmd, false);
  heat_cmd->add_option("--M", heat_M, "mode counts (perfect squares)")->delimiter(',')->capture_default_str();
  heat_cmd->add_option("--D", heat_D, "mode distances")->delimiter(',')->capture_default_str();
  heat_cmd->add_option("--replicates", heat_reps, "training runs per cell")->capture_default_str();
  heat_cmd->add_option("--threads", heat_threads, "worker threads (default: GANLAND_THREADS or all cores)");
  heat_cmd->add_option("--out", heat_out, "output directory (default: config output_dir)");

  // bounds
  double b_D = 9.0, b_L = 1.0, b_M = 9.0, b_beta = 1.0;
  std::vector<double> b_Ms, b_Ds;
  std::string b_out;
  auto* b_cmd = app.add_subcommand("bounds", "evaluate the precision upper bounds");
  b_cmd->add_option("--D", b_D, "mode distance")->capture_default_str();
  b_cmd->add_option("--L", b_L, "generator Lipschitz constant")->capture_default_str();
  b_cmd->add_option("--M", b_M, "number of modes")->capture_default_str();
  b_cmd->add_option("--beta-bar", b_beta, "recall")->capture_default_str();
  b_cmd->add_option("--M-list", b_Ms, "heatmap mode: mode counts")->delimiter(',');
  b_cmd->add_option("--D-list", b_Ds, "heatmap mode: mode distances")->delimiter(',');
  b_cmd->add_option("--out", b_out, "output path (stdout if omitted)");

  // pr-convergence
  std::string conv_family = "half-overlap";
  std::vector<std::size_t> conv_n{100, 1000, 10000};
  std::size_t conv_seeds = 20;
  std::uint64_t conv_seed = 42;
  std::string conv_out;
  auto* conv_cmd = app.add_subcommand("pr-convergence", "improved precision on 1-D uniforms with known overlap");
  conv_cmd->add_option("--family", conv_family, "identical | half-overlap | disjoint")->capture_default_str();
  conv_cmd->add_option("--n", conv_n, "sample sizes")->delimiter(',')->capture_default_str();
  conv_cmd->add_option("--seeds", conv_seeds, "repetitions per n")->capture_default_str();
  conv_cmd->add_option("--seed", conv_seed, "seed")->capture_default_str();
  conv_cmd->add_option("--out", conv_out, "CSV path (stdout if omitted)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train_cmd) {
      Stopwatch sw;
      ExperimentConfig cfg = train_opts.resolve();
      const fs::path dir = train_out.empty() ? fs::path(cfg.output_dir) : fs::path(train_out);
      RunManifest manifest{GANLAND_VERSION, "train", to_json(cfg), {}, {}};
      manifest.stage_seconds.emplace_back("setup", sw.lap());
      TrainResult result;
      try {
        result = train(cfg.mixture.spec(), cfg.train, [&](const TraceRow& r) {
          std::ostringstream line;
          line << std::setprecision(4) << "step " << r.step << " precision " << r.precision << " recall "
               << r.recall << "\n";
          err << line.str();
        });
      } catch (const DivergenceError& e) {
        if (e.last_good()) save_checkpoint(dir / "last_good.json", *e.last_good());
        throw;
      }
      manifest.stage_seconds.emplace_back("train", sw.lap());
      Mlp gen = result.generator;
      gen.meta = "lipschitz_upper=" + format_double(result.lipschitz);
      save_checkpoint(dir / "model.json", gen);
      std::vector<std::vector<double>> rows;
      for (const auto& r : result.trace) {
        rows.push_back({static_cast<double>(r.step), r.disc_loss, r.gen_loss, r.precision, r.recall});
      }
      write_csv(dir / "trace.csv", {"step", "disc_loss", "gen_loss", "precision", "recall"}, rows);
      manifest.stage_seconds.emplace_back("write", sw.lap());
      manifest.add_artifact(dir / "model.json");
      manifest.add_artifact(dir / "trace.csv");
      manifest.write(dir / "manifest.json");
      out << "wrote " << (dir / "model.json").string() << " and " << (dir / "trace.csv").string()
          << " (lipschitz upper bound " << format_double(result.lipschitz) << ")\n";
      return kExitOk;
    }

    if (*sample_cmd) {
      ExperimentConfig cfg = sample_opts.resolve();
      Tensor points;
      if (sample_real == !sample_model.empty()) throw ConfigError("sample: give exactly one of --model or --real");
      if (sample_real) {
        points = sample_mixture(cfg.mixture.spec(), sample_n, derive_seed(cfg.seed, SeedDomain::kEval, 0)).points;
      } else {
        const Mlp gen = load_checkpoint(sample_model);
        points = forward(gen, latents_for(gen, sample_n, cfg.seed).points);
      }
      std::vector<std::vector<double>> rows;
      for (std::size_t r = 0; r < points.rows(); ++r) rows.emplace_back(points.row(r).begin(), points.row(r).end());
      write_text(sample_out, csv_text(point_header(points.cols()), rows), out);
      return kExitOk;
    }

    if (*jbt_cmd) {
      const Mlp gen = load_checkpoint(jbt_model);
      JbtConfig jc;
      jc.keep_ratio = jbt_keep;
      jc.sigma = jbt_sigma;
      jc.probes = jbt_probes;
      jc.method = parse_jfn_method(jbt_method);
      jc.check_sigma_range = !jbt_no_check;
      jc.seed = jbt_seed;
      const JbtResult r = jbt_filter(gen, latents_for(gen, jbt_n, jbt_seed), jc);
      auto header = point_header(gen.output_dim());
      header.push_back("jfn");
      header.push_back("kept");
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < r.outputs.rows(); ++i) {
        std::vector<double> row(r.outputs.row(i).begin(), r.outputs.row(i).end());
        row.push_back(r.jfn[i]);
        row.push_back(r.kept_mask[i] ? 1.0 : 0.0);
        rows.push_back(std::move(row));
      }
      write_text(jbt_out, csv_text(header, rows), out);
      return kExitOk;
    }

    if (*met_cmd) {
      const SampleSet real{read_points_csv(met_real), Origin::kReal, 0};
      const SampleSet fake{read_points_csv(met_fake), Origin::kGenerated, 0};
      const PrReport pr = improved_pr(fake, real, met_k);
      std::optional<double> h, f;
      if (!met_no_dist) {
        h = hausdorff(fake, real);
        if (fake.size() > fake.dim() && real.size() > real.dim()) f = frechet_gaussian(fake, real);
      }
      write_text(met_out, pr_json(pr, h, f) + "\n", out);
      return kExitOk;
    }

    if (*mar_cmd) {
      if (mar_buckets == 0) throw ConfigError("marginal: --buckets must be positive");
      const Mlp gen = load_checkpoint(mar_model);
      const SampleSet real{read_points_csv(mar_real), Origin::kReal, 0};
      const SampleSet latents = latents_for(gen, mar_n, mar_seed);
      JbtConfig jc;
      jc.sigma = mar_sigma;
      jc.probes = mar_probes;
      jc.method = parse_jfn_method(mar_method);
      jc.seed = mar_seed;
      jc.validate();
      const std::vector<double> scores = jfn_scores(gen, latents.points, jc);
      std::vector<double> ratios;
      for (std::size_t i = 1; i <= mar_buckets; ++i) {
        ratios.push_back(i == mar_buckets ? 1.0 : static_cast<double>(i) / static_cast<double>(mar_buckets));
      }
      const MarginalCurve c =
          marginal_precision_curve(forward(gen, latents.points), scores, real, ratios, mar_k);
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < c.kept_ratios.size(); ++i) {
        rows.push_back({c.kept_ratios[i], c.marginal_precision[i], c.cumulative_precision[i]});
      }
      for (std::size_t i = 0; i < c.merged.size(); ++i) {
        if (c.merged[i]) err << "bucket ending at ratio " << format_double(c.kept_ratios[i]) << " absorbed empty buckets\n";
      }
      write_text(mar_out, csv_text({"ratio", "marginal_precision", "cumulative_precision"}, rows), out);
      if (!mar_svg.empty()) {
        write_file_atomic(mar_svg, line_plot_svg("Marginal precision", "kept ratio", "precision", c.kept_ratios,
                                                 {{"marginal", c.marginal_precision},
                                                  {"cumulative", c.cumulative_precision}}));
      }
      return kExitOk;
    }

    if (*heat_cmd) {
      Stopwatch sw;
      ExperimentConfig cfg = heat_opts.resolve();
      const fs::path dir = heat_out.empty() ? fs::path(cfg.output_dir) : fs::path(heat_out);
      RunManifest manifest{GANLAND_VERSION, "heatmap", to_json(cfg), {}, {}};
      const std::size_t threads = heat_threads ? *heat_threads : default_thread_count();
      const auto cells = run_heatmap(cfg, non_empty(heat_M, "--M"), non_empty(heat_D, "--D"), heat_reps,
                                     threads, [&](const std::string& line) { err << line << "\n"; });
      manifest.stage_seconds.emplace_back("train+evaluate", sw.lap());
      std::vector<std::vector<double>> rows;
      std::vector<std::string> row_names, col_names;
      std::vector<std::vector<double>> grid, bound_grid;
      for (double D : heat_D) col_names.push_back("D=" + format_double(D));
      for (std::size_t i = 0; i < heat_M.size(); ++i) {
        row_names.push_back("M=" + std::to_string(heat_M[i]));
        grid.emplace_back();
        bound_grid.emplace_back();
        for (std::size_t j = 0; j < heat_D.size(); ++j) {
          const HeatmapCell& c = cells[i * heat_D.size() + j];
          rows.push_back({static_cast<double>(c.M), c.D, c.bound.clamped, c.mean_precision, c.mean_recall,
                          c.mean_lipschitz, c.bound.raw});
          grid.back().push_back(c.mean_precision);
          bound_grid.back().push_back(c.bound.clamped);
        }
      }
      write_csv(dir / "heatmap.csv", {"M", "D", "bound", "precision", "recall", "lipschitz", "bound_raw"}, rows);
      write_file_atomic(dir / "heatmap.svg",
                        heatmap_svg("Measured precision", "modes", "mode distance", row_names, col_names, grid));
      write_file_atomic(dir / "bound.svg",
                        heatmap_svg("Precision upper bound", "modes", "mode distance", row_names, col_names, bound_grid));
      manifest.stage_seconds.emplace_back("write", sw.lap());
      for (const char* f : {"heatmap.csv", "heatmap.svg", "bound.svg"}) manifest.add_artifact(dir / f);
      manifest.write(dir / "manifest.json");
      out << "wrote " << (dir / "heatmap.csv").string() << "\n";
      return kExitOk;
    }

    if (*b_cmd) {
      if (!b_Ms.empty() || !b_Ds.empty()) {
        std::vector<std::vector<double>> rows;
        for (double M : non_empty(b_Ms, "--M-list")) {
          for (double D : non_empty(b_Ds, "--D-list")) {
            double v = std::nan("");
            try {
              v = thm3_bound(BoundInputs{D, b_L, M, b_beta}).clamped;
            } catch (const DomainError&) {
            }
            rows.push_back({M, D, v});
          }
        }
        write_text(b_out, csv_text({"M", "D", "bound"}, rows), out);
        return kExitOk;
      }
      const BoundInputs in{b_D, b_L, b_M, b_beta};
      in.validate();
      Json j;
      j["inputs"] = {{"D", in.D}, {"L", in.L}, {"M", in.M}, {"beta_bar", in.beta_bar}, {"epsilon", in.epsilon()}};
      Json raw, clamped;
      raw["thm2"] = thm2_bound(in.D, in.L);
      raw["thm2_lambert"] = thm2_bound_lambert(in.D, in.L);
      raw["thm3"] = bound_or_null([&] { return thm3_bound(in).raw; });
      raw["thm3_asymptotic"] = thm3_asymptotic(in);
      for (const auto& [key, v] : raw.items()) {
        clamped[key] = v.is_null() ? Json(nullptr) : Json(std::clamp(v.get<double>(), 0.0, 1.0));
      }
      j["raw"] = raw;
      j["clamped"] = clamped;
      write_text(b_out, j.dump(2) + "\n", out);
      return kExitOk;
    }

    if (*conv_cmd) {
      const auto rows = pr_convergence_experiment(parse_overlap_family(conv_family), non_empty(conv_n, "--n"),
                                                  conv_seeds, conv_seed);
      std::vector<std::vector<double>> table;
      for (const auto& r : rows) {
        table.push_back({static_cast<double>(r.n), static_cast<double>(r.k), r.target, r.mean_precision,
                         r.abs_error, r.max_seed_error});
      }
      write_text(conv_out,
                 csv_text({"n", "k", "target", "mean_precision", "abs_error", "max_seed_error"}, table), out);
      return kExitOk;
    }
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {  // ConfigError, ContractError, DimensionError
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace ganland
