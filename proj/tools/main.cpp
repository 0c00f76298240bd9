#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crtgee/dataset.hpp"
#include "crtgee/effects.hpp"
#include "crtgee/errors.hpp"
#include "crtgee/report.hpp"
#include "crtgee/study.hpp"
#include "crtgee/version.hpp"

namespace {

namespace fs = std::filesystem;
using namespace crtgee;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitPartial = 2;
constexpr int kExitInternal = 3;

struct AnalyzeArgs {
  std::string data;
  std::vector<std::string> methods;
  std::vector<std::string> covariates;
  std::string out = ".";
};

struct SimulateArgs {
  std::string config;
  unsigned workers = 0;
};

struct TruthArgs {
  std::string scenario;
  std::uint64_t seed = 20260825;
  double icc = 0.01;
  bool custom = false;
  int model = 1;
  std::string incidence = "low";
  int n_covariates = 6;
  double beta0 = 0.0;
  double beta_z = 0.0;
};

int run_analyze(const AnalyzeArgs& args) {
  ClusterDataset data = load_csv(args.data);
  if (!args.covariates.empty()) data = select_covariates(data, args.covariates);

  std::vector<Method> methods;
  for (const auto& name : args.methods) methods.push_back(parse_method(name));
  if (methods.empty()) throw ConfigError("--methods must name at least one");

  const fs::path out_dir(args.out);
  fs::create_directories(out_dir);

  std::vector<EffectEstimate> effects;
  effects.reserve(methods.size());
  for (const Method m : methods)
    effects.push_back(run_method(m, data, VarianceSet::all()));

  // Balance diagnostics: always the unweighted ASD, plus one weighted column
  // per requested weighting scheme (NA when the propensity fit failed).
  std::vector<WeightedAsd> weighted;
  std::optional<Eigen::VectorXd> scores;
  const bool wants_weighted =
      std::any_of(methods.begin(), methods.end(), [](Method m) {
        return m == Method::ipw_logit || m == Method::ow_logit;
      });
  if (wants_weighted) {
    try {
      const PropensityFit pf = estimate_propensity_logistic(data);
      if (pf.converged) scores = pf.scores;
    } catch (const Error&) {
    }
  }
  const Eigen::VectorXd z = stacked_treatment(data);
  for (const Method m : methods) {
    if (m != Method::ipw_logit && m != Method::ow_logit) continue;
    const auto kind = m == Method::ipw_logit ? WeightKind::ipw : WeightKind::ow;
    std::optional<Eigen::VectorXd> asd;
    if (scores)
      asd = absolute_standardized_difference(
          data, compute_weights(*scores, z, kind));
    weighted.emplace_back(to_string(m), asd);
  }

  write_effects_csv(out_dir / "effects.csv", effects);
  write_balance_csv(out_dir / "balance.csv", data.covariate_names(),
                    absolute_standardized_difference(data), weighted);
  write_analyze_summary_json(out_dir / "summary.json", args.data, args.methods,
                             effects);

  for (const auto& e : effects)
    if (!e.converged) return kExitPartial;
  return kExitOk;
}

int run_simulate(const SimulateArgs& args) {
  const StudyConfig cfg = load_study_config(args.config);
  const StudyResult result = run_study(cfg, args.workers);

  fs::create_directories(cfg.output_path);
  write_metrics_csv(cfg.output_path / "metrics.csv", result.metrics);
  write_study_summary_json(cfg.output_path / "summary.json", cfg, result);
  return kExitOk;
}

int run_truth(const TruthArgs& args) {
  SimConfig sim;
  if (!args.scenario.empty()) {
    if (args.custom)
      throw ConfigError("--scenario and --custom are mutually exclusive");
    const auto row = find_scenario(args.scenario);
    if (!row) throw ConfigError("unknown scenario key '" + args.scenario + "'");
    sim = config_from_scenario(*row, 2, 100.0, args.icc);
  } else {
    if (!args.custom)
      throw ConfigError("need --scenario <key> or --custom with parameters");
    sim.custom = true;
    sim.model = args.model;
    sim.incidence = parse_incidence(args.incidence);
    sim.n_covariates = args.n_covariates;
    sim.beta0 = args.beta0;
    sim.beta_z = args.beta_z;
    sim.n_clusters = 2;
    sim.mean_cluster_size = 100.0;
    sim.icc_latent = args.icc;
    sim.n_reps = 1;
  }
  sim.icc_latent = args.icc;
  sim.validate();

  const TruthSpec truth = compute_true_delta(sim, args.seed);
  std::printf("delta %.10g\np1 %.10g\np0 %.10g\n", truth.delta, truth.p1,
              truth.p0);
  std::printf("population_clusters %d\npopulation_mean_size %.10g\nseed %llu\n",
              truth.population_clusters, truth.population_mean_size,
              static_cast<unsigned long long>(args.seed));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GEE odds-ratio estimation for cluster-randomized trials with "
               "rare binary outcomes"};
  app.set_version_flag("--version",
                       std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand(
      "analyze", "Estimate treatment effects from a CSV dataset");
  analyze->add_option("--data", analyze_args.data, "Input CSV")->required();
  analyze
      ->add_option("--methods", analyze_args.methods,
                   "Comma-separated subset of crude,multi,ipw_logit,ow_logit")
      ->required()
      ->delimiter(',');
  analyze->add_option("--covariates", analyze_args.covariates,
                      "Restrict adjustment to these covariate names")
      ->delimiter(',');
  analyze->add_option("--out", analyze_args.out, "Output directory");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand(
      "simulate", "Run a Monte Carlo study described by a config file");
  simulate->add_option("--config", sim_args.config, "Config file")->required();
  simulate->add_option("--workers", sim_args.workers,
                       "Worker threads (overrides config and CRTGEE_WORKERS)");

  TruthArgs truth_args;
  auto* truth = app.add_subcommand(
      "truth", "Evaluate the population truth for a scenario");
  truth->add_option("--scenario", truth_args.scenario,
                    "Registry key, e.g. model1-low-p6");
  truth->add_option("--seed", truth_args.seed, "Oracle seed");
  truth->add_option("--icc", truth_args.icc, "Latent ICC (default 0.01)");
  truth->add_flag("--custom", truth_args.custom,
                  "Use explicit model parameters instead of a registry key");
  truth->add_option("--model", truth_args.model, "Generating model 1-4");
  truth->add_option("--incidence", truth_args.incidence, "low or very_low");
  truth->add_option("--n-covariates", truth_args.n_covariates, "6 or 15");
  truth->add_option("--beta0", truth_args.beta0, "Intercept");
  truth->add_option("--beta-z", truth_args.beta_z, "Treatment coefficient");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*analyze) return run_analyze(analyze_args);
    if (*simulate) return run_simulate(sim_args);
    return run_truth(truth_args);
  } catch (const CsvError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
}
