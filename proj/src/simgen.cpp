#include "crtgee/simgen.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "crtgee/errors.hpp"
#include "crtgee/rng.hpp"

namespace crtgee {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Substream tags; one independent stream per source of randomness.
enum StreamTag : std::uint64_t {
  kAssignment = 0,
  kClusterSizes = 1,
  kCovariates = 2,
  kRandomEffects = 3,
  kOutcomes = 4,
};

double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

long poisson_at_least_one(Rng& rng, double mean) {
  long k = 0;
  do {
    k = rng.poisson(mean);
  } while (k < 1);
  return k;
}

// Latent outcome draw: Y^c = lp + u + eps with logistic eps, then
// Y ~ Bernoulli(expit(Y^c)).  The explicit eps draw is what reproduces the
// registry incidences; folding eps into the expit does not.
int draw_outcome(Rng& rng, double lp_plus_u) {
  const double v = rng.uniform();
  const double eps = std::log(v / (1.0 - v));
  return rng.bernoulli(expit(lp_plus_u + eps));
}

// Fixed-effect part of the latent outcome for one subject.
double linear_predictor(const SimConfig& cfg, const Eigen::VectorXd& x, int z) {
  const double zd = static_cast<double>(z);
  if (cfg.model <= 2) {
    const int block = cfg.n_covariates / 3;
    const double b1 = cfg.model == 1 ? 0.0 : 0.8;
    const double b2 = cfg.model == 1 ? 0.4 : 1.6;
    const double b3 = cfg.model == 1 ? 0.8 : 2.4;
    double s = cfg.beta0 + cfg.beta_z * zd;
    for (int p = 0; p < cfg.n_covariates; ++p)
      s += (p < block ? b1 : p < 2 * block ? b2 : b3) * x[p];
    return s;
  }
  const double x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3], x5 = x[4], x6 = x[5];
  if (cfg.model == 3) {
    return cfg.beta0 - 3.0 / (1.0 + std::exp(-6.0 * (x1 + x2 + x3 + x4))) +
           0.5 * (x5 + x6) + 2.0 * x5 * x6 +
           (1.8 * (x3 + x4) - 2.0 / (1.0 + std::exp(-4.0 * (x5 + x6))) +
            cfg.beta_z) *
               zd;
  }
  return cfg.beta0 - 3.0 / (2.0 * (1.0 + std::exp(-4.0 * (x1 + x2)))) +
         2.0 * std::sin(x3 + x4) + 1.8 * (x1 * x3 + x2 * x4) + x5 + x6 -
         1.5 * x5 * x6 +
         (-1.5 * (x3 + x4) + 2.0 / (1.0 + std::exp(-2.0 * (x5 + x6))) +
          cfg.beta_z) *
             zd;
}

// Lower Cholesky factor of the models 3-4 covariate correlation (unit
// diagonal, 0.1 off-diagonal).
Eigen::MatrixXd covariate_chol(int p) {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(p, p, 0.1);
  sigma.diagonal().setOnes();
  return Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();
}

Eigen::VectorXd draw_covariates(Rng& rng, const SimConfig& cfg,
                                const Eigen::MatrixXd& chol) {
  Eigen::VectorXd x(cfg.n_covariates);
  for (int p = 0; p < cfg.n_covariates; ++p) x[p] = rng.normal();
  if (cfg.model >= 3) x = chol * x;
  return x;
}

}  // namespace

std::string to_string(Incidence incidence) {
  return incidence == Incidence::low ? "low" : "very_low";
}

Incidence parse_incidence(const std::string& text) {
  if (text == "low") return Incidence::low;
  if (text == "very_low") return Incidence::very_low;
  throw ConfigError("incidence must be 'low' or 'very_low', got '" + text +
                    "'");
}

const std::vector<ScenarioRow>& scenario_registry() {
  static const std::vector<ScenarioRow> rows = {
      {1, Incidence::low, 6, -3.6, -1.2, 0.0455, 0.0987, -0.8317},
      {1, Incidence::very_low, 6, -4.7, -1.1, 0.0224, 0.0490, -0.8103},
      {1, Incidence::low, 15, -4.2, -1.2, 0.0484, 0.0954, -0.7292},
      {1, Incidence::very_low, 15, -5.4, -1.2, 0.0221, 0.0486, -0.8155},
      {2, Incidence::low, 6, -6.4, -1.8, 0.0490, 0.0974, -0.7392},
      {2, Incidence::very_low, 6, -8.1, -1.7, 0.0240, 0.0507, -0.7756},
      {2, Incidence::low, 15, -9.0, -2.4, 0.0559, 0.1045, -0.6785},
      {2, Incidence::very_low, 15, -11.8, -2.2, 0.0254, 0.0499, -0.7007},
      {3, Incidence::low, 6, -4.8, -2.8, 0.0498, 0.0988, -0.7380},
      {3, Incidence::very_low, 6, -6.6, -4.2, 0.0253, 0.0511, -0.7298},
      {4, Incidence::low, 6, -4.9, -3.0, 0.0504, 0.1004, -0.7433},
      {4, Incidence::very_low, 6, -6.6, -3.2, 0.0246, 0.0490, -0.7144},
  };
  return rows;
}

std::string scenario_key(const ScenarioRow& row) {
  return "model" + std::to_string(row.model) + "-" + to_string(row.incidence) +
         "-p" + std::to_string(row.n_covariates);
}

std::optional<ScenarioRow> find_scenario(const std::string& key) {
  for (const auto& row : scenario_registry())
    if (scenario_key(row) == key) return row;
  return std::nullopt;
}

void SimConfig::validate() const {
  if (model < 1 || model > 4) throw ValidationError("model must be 1..4");
  if (n_covariates != 6 && n_covariates != 15)
    throw ValidationError("n_covariates must be 6 or 15");
  if (model >= 3 && n_covariates != 6)
    throw ValidationError("models 3 and 4 require 6 covariates");
  if (n_clusters < 2 || n_clusters % 2 != 0)
    throw ValidationError("n_clusters must be a positive even integer");
  if (!(mean_cluster_size >= 1.0 && mean_cluster_size <= 500.0))
    throw ValidationError("mean_cluster_size must be in [1, 500]");
  if (!(icc_latent >= 0.0 && icc_latent < 1.0))
    throw ValidationError("icc_latent must be in [0, 1)");
  if (n_reps < 1) throw ValidationError("n_reps must be positive");
  if (!custom) {
    for (const auto& row : scenario_registry()) {
      if (row.model == model && row.incidence == incidence &&
          row.n_covariates == n_covariates && row.beta0 == beta0 &&
          row.beta_z == beta_z)
        return;
    }
    throw ValidationError(
        "(model, incidence, n_covariates, beta0, beta_z) matches no registry "
        "row; set custom = true to override");
  }
}

SimConfig config_from_scenario(const ScenarioRow& row, int n_clusters,
                               double mean_cluster_size, double icc_latent) {
  SimConfig cfg;
  cfg.model = row.model;
  cfg.incidence = row.incidence;
  cfg.n_covariates = row.n_covariates;
  cfg.beta0 = row.beta0;
  cfg.beta_z = row.beta_z;
  cfg.n_clusters = n_clusters;
  cfg.mean_cluster_size = mean_cluster_size;
  cfg.icc_latent = icc_latent;
  cfg.n_reps = 1;
  return cfg;
}

double latent_sd(double icc_latent) {
  if (!(icc_latent >= 0.0 && icc_latent < 1.0))
    throw ValidationError("icc_latent must be in [0, 1)");
  return std::sqrt(icc_latent / (1.0 - icc_latent) * kPi * kPi / 3.0);
}

ClusterDataset generate_dataset(const SimConfig& cfg, std::uint64_t rep_index) {
  cfg.validate();
  const int n = cfg.n_clusters;
  const double sigma_u = latent_sd(cfg.icc_latent);

  Rng assign_rng = Rng::substream(cfg.master_seed, rep_index, kAssignment);
  Rng size_rng = Rng::substream(cfg.master_seed, rep_index, kClusterSizes);
  Rng cov_rng = Rng::substream(cfg.master_seed, rep_index, kCovariates);
  Rng raneff_rng = Rng::substream(cfg.master_seed, rep_index, kRandomEffects);
  Rng outcome_rng = Rng::substream(cfg.master_seed, rep_index, kOutcomes);

  // 1:1 randomization: exactly n/2 treated, order shuffled (Fisher-Yates).
  std::vector<int> arm(n, 0);
  for (int i = 0; i < n / 2; ++i) arm[i] = 1;
  for (int i = n - 1; i > 0; --i) {
    const auto j =
        static_cast<int>(assign_rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(arm[i], arm[j]);
  }

  const Eigen::MatrixXd chol =
      cfg.model >= 3 ? covariate_chol(cfg.n_covariates) : Eigen::MatrixXd();

  std::vector<Cluster> clusters;
  clusters.reserve(n);
  std::vector<std::string> names;
  for (int p = 1; p <= cfg.n_covariates; ++p)
    names.push_back("x" + std::to_string(p));

  for (int i = 0; i < n; ++i) {
    const long m = poisson_at_least_one(size_rng, cfg.mean_cluster_size);
    const double u = raneff_rng.normal(0.0, sigma_u);
    Cluster cl;
    cl.id = "c" + std::to_string(i + 1);
    cl.treatment = arm[i];
    cl.outcomes.resize(m);
    cl.covariates.resize(m, cfg.n_covariates);
    for (long j = 0; j < m; ++j) {
      const Eigen::VectorXd x = draw_covariates(cov_rng, cfg, chol);
      cl.covariates.row(j) = x.transpose();
      const double lp = linear_predictor(cfg, x, arm[i]);
      cl.outcomes[j] = draw_outcome(outcome_rng, lp + u);
    }
    clusters.push_back(std::move(cl));
  }
  return ClusterDataset(std::move(clusters), names);
}

TruthSpec compute_true_delta(const SimConfig& cfg, std::uint64_t oracle_seed) {
  cfg.validate();
  constexpr int kPopulationClusters = 5000;
  constexpr double kPopulationMeanSize = 100.0;
  const double sigma_u = latent_sd(cfg.icc_latent);
  const Eigen::MatrixXd chol =
      cfg.model >= 3 ? covariate_chol(cfg.n_covariates) : Eigen::MatrixXd();

  // Per-cluster substreams keyed by cluster index, so the accumulation is
  // order-free and could be sharded.
  double events1 = 0.0, events0 = 0.0, total = 0.0;
  for (int i = 0; i < kPopulationClusters; ++i) {
    Rng size_rng = Rng::substream(oracle_seed, i, kClusterSizes);
    Rng cov_rng = Rng::substream(oracle_seed, i, kCovariates);
    Rng raneff_rng = Rng::substream(oracle_seed, i, kRandomEffects);
    Rng outcome_rng = Rng::substream(oracle_seed, i, kOutcomes);
    const long m = poisson_at_least_one(size_rng, kPopulationMeanSize);
    const double u = raneff_rng.normal(0.0, sigma_u);
    for (long j = 0; j < m; ++j) {
      const Eigen::VectorXd x = draw_covariates(cov_rng, cfg, chol);
      events1 += draw_outcome(outcome_rng, linear_predictor(cfg, x, 1) + u);
      events0 += draw_outcome(outcome_rng, linear_predictor(cfg, x, 0) + u);
      total += 1.0;
    }
  }

  TruthSpec truth;
  truth.p1 = events1 / total;
  truth.p0 = events0 / total;
  const auto logit = [](double p) { return std::log(p / (1.0 - p)); };
  truth.delta = logit(truth.p1) - logit(truth.p0);
  truth.population_clusters = kPopulationClusters;
  truth.population_mean_size = kPopulationMeanSize;
  return truth;
}

}  // namespace crtgee
