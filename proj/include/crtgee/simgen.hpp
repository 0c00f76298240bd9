#ifndef CRTGEE_SIMGEN_HPP
#define CRTGEE_SIMGEN_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crtgee/dataset.hpp"

namespace crtgee {

enum class Incidence { low, very_low };

std::string to_string(Incidence incidence);
Incidence parse_incidence(const std::string& text);

// One row of the built-in scenario registry: generating model, incidence
// level, covariate count, the intercept/treatment coefficients, and the
// large-sample incidences and participant-average log OR they induce.
struct ScenarioRow {
  int model;
  Incidence incidence;
  int n_covariates;
  double beta0;
  double beta_z;
  double p1;
  double p0;
  double delta;
};

const std::vector<ScenarioRow>& scenario_registry();

// Key format: model<k>-<low|very_low>-p<P>, e.g. "model1-low-p6".
std::string scenario_key(const ScenarioRow& row);
std::optional<ScenarioRow> find_scenario(const std::string& key);

struct SimConfig {
  int model = 1;
  Incidence incidence = Incidence::low;
  int n_covariates = 6;
  double beta0 = 0.0;
  double beta_z = 0.0;
  int n_clusters = 0;
  double mean_cluster_size = 0.0;
  double icc_latent = 0.0;
  int n_reps = 0;
  std::uint64_t master_seed = 0;
  bool custom = false;  // allows (beta0, beta_z) off the registry

  void validate() const;
};

SimConfig config_from_scenario(const ScenarioRow& row, int n_clusters,
                               double mean_cluster_size, double icc_latent);

// Latent-scale random intercept SD for a given ICC:
// sigma_u = sqrt(rho/(1-rho) * pi^2/3).
double latent_sd(double icc_latent);

// One replication: 1:1 cluster randomization, Poisson(m) sizes conditioned
// on >= 1, standard normal covariates (models 1-2) or weakly correlated
// multivariate normal (models 3-4), random intercepts, and binary outcomes
// drawn through the latent-logistic model.  Deterministic in
// (cfg.master_seed, rep_index), independent of scheduling.
ClusterDataset generate_dataset(const SimConfig& cfg, std::uint64_t rep_index);

struct TruthSpec {
  double delta = 0.0;
  double p1 = 0.0;
  double p0 = 0.0;
  int population_clusters = 0;
  double population_mean_size = 0.0;
};

// Participant-average log odds ratio from a simulated population of 5000
// clusters of mean size 100: both potential outcomes are drawn per subject
// (shared random intercept, independent outcome noise) and pooled.
TruthSpec compute_true_delta(const SimConfig& cfg, std::uint64_t oracle_seed);

}  // namespace crtgee

#endif
