#ifndef CRTGEE_STUDY_HPP
#define CRTGEE_STUDY_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "crtgee/metrics.hpp"
#include "crtgee/sandwich.hpp"
#include "crtgee/simgen.hpp"

namespace crtgee {

enum class Method { crude, multi, ipw_logit, ow_logit };

std::string to_string(Method method);
Method parse_method(const std::string& text);

struct StudyConfig {
  SimConfig sim;
  std::string scenario_key;      // empty when the scenario block is custom
  std::vector<Method> methods;   // crude always first
  VarianceSet variances;
  std::uint64_t truth_seed = 0;
  unsigned workers = 0;          // 0 = resolve from CRTGEE_WORKERS / hardware
  std::filesystem::path output_path = ".";
};

// Flat key = value file with one [scenario] section; '#' starts a comment.
// Top-level keys: methods, variance_estimators, n_reps, master_seed,
// truth_seed, workers, output_path.  Scenario keys: key (registry lookup) or
// custom/model/incidence/n_covariates/beta0/beta_z, plus n_clusters,
// mean_cluster_size, icc_latent.
StudyConfig load_study_config(const std::filesystem::path& path);

struct StudyResult {
  TruthSpec truth;
  std::vector<MethodReplicates> replicates;
  std::vector<MethodMetrics> metrics;
};

// Runs the full replication loop on a worker pool.  Every replication is a
// pure function of (master_seed, rep_index), so results do not depend on the
// worker count; a nonzero override takes precedence over the config.
StudyResult run_study(const StudyConfig& cfg, unsigned workers_override = 0);

// One method applied to one dataset; estimation errors (separation, singular
// information, degenerate predictions, ...) become a non-converged estimate.
EffectEstimate run_method(Method method, const ClusterDataset& data,
                          const VarianceSet& which);

unsigned resolve_workers(unsigned requested);

}  // namespace crtgee

#endif
