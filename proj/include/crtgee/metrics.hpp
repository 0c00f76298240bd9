#ifndef CRTGEE_METRICS_HPP
#define CRTGEE_METRICS_HPP

#include <string>
#include <vector>

#include "crtgee/effects.hpp"
#include "crtgee/simgen.hpp"

namespace crtgee {

// All replications of one method, converged or not, indexed by replication.
struct MethodReplicates {
  std::string method;
  std::vector<EffectEstimate> estimates;
};

// Empirical coverage of one interval type; undefined when the interval was
// never computed (no converged replications, or the estimator was not
// requested).
struct CoverageStat {
  bool defined = false;
  double value = 0.0;
  double mc_se = 0.0;  // sqrt(c(1-c)/n_converged)
  bool nominal = false;
};

struct MethodMetrics {
  std::string method;
  bool defined = false;  // false when nothing converged
  double mean_ate = 0.0;
  double bias = 0.0;
  double empirical_variance = 0.0;  // undefined (NaN) when n_converged < 2
  double re_vs_crude = 0.0;
  CoverageStat coverage_robust;
  CoverageStat coverage_md;
  CoverageStat coverage_kc;
  double non_convergence = 0.0;
  std::size_t n_converged = 0;
  std::size_t n_reps = 0;
};

// Binomial-model band treated as consistent with 95% nominal coverage.
bool nominal_coverage(double coverage);

// Performance measures over converged replications only: bias against the
// true delta, relative efficiency versus the crude method (whose own RE is
// exactly 1), per-estimator coverage with Monte Carlo standard errors, and
// the non-convergence proportion.
std::vector<MethodMetrics> aggregate(
    const std::vector<MethodReplicates>& replicates, const TruthSpec& truth);

}  // namespace crtgee

#endif
