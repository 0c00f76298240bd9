#ifndef CRTGEE_EFFECTS_HPP
#define CRTGEE_EFFECTS_HPP

#include <Eigen/Dense>
#include <string>

#include "crtgee/dataset.hpp"
#include "crtgee/gee.hpp"
#include "crtgee/propensity.hpp"
#include "crtgee/sandwich.hpp"

namespace crtgee {

// Two-sided 95% normal quantile used for every interval.
inline constexpr double kZ975 = 1.959964;

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

// One method's log odds ratio with the sandwich-family standard errors and
// normality-based intervals.  A failed fit is carried as converged=false
// with every numeric field NaN.
struct EffectEstimate {
  std::string method;
  double log_or = 0.0;
  double se_robust = 0.0;
  double se_md = 0.0;
  double se_kc = 0.0;
  Interval ci_robust;
  Interval ci_md;
  Interval ci_kc;
  bool converged = false;

  static EffectEstimate non_converged(std::string method);
};

EffectEstimate estimate_crude(const ClusterDataset& data,
                              const VarianceSet& which = VarianceSet::all());

EffectEstimate estimate_weighted(const ClusterDataset& data,
                                 const WeightScheme& scheme,
                                 const VarianceSet& which = VarianceSet::all());

EffectEstimate estimate_multivariable(
    const ClusterDataset& data, const CovariateSpec& spec,
    const VarianceSet& which = VarianceSet::all());

// Standardized (g-computation) log odds ratio: predictions with the
// treatment column toggled to 1 and to 0 for every subject, aggregated over
// the whole sample.
double standardized_log_or(const GeeFit& fit, const ClusterDataset& data);

// Same quantity at an arbitrary coefficient vector; used to probe the
// gradient numerically.
double standardized_log_or_at(const Eigen::VectorXd& beta,
                              const ClusterDataset& data,
                              const CovariateSpec& spec);

// Gradient of the standardized log odds ratio in the fitted coefficients,
// for the delta method.
Eigen::VectorXd m_gradient(const GeeFit& fit, const ClusterDataset& data);

}  // namespace crtgee

#endif
