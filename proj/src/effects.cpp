#include "crtgee/effects.hpp"

#include <cmath>
#include <limits>

#include "crtgee/errors.hpp"

namespace crtgee {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

Interval interval(double center, double se) {
  return Interval{center - kZ975 * se, center + kZ975 * se};
}

EffectEstimate from_scalar(std::string method, double log_or,
                           const DeltaVariances& v) {
  EffectEstimate est;
  est.method = std::move(method);
  est.log_or = log_or;
  est.se_robust = std::sqrt(v.robust);
  est.se_md = std::sqrt(v.md);
  est.se_kc = std::sqrt(v.kc);
  est.ci_robust = interval(log_or, est.se_robust);
  est.ci_md = interval(log_or, est.se_md);
  est.ci_kc = interval(log_or, est.se_kc);
  est.converged = true;
  return est;
}

// For a crude-model fit the log OR is the treatment coefficient, so the
// delta-method gradient is the last unit vector and m'Cm picks out the
// corner of each sandwich matrix.
EffectEstimate from_treatment_coefficient(std::string method,
                                          const GeeFit& fit,
                                          const VarianceSet& which) {
  const SandwichFamily fam = sandwich_family(fit, which);
  const Eigen::Index q = fit.beta.size();
  const auto corner = [&](const Eigen::MatrixXd& c) {
    return c.size() == 0 ? kNaN : c(q - 1, q - 1);
  };
  return from_scalar(std::move(method), fit.beta[q - 1],
                     DeltaVariances{corner(fam.robust), corner(fam.md),
                                    corner(fam.kc)});
}

}  // namespace

EffectEstimate EffectEstimate::non_converged(std::string method) {
  EffectEstimate est;
  est.method = std::move(method);
  est.log_or = kNaN;
  est.se_robust = est.se_md = est.se_kc = kNaN;
  est.ci_robust = est.ci_md = est.ci_kc = Interval{kNaN, kNaN};
  est.converged = false;
  return est;
}

EffectEstimate estimate_crude(const ClusterDataset& data,
                              const VarianceSet& which) {
  const GeeFit fit = fit_gee(data, CovariateSpec::crude());
  if (!fit.converged) return EffectEstimate::non_converged("crude");
  return from_treatment_coefficient("crude", fit, which);
}

EffectEstimate estimate_weighted(const ClusterDataset& data,
                                 const WeightScheme& scheme,
                                 const VarianceSet& which) {
  scheme.validate(data.n_subjects());
  const std::string method = scheme.label();

  Eigen::VectorXd scores;
  if (scheme.source() == PropensitySource::logistic) {
    const PropensityFit pf = estimate_propensity_logistic(data);
    if (!pf.converged) return EffectEstimate::non_converged(method);
    scores = pf.scores;
  } else {
    scores = *scheme.external_scores();
  }
  const Eigen::VectorXd w =
      compute_weights(scores, stacked_treatment(data), scheme.kind());

  const GeeFit fit = fit_gee(data, CovariateSpec::crude(), w, method);
  if (!fit.converged) return EffectEstimate::non_converged(method);
  return from_treatment_coefficient(method, fit, which);
}

EffectEstimate estimate_multivariable(const ClusterDataset& data,
                                      const CovariateSpec& spec,
                                      const VarianceSet& which) {
  const GeeFit fit = fit_gee(data, spec);
  if (!fit.converged) return EffectEstimate::non_converged("multi");
  const double log_or = standardized_log_or(fit, data);
  const Eigen::VectorXd m = m_gradient(fit, data);
  const SandwichFamily fam = sandwich_family(fit, which);
  return from_scalar("multi", log_or, delta_method_variance(fit, m, fam));
}

namespace {

// Counterfactual prediction sums S_z = sum expit(x'beta | Z=z) and the
// matching gradient accumulators; shared by the point estimate and m_gradient.
struct Standardized {
  double s1 = 0.0;  // sum of predictions with Z set to 1
  double s0 = 0.0;
  double total = 0.0;  // number of subjects
  Eigen::VectorXd grad1;  // sum of mu(1-mu) x with Z set to 1
  Eigen::VectorXd grad0;
};

Standardized accumulate_standardized(const Eigen::VectorXd& beta,
                                     const ClusterDataset& data,
                                     const CovariateSpec& spec) {
  const auto design = design_matrix(data, spec);
  const Eigen::Index q = beta.size();
  Standardized acc;
  acc.grad1 = Eigen::VectorXd::Zero(q);
  acc.grad0 = Eigen::VectorXd::Zero(q);
  for (const auto& xi : design) {
    Eigen::MatrixXd x = xi;
    for (int z = 1; z >= 0; --z) {
      x.col(q - 1).setConstant(static_cast<double>(z));
      const Eigen::VectorXd lp = x * beta;
      for (Eigen::Index j = 0; j < lp.size(); ++j) {
        const double mu = expit(lp[j]);
        const double dmu = mu * (1.0 - mu);
        if (z == 1) {
          acc.s1 += mu;
          acc.grad1 += dmu * x.row(j).transpose();
        } else {
          acc.s0 += mu;
          acc.grad0 += dmu * x.row(j).transpose();
        }
      }
    }
    acc.total += static_cast<double>(xi.rows());
  }
  return acc;
}

double log_or_from(const Standardized& acc) {
  const double t1 = acc.total - acc.s1;
  const double t0 = acc.total - acc.s0;
  if (acc.s1 <= 0.0 || acc.s0 <= 0.0 || t1 <= 0.0 || t0 <= 0.0)
    throw DegeneratePrediction("standardized predictions on the boundary");
  return std::log(acc.s1 * t0 / (acc.s0 * t1));
}

}  // namespace

double standardized_log_or(const GeeFit& fit, const ClusterDataset& data) {
  return log_or_from(accumulate_standardized(fit.beta, data, fit.spec));
}

double standardized_log_or_at(const Eigen::VectorXd& beta,
                              const ClusterDataset& data,
                              const CovariateSpec& spec) {
  if (beta.size() != spec.n_design_columns(data.n_covariates()))
    throw ValidationError("standardized_log_or_at: beta length mismatch");
  return log_or_from(accumulate_standardized(beta, data, spec));
}

Eigen::VectorXd m_gradient(const GeeFit& fit, const ClusterDataset& data) {
  const Standardized acc = accumulate_standardized(fit.beta, data, fit.spec);
  const double t1 = acc.total - acc.s1;
  const double t0 = acc.total - acc.s0;
  if (acc.s1 <= 0.0 || acc.s0 <= 0.0 || t1 <= 0.0 || t0 <= 0.0)
    throw DegeneratePrediction("standardized predictions on the boundary");
  return (1.0 / acc.s1 + 1.0 / t1) * acc.grad1 -
         (1.0 / acc.s0 + 1.0 / t0) * acc.grad0;
}

}  // namespace crtgee
