#include "crtgee/propensity.hpp"

#include <cmath>
#include <limits>

#include "crtgee/errors.hpp"
#include "newton.hpp"

namespace crtgee {

PropensityFit estimate_propensity_logistic(const ClusterDataset& data) {
  const Eigen::Index n = data.n_subjects();
  Eigen::MatrixXd x(n, data.n_covariates() + 1);
  x.col(0).setOnes();
  x.rightCols(data.n_covariates()) = stacked_covariates(data);
  const Eigen::VectorXd z = stacked_treatment(data);

  detail::NewtonOptions opts;
  opts.tol_step = 1e-10;
  opts.tol_score = 1e-8;
  const auto nr = detail::newton_logistic(x, z, Eigen::VectorXd::Ones(n), opts);

  PropensityFit fit;
  fit.gamma = nr.beta;
  fit.scores = nr.mu;
  fit.n_iterations = nr.n_iterations;
  fit.trace = nr.trace;
  switch (nr.status) {
    case detail::NewtonStatus::converged:
      fit.status = FitStatus::converged;
      fit.converged = true;
      break;
    case detail::NewtonStatus::max_iterations:
      fit.status = FitStatus::max_iterations;
      break;
    case detail::NewtonStatus::diverged:
      fit.status = FitStatus::diverged;
      break;
    case detail::NewtonStatus::separation:
      fit.status = FitStatus::separation;
      break;
  }
  return fit;
}

std::string WeightScheme::label() const {
  std::string base = kind_ == WeightKind::ipw ? "ipw" : "ow";
  return base + (source_ == PropensitySource::logistic ? "_logit" : "_ext");
}

void WeightScheme::validate(Eigen::Index n_subjects) const {
  if (kind_ == WeightKind::none)
    throw ValidationError("weight scheme must be ipw or ow");
  const bool have = external_scores_.has_value();
  if (have != (source_ == PropensitySource::external))
    throw ValidationError(
        "external scores must be present exactly when the source is external");
  if (have) {
    if (external_scores_->size() != n_subjects)
      throw ValidationError("external score vector length mismatch");
    if (!(external_scores_->minCoeff() > 0.0 &&
          external_scores_->maxCoeff() < 1.0))
      throw ValidationError("external scores must lie strictly in (0, 1)");
  }
}

Eigen::VectorXd compute_weights(const Eigen::VectorXd& scores,
                                const Eigen::VectorXd& treatment,
                                WeightKind kind) {
  if (scores.size() != treatment.size())
    throw ValidationError("compute_weights: length mismatch");
  if (kind == WeightKind::none)
    throw ValidationError("compute_weights: kind must be ipw or ow");
  Eigen::VectorXd w(scores.size());
  for (Eigen::Index j = 0; j < scores.size(); ++j) {
    const double e = scores[j];
    if (!(e > 0.0 && e < 1.0))
      throw ValidationError("propensity score outside (0, 1): " +
                            std::to_string(e));
    const bool treated = treatment[j] == 1.0;
    if (kind == WeightKind::ipw)
      w[j] = treated ? 1.0 / e : 1.0 / (1.0 - e);
    else
      w[j] = treated ? 1.0 - e : e;
  }
  return w;
}

Eigen::VectorXd absolute_standardized_difference(
    const ClusterDataset& data, const std::optional<Eigen::VectorXd>& weights) {
  const Eigen::Index n = data.n_subjects();
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  if (weights) {
    if (weights->size() != n)
      throw ValidationError("asd: weight vector length mismatch");
    if (!weights->allFinite() || weights->minCoeff() <= 0.0)
      throw ValidationError("asd: weights must be positive and finite");
    w = *weights;
  }
  const Eigen::MatrixXd x = stacked_covariates(data);
  const Eigen::VectorXd z = stacked_treatment(data);

  Eigen::VectorXd asd(data.n_covariates());
  for (Eigen::Index p = 0; p < data.n_covariates(); ++p) {
    double mean[2], var[2];
    for (int arm = 0; arm < 2; ++arm) {
      double sw = 0.0, swx = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (z[j] != arm) continue;
        sw += w[j];
        swx += w[j] * x(j, p);
      }
      mean[arm] = swx / sw;
      double sw2 = 0.0, ss = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (z[j] != arm) continue;
        const double d = x(j, p) - mean[arm];
        ss += w[j] * d * d;
        sw2 += w[j] * w[j];
      }
      const double denom = sw - sw2 / sw;
      var[arm] = denom > 0.0 ? ss / denom : 0.0;
    }
    const double pooled = std::sqrt(0.5 * (var[0] + var[1]));
    const double diff = std::abs(mean[1] - mean[0]);
    if (pooled > 0.0)
      asd[p] = diff / pooled;
    else
      asd[p] = diff < 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return asd;
}

}  // namespace crtgee
