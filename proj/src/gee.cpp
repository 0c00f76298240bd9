#include "crtgee/gee.hpp"

#include <cmath>

#include "crtgee/errors.hpp"
#include "newton.hpp"

namespace crtgee {

namespace {

FitStatus to_fit_status(detail::NewtonStatus s) {
  switch (s) {
    case detail::NewtonStatus::converged:
      return FitStatus::converged;
    case detail::NewtonStatus::max_iterations:
      return FitStatus::max_iterations;
    case detail::NewtonStatus::diverged:
      return FitStatus::diverged;
    case detail::NewtonStatus::separation:
      return FitStatus::separation;
  }
  return FitStatus::max_iterations;
}

}  // namespace

GeeFit fit_gee(const ClusterDataset& data, const CovariateSpec& spec,
               const std::optional<Eigen::VectorXd>& weights,
               const std::string& weight_scheme) {
  spec.validate_for(data);
  const Eigen::Index n = data.n_subjects();
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  if (weights) {
    if (weights->size() != n)
      throw ValidationError("fit_gee: weight vector length mismatch");
    if (!weights->allFinite() || weights->minCoeff() <= 0.0)
      throw ValidationError("fit_gee: weights must be positive and finite");
    w = *weights;
  }

  const auto design = design_matrix(data, spec);
  const Eigen::Index q = spec.n_design_columns(data.n_covariates());
  Eigen::MatrixXd x(n, q);
  Eigen::Index at = 0;
  for (const auto& xi : design) {
    x.middleRows(at, xi.rows()) = xi;
    at += xi.rows();
  }
  const Eigen::VectorXd y = stacked_outcomes(data);

  // With an independence working correlation the clustered score collapses to
  // a pooled weighted logistic score; clustering re-enters through the
  // per-cluster ingredients assembled below.
  const auto nr = detail::newton_logistic(x, y, w);

  GeeFit fit;
  fit.beta = nr.beta;
  fit.spec = spec;
  fit.weight_scheme =
      weight_scheme.empty() ? (weights ? "custom" : "none") : weight_scheme;
  fit.status = to_fit_status(nr.status);
  fit.converged = nr.status == detail::NewtonStatus::converged;
  fit.n_iterations = nr.n_iterations;
  fit.trace = nr.trace;

  const Eigen::ArrayXd v_all = nr.mu.array() * (1.0 - nr.mu.array());
  const Eigen::MatrixXd info =
      x.transpose() * (w.array() * v_all).matrix().asDiagonal() * x;
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success)
    throw SingularInformation(
        "information matrix not positive definite at the final iterate (" +
        fit.trace + ")");
  Eigen::MatrixXd omega = llt.solve(Eigen::MatrixXd::Identity(q, q));
  fit.omega_hat = 0.5 * (omega + omega.transpose());

  fit.clusters.reserve(design.size());
  at = 0;
  for (const auto& xi : design) {
    const Eigen::Index m = xi.rows();
    ClusterIngredients ing;
    ing.v_diag = v_all.segment(at, m).matrix();
    ing.w_diag = w.segment(at, m);
    ing.residuals = y.segment(at, m) - nr.mu.segment(at, m);
    ing.d = ing.v_diag.asDiagonal() * xi;
    ing.h = ing.d * fit.omega_hat * ing.d.transpose() *
            (ing.w_diag.array() / ing.v_diag.array()).matrix().asDiagonal();
    fit.clusters.push_back(std::move(ing));
    at += m;
  }
  return fit;
}

CrudeClosedForm closed_form_crude(const ClusterDataset& data) {
  double events[2] = {0.0, 0.0};
  double totals[2] = {0.0, 0.0};
  for (const auto& cl : data.clusters()) {
    events[cl.treatment] += cl.outcomes.sum();
    totals[cl.treatment] += static_cast<double>(cl.size());
  }
  const double p0 = events[0] / totals[0];
  const double p1 = events[1] / totals[1];
  if (p0 <= 0.0 || p0 >= 1.0 || p1 <= 0.0 || p1 >= 1.0)
    throw DegenerateArm("pooled incidence on the boundary (p0=" +
                        std::to_string(p0) + ", p1=" + std::to_string(p1) +
                        ")");
  const auto logit = [](double p) { return std::log(p / (1.0 - p)); };
  return CrudeClosedForm{logit(p0), logit(p1) - logit(p0)};
}

}  // namespace crtgee
