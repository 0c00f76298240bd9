#ifndef CRTGEE_GEE_HPP
#define CRTGEE_GEE_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "crtgee/dataset.hpp"

namespace crtgee {

enum class FitStatus { converged, max_iterations, diverged, separation };

// Pieces of the estimating equation for one cluster, evaluated at the final
// coefficient iterate.  For the logit link D_i = V_i X_i.
struct ClusterIngredients {
  Eigen::MatrixXd d;          // m_i x q derivative matrix
  Eigen::VectorXd v_diag;     // working variances mu(1-mu)
  Eigen::VectorXd w_diag;     // subject weights
  Eigen::VectorXd residuals;  // y - mu
  Eigen::MatrixXd h;          // m_i x m_i leverage D_i Omega D_i' V_i^-1 W_i
};

struct GeeFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd omega_hat;  // inverse Fisher information at beta
  std::vector<ClusterIngredients> clusters;
  CovariateSpec spec = CovariateSpec::crude();
  std::string weight_scheme = "none";
  FitStatus status = FitStatus::max_iterations;
  bool converged = false;
  int n_iterations = 0;
  std::string trace;
};

// Independence-working-correlation GEE for a logistic marginal model.
// `weights` are per-subject, stacked in cluster order; empty means
// unweighted.  Non-convergence is reported through status, with the fit
// populated at the last iterate; a singular information matrix throws.
GeeFit fit_gee(const ClusterDataset& data, const CovariateSpec& spec,
               const std::optional<Eigen::VectorXd>& weights = std::nullopt,
               const std::string& weight_scheme = "");

// Crude-model coefficients straight from pooled arm incidences:
// beta0 = logit(p0), betaZ = logit(p1) - logit(p0).  An arm with incidence
// 0 or 1 throws DegenerateArm.
struct CrudeClosedForm {
  double beta0 = 0.0;
  double beta_z = 0.0;
};
CrudeClosedForm closed_form_crude(const ClusterDataset& data);

}  // namespace crtgee

#endif
