#ifndef CRTGEE_SRC_NEWTON_HPP
#define CRTGEE_SRC_NEWTON_HPP

#include <Eigen/Dense>
#include <string>

namespace crtgee::detail {

enum class NewtonStatus { converged, max_iterations, diverged, separation };

struct NewtonOptions {
  int max_iterations = 100;
  double tol_step = 1e-8;    // infinity norm of the coefficient update
  double tol_score = 1e-6;   // infinity norm of the score
  double beta_cap = 30.0;    // divergence trip-wire on the coefficient norm
  double mu_floor = 1e-10;   // fitted probabilities must stay inside
};

struct NewtonResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd mu;        // fitted probabilities at beta
  NewtonStatus status = NewtonStatus::max_iterations;
  int n_iterations = 0;
  std::string trace;         // one-line summary of the final iterate
};

// Fisher scoring for the weighted logistic estimating equation
//   sum_j w_j (y_j - mu_j) x_j = 0,  mu_j = expit(x_j' beta),
// with step halving on the score norm.  Starts at beta = 0.  Throws
// SingularInformation when the information matrix has no Cholesky factor.
NewtonResult newton_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& w,
                             const NewtonOptions& opts = {});

inline double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace crtgee::detail

#endif
