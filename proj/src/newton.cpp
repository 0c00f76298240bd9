#include "newton.hpp"

#include <cmath>
#include <cstdio>

#include "crtgee/errors.hpp"

namespace crtgee::detail {

namespace {

Eigen::VectorXd fitted(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta) {
  return (x * beta).unaryExpr([](double t) { return expit(t); });
}

std::string trace_line(int iter, double score_inf, double step_inf) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "iter=%d score_inf=%.3e step_inf=%.3e", iter,
                score_inf, step_inf);
  return buf;
}

}  // namespace

NewtonResult newton_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& w,
                             const NewtonOptions& opts) {
  const Eigen::Index n = x.rows();
  const Eigen::Index q = x.cols();
  if (y.size() != n || w.size() != n)
    throw ValidationError("newton_logistic: shape mismatch");

  NewtonResult res;
  res.beta = Eigen::VectorXd::Zero(q);
  res.mu = fitted(x, res.beta);
  Eigen::VectorXd score = x.transpose() * (w.array() * (y - res.mu).array()).matrix();
  double score_inf = score.lpNorm<Eigen::Infinity>();
  double step_inf = 0.0;

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    res.n_iterations = iter;
    const Eigen::ArrayXd v = res.mu.array() * (1.0 - res.mu.array());
    const Eigen::MatrixXd info =
        x.transpose() * (w.array() * v).matrix().asDiagonal() * x;
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success)
      throw SingularInformation("information matrix not positive definite (" +
                                trace_line(iter, score_inf, step_inf) + ")");
    const Eigen::VectorXd direction = llt.solve(score);

    // Halve the step until the score norm no longer increases.
    double lambda = 1.0;
    Eigen::VectorXd beta_new, mu_new, score_new;
    double score_new_inf = 0.0;
    for (int half = 0; half < 7; ++half) {
      beta_new = res.beta + lambda * direction;
      mu_new = fitted(x, beta_new);
      score_new =
          x.transpose() * (w.array() * (y - mu_new).array()).matrix();
      score_new_inf = score_new.lpNorm<Eigen::Infinity>();
      if (score_new_inf <= score_inf || lambda <= 1.0 / 64.0) break;
      lambda *= 0.5;
    }

    step_inf = (beta_new - res.beta).lpNorm<Eigen::Infinity>();
    res.beta = std::move(beta_new);
    res.mu = std::move(mu_new);
    score = std::move(score_new);
    score_inf = score_new_inf;

    if (res.mu.minCoeff() < opts.mu_floor ||
        res.mu.maxCoeff() > 1.0 - opts.mu_floor) {
      res.status = NewtonStatus::separation;
      break;
    }
    if (res.beta.lpNorm<Eigen::Infinity>() > opts.beta_cap) {
      res.status = NewtonStatus::diverged;
      break;
    }
    if (step_inf < opts.tol_step && score_inf < opts.tol_score) {
      res.status = NewtonStatus::converged;
      break;
    }
  }
  res.trace = trace_line(res.n_iterations, score_inf, step_inf);
  return res;
}

}  // namespace crtgee::detail
