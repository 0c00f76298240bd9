#include "crtgee/sandwich.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <limits>

#include "crtgee/errors.hpp"

namespace crtgee {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// g_i = D_i' V_i^-1 W_i t for a per-cluster vector t.
Eigen::VectorXd bread_arm(const ClusterIngredients& ing,
                          const Eigen::VectorXd& t) {
  return ing.d.transpose() *
         (ing.w_diag.array() / ing.v_diag.array() * t.array()).matrix();
}

Eigen::VectorXd solve_leverage(const Eigen::MatrixXd& i_minus_h,
                               const Eigen::VectorXd& r) {
  const Eigen::VectorXd t = i_minus_h.partialPivLu().solve(r);
  const double resid = (i_minus_h * t - r).lpNorm<Eigen::Infinity>();
  if (!t.allFinite() || resid > 1e-8 * (r.lpNorm<Eigen::Infinity>() + 1.0))
    throw SingularLeverage("I - H numerically singular in a meat correction");
  return t;
}

void check_fit(const GeeFit& fit) {
  if (fit.clusters.empty() || fit.omega_hat.size() == 0)
    throw ValidationError("sandwich: fit has no cluster ingredients");
}

}  // namespace

Eigen::MatrixXd sandwich_robust(const GeeFit& fit) {
  check_fit(fit);
  const Eigen::Index q = fit.omega_hat.rows();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(q, q);
  for (const auto& ing : fit.clusters) {
    const Eigen::VectorXd g = bread_arm(ing, ing.residuals);
    meat.noalias() += g * g.transpose();
  }
  return fit.omega_hat * meat * fit.omega_hat;
}

Eigen::MatrixXd sandwich_md(const GeeFit& fit) {
  check_fit(fit);
  const Eigen::Index q = fit.omega_hat.rows();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(q, q);
  for (const auto& ing : fit.clusters) {
    const Eigen::Index m = ing.residuals.size();
    const Eigen::MatrixXd i_minus_h =
        Eigen::MatrixXd::Identity(m, m) - ing.h;
    const Eigen::VectorXd g = bread_arm(ing, solve_leverage(i_minus_h, ing.residuals));
    meat.noalias() += g * g.transpose();
  }
  return fit.omega_hat * meat * fit.omega_hat;
}

Eigen::MatrixXd sandwich_kc(const GeeFit& fit, double* raw_asymmetry) {
  check_fit(fit);
  const Eigen::Index q = fit.omega_hat.rows();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(q, q);
  for (const auto& ing : fit.clusters) {
    const Eigen::Index m = ing.residuals.size();
    const Eigen::MatrixXd i_minus_h =
        Eigen::MatrixXd::Identity(m, m) - ing.h;
    const Eigen::MatrixXd s_left = principal_sqrt(i_minus_h);
    const Eigen::MatrixXd s_right = principal_sqrt(i_minus_h.transpose());
    const Eigen::VectorXd g1 =
        bread_arm(ing, solve_leverage(s_left, ing.residuals));
    const Eigen::VectorXd g2 = bread_arm(
        ing, solve_leverage(Eigen::MatrixXd(s_right.transpose()), ing.residuals));
    meat.noalias() += g1 * g2.transpose();
  }
  const double scale = meat.lpNorm<Eigen::Infinity>();
  const double asym =
      (meat - meat.transpose()).lpNorm<Eigen::Infinity>() /
      (scale > 0.0 ? scale : 1.0);
  if (raw_asymmetry) *raw_asymmetry = asym;
  const Eigen::MatrixXd sym = 0.5 * (meat + meat.transpose());
  return fit.omega_hat * sym * fit.omega_hat;
}

SandwichFamily sandwich_family(const GeeFit& fit, const VarianceSet& which) {
  SandwichFamily fam;
  if (which.robust) fam.robust = sandwich_robust(fit);
  if (which.md) fam.md = sandwich_md(fit);
  if (which.kc) fam.kc = sandwich_kc(fit);
  return fam;
}

Eigen::MatrixXd principal_sqrt(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols())
    throw ValidationError("principal_sqrt: matrix must be square");
  const Eigen::Index n = a.rows();
  using CMat = Eigen::MatrixXcd;

  Eigen::ComplexSchur<Eigen::MatrixXd> schur(a);
  if (schur.info() != Eigen::Success)
    throw SquareRootFailure("Schur decomposition failed");
  const CMat& t = schur.matrixT();
  const CMat& u = schur.matrixU();

  const double scale = std::max(a.lpNorm<Eigen::Infinity>(), 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lam = t(i, i);
    if (lam.real() <= 0.0 && std::abs(lam.imag()) <= 1e-14 * scale)
      throw SquareRootFailure(
          "eigenvalue on the closed negative real axis");
  }

  // Square root of the upper-triangular factor by the standard recurrence.
  CMat r = CMat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) r(i, i) = std::sqrt(t(i, i));
  for (Eigen::Index d = 1; d < n; ++d) {
    for (Eigen::Index i = 0; i + d < n; ++i) {
      const Eigen::Index j = i + d;
      std::complex<double> s = t(i, j);
      for (Eigen::Index k = i + 1; k < j; ++k) s -= r(i, k) * r(k, j);
      r(i, j) = s / (r(i, i) + r(j, j));
    }
  }

  const CMat root = u * r * u.adjoint();
  const double imag_residue = root.imag().lpNorm<Eigen::Infinity>();
  if (imag_residue > 1e-10 * std::max(1.0, root.real().lpNorm<Eigen::Infinity>()))
    throw SquareRootFailure("square root has a complex residue");
  return root.real();
}

DeltaVariances delta_method_variance(const GeeFit& fit, const Eigen::VectorXd& m,
                                     const SandwichFamily& family) {
  if (fit.omega_hat.rows() != m.size())
    throw ValidationError("delta_method_variance: gradient length mismatch");
  const auto quad = [&](const Eigen::MatrixXd& c) {
    if (c.size() == 0) return kNaN;
    if (c.rows() != m.size())
      throw ValidationError("delta_method_variance: matrix size mismatch");
    return m.dot(c * m);
  };
  return DeltaVariances{quad(family.robust), quad(family.md), quad(family.kc)};
}

}  // namespace crtgee
