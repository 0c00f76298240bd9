#ifndef CRTGEE_SANDWICH_HPP
#define CRTGEE_SANDWICH_HPP

#include <Eigen/Dense>

#include "crtgee/gee.hpp"

namespace crtgee {

// Which sandwich estimators to assemble; unrequested members stay empty and
// downstream standard errors come out as NaN.
struct VarianceSet {
  bool robust = false;
  bool md = false;
  bool kc = false;

  static VarianceSet all() { return {true, true, true}; }
  static VarianceSet none() { return {false, false, false}; }
  bool any() const { return robust || md || kc; }
};

struct SandwichFamily {
  Eigen::MatrixXd robust;  // empty when not requested
  Eigen::MatrixXd md;
  Eigen::MatrixXd kc;
};

// Uncorrected sandwich: Omega { sum_i g_i g_i' } Omega with
// g_i = D_i' V_i^-1 W_i r_i.
Eigen::MatrixXd sandwich_robust(const GeeFit& fit);

// Mancl-DeRouen style correction: residuals are inflated by (I - H_i)^-1 on
// both sides of the meat.
Eigen::MatrixXd sandwich_md(const GeeFit& fit);

// Kauermann-Carroll style correction: residuals are inflated by the inverse
// principal square roots of (I - H_i) and (I - H_i').  The accumulated meat
// is symmetrized as (A + A')/2; the raw asymmetry (infinity norm, relative
// to the meat) can be retrieved through `raw_asymmetry`.
Eigen::MatrixXd sandwich_kc(const GeeFit& fit, double* raw_asymmetry = nullptr);

SandwichFamily sandwich_family(const GeeFit& fit,
                               const VarianceSet& which = VarianceSet::all());

// Principal square root of a real square matrix via complex Schur
// decomposition.  Throws SquareRootFailure for eigenvalues on the closed
// negative real axis or when the result carries a complex residue.
Eigen::MatrixXd principal_sqrt(const Eigen::MatrixXd& a);

// Delta-method scalar variances m' C m for each family member; NaN where the
// member was not computed.
struct DeltaVariances {
  double robust = 0.0;
  double md = 0.0;
  double kc = 0.0;
};
DeltaVariances delta_method_variance(const GeeFit& fit, const Eigen::VectorXd& m,
                                     const SandwichFamily& family);

}  // namespace crtgee

#endif
