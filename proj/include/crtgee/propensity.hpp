#ifndef CRTGEE_PROPENSITY_HPP
#define CRTGEE_PROPENSITY_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "crtgee/dataset.hpp"
#include "crtgee/gee.hpp"

namespace crtgee {

struct PropensityFit {
  Eigen::VectorXd gamma;   // intercept first, then main effects
  Eigen::VectorXd scores;  // fitted P(Z=1 | x), stacked in cluster order
  FitStatus status = FitStatus::max_iterations;
  bool converged = false;
  int n_iterations = 0;
  std::string trace;
};

// Subject-level logistic regression of the treatment indicator on an
// intercept plus main effects of every covariate, ignoring clustering.
PropensityFit estimate_propensity_logistic(const ClusterDataset& data);

enum class WeightKind { none, ipw, ow };
enum class PropensitySource { logistic, external };

// How subject weights are built: the weighting rule plus where the
// propensity scores come from.
class WeightScheme {
 public:
  static WeightScheme ipw_logistic() {
    return WeightScheme(WeightKind::ipw, PropensitySource::logistic, {});
  }
  static WeightScheme ow_logistic() {
    return WeightScheme(WeightKind::ow, PropensitySource::logistic, {});
  }
  static WeightScheme ipw_external(Eigen::VectorXd scores) {
    return WeightScheme(WeightKind::ipw, PropensitySource::external,
                        std::move(scores));
  }
  static WeightScheme ow_external(Eigen::VectorXd scores) {
    return WeightScheme(WeightKind::ow, PropensitySource::external,
                        std::move(scores));
  }

  WeightKind kind() const { return kind_; }
  PropensitySource source() const { return source_; }
  const std::optional<Eigen::VectorXd>& external_scores() const {
    return external_scores_;
  }
  std::string label() const;
  void validate(Eigen::Index n_subjects) const;

 private:
  WeightScheme(WeightKind k, PropensitySource s,
               std::optional<Eigen::VectorXd> e)
      : kind_(k), source_(s), external_scores_(std::move(e)) {}

  WeightKind kind_;
  PropensitySource source_;
  std::optional<Eigen::VectorXd> external_scores_;
};

// IPW: 1/e for treated, 1/(1-e) for controls.  OW: 1-e for treated, e for
// controls.  Scores must lie strictly inside (0, 1).
Eigen::VectorXd compute_weights(const Eigen::VectorXd& scores,
                                const Eigen::VectorXd& treatment,
                                WeightKind kind);

// Absolute standardized difference per covariate,
//   |mean_t - mean_c| / sqrt((s2_t + s2_c) / 2),
// optionally weighted.  Weighted variances use the effective-sample-size
// denominator sum(w) - sum(w^2)/sum(w), which reduces to the usual n-1
// denominator under unit weights.
Eigen::VectorXd absolute_standardized_difference(
    const ClusterDataset& data,
    const std::optional<Eigen::VectorXd>& weights = std::nullopt);

}  // namespace crtgee

#endif
