#ifndef CRTGEE_DATASET_HPP
#define CRTGEE_DATASET_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "crtgee/errors.hpp"

namespace crtgee {

// One cluster: a treatment arm indicator shared by all members, binary
// outcomes, and an m_i x P covariate matrix in subject order.
struct Cluster {
  std::string id;
  int treatment = 0;
  Eigen::VectorXd outcomes;
  Eigen::MatrixXd covariates;

  Eigen::Index size() const { return outcomes.size(); }
};

// Validated, immutable collection of clusters from a two-arm trial.
class ClusterDataset {
 public:
  ClusterDataset(std::vector<Cluster> clusters,
                 std::vector<std::string> covariate_names);

  const std::vector<Cluster>& clusters() const { return clusters_; }
  const std::vector<std::string>& covariate_names() const { return names_; }

  Eigen::Index n_clusters() const {
    return static_cast<Eigen::Index>(clusters_.size());
  }
  Eigen::Index n_covariates() const {
    return static_cast<Eigen::Index>(names_.size());
  }
  Eigen::Index n_subjects() const { return n_subjects_; }

 private:
  std::vector<Cluster> clusters_;
  std::vector<std::string> names_;
  Eigen::Index n_subjects_ = 0;
};

// Which columns enter the outcome regression.  Design rows are always
// [1, selected covariates..., Z] with the treatment indicator last.
class CovariateSpec {
 public:
  enum class Mode { crude, all_main_effects, subset };

  static CovariateSpec crude() { return CovariateSpec(Mode::crude, {}); }
  static CovariateSpec all_main_effects() {
    return CovariateSpec(Mode::all_main_effects, {});
  }
  // Zero-based indices into the dataset's covariate columns, kept in the
  // order given.
  static CovariateSpec subset(std::vector<Eigen::Index> indices) {
    return CovariateSpec(Mode::subset, std::move(indices));
  }

  Mode mode() const { return mode_; }
  const std::vector<Eigen::Index>& indices() const { return indices_; }

  void validate_for(const ClusterDataset& data) const;
  Eigen::Index n_design_columns(Eigen::Index p) const;

  bool operator==(const CovariateSpec&) const = default;

 private:
  CovariateSpec(Mode mode, std::vector<Eigen::Index> indices)
      : mode_(mode), indices_(std::move(indices)) {}

  Mode mode_;
  std::vector<Eigen::Index> indices_;
};

// Per-cluster design matrices X_i for the given covariate selection.
std::vector<Eigen::MatrixXd> design_matrix(const ClusterDataset& data,
                                           const CovariateSpec& spec);

// Subject-level vectors stacked in cluster order.
Eigen::VectorXd stacked_outcomes(const ClusterDataset& data);
Eigen::VectorXd stacked_treatment(const ClusterDataset& data);
Eigen::MatrixXd stacked_covariates(const ClusterDataset& data);

// Copy of the dataset keeping only the named covariate columns (in the order
// given).  Unknown names raise ValidationError.
ClusterDataset select_covariates(const ClusterDataset& data,
                                 const std::vector<std::string>& names);

// CSV header: cluster_id,treatment,outcome,<covariate names...>.
// treatment and outcome must be the literals 0 or 1; covariates are decimal
// literals.  Errors name the offending 1-based file row.
ClusterDataset load_csv(const std::filesystem::path& path);
void write_csv(const ClusterDataset& data, const std::filesystem::path& path);

}  // namespace crtgee

#endif
