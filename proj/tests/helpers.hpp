#ifndef CRTGEE_TESTS_HELPERS_HPP
#define CRTGEE_TESTS_HELPERS_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "crtgee/dataset.hpp"
#include "crtgee/gee.hpp"
#include "crtgee/rng.hpp"

namespace testhelp {

inline double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Small random two-arm dataset with mixed outcomes in both arms: covariates
// standard normal, outcome probabilities kept mid-range so tiny datasets
// rarely separate.
inline crtgee::ClusterDataset random_dataset(crtgee::Rng& rng, int n_clusters,
                                             int n_covariates, int min_m = 2,
                                             int max_m = 5) {
  for (int attempt = 0; attempt < 500; ++attempt) {
    std::vector<crtgee::Cluster> clusters;
    double events[2] = {0, 0}, totals[2] = {0, 0};
    const double a = rng.uniform() - 0.5;
    const double c = 2.0 * rng.uniform() - 1.0;
    std::vector<double> b(n_covariates);
    for (auto& bk : b) bk = 1.4 * rng.uniform() - 0.7;
    for (int i = 0; i < n_clusters; ++i) {
      crtgee::Cluster cl;
      cl.id = "c" + std::to_string(i + 1);
      cl.treatment = i % 2;
      const long m =
          min_m + static_cast<long>(rng.uniform() * (max_m - min_m + 1));
      cl.outcomes.resize(m);
      cl.covariates.resize(m, n_covariates);
      for (long j = 0; j < m; ++j) {
        double lp = a + c * cl.treatment;
        for (int p = 0; p < n_covariates; ++p) {
          const double x = rng.normal();
          cl.covariates(j, p) = x;
          lp += b[p] * x;
        }
        cl.outcomes[j] = rng.bernoulli(expit(lp));
      }
      events[cl.treatment] += cl.outcomes.sum();
      totals[cl.treatment] += static_cast<double>(m);
      clusters.push_back(std::move(cl));
    }
    if (events[0] <= 0 || events[0] >= totals[0] || events[1] <= 0 ||
        events[1] >= totals[1])
      continue;
    std::vector<std::string> names;
    for (int p = 1; p <= n_covariates; ++p)
      names.push_back("x" + std::to_string(p));
    return crtgee::ClusterDataset(std::move(clusters), std::move(names));
  }
  throw std::runtime_error("random_dataset: no usable draw in 500 attempts");
}

// Random dataset on which the requested model actually converges, so oracle
// comparisons always have a fit to work with.
inline crtgee::ClusterDataset random_converging_dataset(
    crtgee::Rng& rng, int n_clusters, int n_covariates,
    const crtgee::CovariateSpec& spec, int min_m = 2, int max_m = 5) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    crtgee::ClusterDataset data =
        random_dataset(rng, n_clusters, n_covariates, min_m, max_m);
    try {
      if (crtgee::fit_gee(data, spec).converged) return data;
    } catch (const crtgee::Error&) {
    }
  }
  throw std::runtime_error(
      "random_converging_dataset: no converging draw in 200 attempts");
}

// Deterministic six-subject dataset used by several hand-checked examples.
inline crtgee::ClusterDataset tiny_fixed_dataset() {
  std::vector<crtgee::Cluster> clusters(4);
  const int treatments[4] = {1, 0, 1, 0};
  const double outcomes[4][3] = {
      {1, 0, 1}, {0, 0, 1}, {0, 1, 1}, {1, 0, 0}};
  const double covariate[4][3] = {
      {0.5, -1.0, 0.25}, {1.5, 0.0, -0.75}, {-0.5, 2.0, 1.0}, {0.0, -2.0, 0.5}};
  for (int i = 0; i < 4; ++i) {
    clusters[i].id = "c" + std::to_string(i + 1);
    clusters[i].treatment = treatments[i];
    clusters[i].outcomes =
        Eigen::Map<const Eigen::Vector3d>(outcomes[i]).eval();
    clusters[i].covariates =
        Eigen::Map<const Eigen::Vector3d>(covariate[i]).eval();
  }
  return crtgee::ClusterDataset(std::move(clusters), {"x1"});
}

}  // namespace testhelp

#endif
