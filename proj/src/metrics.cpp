#include "crtgee/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crtgee/errors.hpp"

namespace crtgee {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

CoverageStat coverage_for(const std::vector<const EffectEstimate*>& converged,
                          double truth,
                          const Interval EffectEstimate::* interval) {
  CoverageStat stat;
  if (converged.empty()) return stat;
  std::size_t hits = 0;
  for (const auto* est : converged) {
    const Interval& ci = est->*interval;
    if (!std::isfinite(ci.lower) || !std::isfinite(ci.upper)) return stat;
    if (ci.lower <= truth && truth <= ci.upper) ++hits;
  }
  stat.defined = true;
  stat.value = static_cast<double>(hits) / static_cast<double>(converged.size());
  stat.mc_se = std::sqrt(stat.value * (1.0 - stat.value) /
                         static_cast<double>(converged.size()));
  stat.nominal = nominal_coverage(stat.value);
  return stat;
}

}  // namespace

bool nominal_coverage(double coverage) {
  return coverage >= 0.936 && coverage <= 0.964;
}

std::vector<MethodMetrics> aggregate(
    const std::vector<MethodReplicates>& replicates, const TruthSpec& truth) {
  const auto crude_it =
      std::find_if(replicates.begin(), replicates.end(),
                   [](const auto& r) { return r.method == "crude"; });
  if (crude_it == replicates.end())
    throw ValidationError("aggregate: crude method is required as reference");
  const std::size_t n_reps = crude_it->estimates.size();
  for (const auto& rep : replicates)
    if (rep.estimates.size() != n_reps)
      throw ValidationError(
          "aggregate: methods disagree on the replication count");

  // Empirical variance of the converged estimates under each method; the
  // crude one is the RE numerator.
  const auto variance_of = [](const std::vector<const EffectEstimate*>& v) {
    if (v.size() < 2) return kNaN;
    double mean = 0.0;
    for (const auto* e : v) mean += e->log_or;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (const auto* e : v) {
      const double d = e->log_or - mean;
      ss += d * d;
    }
    return ss / static_cast<double>(v.size() - 1);
  };

  std::vector<const EffectEstimate*> crude_converged;
  for (const auto& est : crude_it->estimates)
    if (est.converged) crude_converged.push_back(&est);
  const double crude_variance = variance_of(crude_converged);

  std::vector<MethodMetrics> out;
  out.reserve(replicates.size());
  for (const auto& rep : replicates) {
    MethodMetrics mm;
    mm.method = rep.method;
    mm.n_reps = n_reps;

    std::vector<const EffectEstimate*> converged;
    for (const auto& est : rep.estimates)
      if (est.converged) converged.push_back(&est);
    mm.n_converged = converged.size();
    mm.non_convergence =
        1.0 - static_cast<double>(mm.n_converged) / static_cast<double>(n_reps);

    if (converged.empty()) {
      mm.defined = false;
      mm.mean_ate = mm.bias = mm.empirical_variance = mm.re_vs_crude = kNaN;
      out.push_back(std::move(mm));
      continue;
    }
    mm.defined = true;
    double mean = 0.0;
    for (const auto* e : converged) mean += e->log_or;
    mean /= static_cast<double>(converged.size());
    mm.mean_ate = mean;
    mm.bias = mean - truth.delta;
    mm.empirical_variance = variance_of(converged);
    if (rep.method == "crude")
      mm.re_vs_crude = 1.0;
    else if (std::isfinite(crude_variance) &&
             std::isfinite(mm.empirical_variance) &&
             mm.empirical_variance > 0.0)
      mm.re_vs_crude = crude_variance / mm.empirical_variance;
    else
      mm.re_vs_crude = kNaN;

    mm.coverage_robust =
        coverage_for(converged, truth.delta, &EffectEstimate::ci_robust);
    mm.coverage_md = coverage_for(converged, truth.delta, &EffectEstimate::ci_md);
    mm.coverage_kc = coverage_for(converged, truth.delta, &EffectEstimate::ci_kc);
    out.push_back(std::move(mm));
  }
  return out;
}

}  // namespace crtgee
