// Acceptance gate: one line per criterion, PASS/FAIL, nonzero exit when any
// criterion fails.  The statistical criteria run the public study pipeline at
// desk scale with fixed seeds; tolerances are stated in each line.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "crtgee/dataset.hpp"
#include "crtgee/effects.hpp"
#include "crtgee/errors.hpp"
#include "crtgee/gee.hpp"
#include "crtgee/metrics.hpp"
#include "crtgee/propensity.hpp"
#include "crtgee/report.hpp"
#include "crtgee/rng.hpp"
#include "crtgee/sandwich.hpp"
#include "crtgee/simgen.hpp"
#include "crtgee/study.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

namespace {

using namespace crtgee;
namespace fs = std::filesystem;

double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).lpNorm<Eigen::Infinity>() /
         std::max(1e-300, b.lpNorm<Eigen::Infinity>());
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c);
  return std::string(buf);
}

// ---- criterion bodies ------------------------------------------------------

bool c1_closed_form(std::string& detail) {
  Rng rng(9001);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int n_clusters = 4 + 2 * (t % 4);
    const ClusterDataset data = testhelp::random_converging_dataset(
        rng, n_clusters, 0, CovariateSpec::crude(), 2, 5);
    const GeeFit fit = fit_gee(data, CovariateSpec::crude());
    const CrudeClosedForm cf = closed_form_crude(data);
    worst = std::max(worst, std::abs(fit.beta[1] - cf.beta_z));
    worst = std::max(worst, std::abs(fit.beta[0] - cf.beta0));
  }
  detail = fmt(" (200 datasets, max |diff| %.3g, tol 1e-6)", worst);
  return worst <= 1e-6;
}

bool c2_sandwich_oracle(std::string& detail) {
  Rng rng(9002);
  const CovariateSpec spec = CovariateSpec::all_main_effects();
  double worst = 0.0;
  int done = 0, attempts = 0;
  while (done < 100) {
    if (++attempts > 5000) {
      detail = " (could not assemble 100 converged toy fits)";
      return false;
    }
    const ClusterDataset data = testhelp::random_dataset(rng, 6, 1, 2, 5);
    SandwichFamily fam;
    GeeFit fit;
    try {
      fit = fit_gee(data, spec);
      if (!fit.converged) continue;
      fam = sandwich_family(fit);
    } catch (const Error&) {
      continue;  // separation / singular leverage: no fit to compare
    }
    const auto ref = oracles::oracle_sandwich(
        data, oracles::all_columns(data), fit.beta,
        Eigen::VectorXd::Ones(data.n_subjects()));
    worst = std::max({worst, rel_diff(fam.robust, ref.robust),
                      rel_diff(fam.md, ref.md), rel_diff(fam.kc, ref.kc)});
    ++done;
  }

  // H_i = 0 substitution: MD and KC must equal the plain sandwich exactly.
  GeeFit synth;
  synth.beta = Eigen::Vector2d(0.2, -0.4);
  synth.omega_hat = Eigen::Matrix2d::Identity() * 0.7;
  synth.converged = true;
  for (int i = 0; i < 4; ++i) {
    ClusterIngredients ing;
    ing.d.resize(3, 2);
    ing.v_diag.resize(3);
    ing.w_diag.resize(3);
    ing.residuals.resize(3);
    for (int j = 0; j < 3; ++j) {
      ing.d(j, 0) = rng.normal();
      ing.d(j, 1) = rng.normal();
      ing.v_diag[j] = 0.04 + 0.2 * rng.uniform();
      ing.w_diag[j] = 0.5 + rng.uniform();
      ing.residuals[j] = rng.normal();
    }
    ing.h = Eigen::MatrixXd::Zero(3, 3);
    synth.clusters.push_back(std::move(ing));
  }
  const Eigen::MatrixXd r = sandwich_robust(synth);
  const bool collapse =
      (sandwich_md(synth) - r).lpNorm<Eigen::Infinity>() == 0.0 &&
      (sandwich_kc(synth) - r).lpNorm<Eigen::Infinity>() == 0.0;

  detail = fmt(" (100 toy fits, max rel diff %.3g, tol 1e-8)", worst) +
           (collapse ? "; H=0 collapse exact" : "; H=0 collapse BROKEN");
  return worst <= 1e-8 && collapse;
}

bool c3_gradient(std::string& detail) {
  Rng rng(9003);
  const CovariateSpec spec = CovariateSpec::all_main_effects();
  const double h = 1e-5;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int p = 1 + (t % 2);
    const ClusterDataset data =
        testhelp::random_converging_dataset(rng, 8, p, spec, 2, 5);
    const GeeFit fit = fit_gee(data, spec);
    const Eigen::VectorXd m = m_gradient(fit, data);
    for (Eigen::Index k = 0; k < fit.beta.size(); ++k) {
      Eigen::VectorXd up = fit.beta, dn = fit.beta;
      up[k] += h;
      dn[k] -= h;
      const double fd = (standardized_log_or_at(up, data, spec) -
                         standardized_log_or_at(dn, data, spec)) /
                        (2.0 * h);
      worst = std::max(worst, std::abs(m[k] - fd) / std::max(1.0, std::abs(fd)));
    }
  }

  double worst_crude = 0.0;
  for (int t = 0; t < 20; ++t) {
    const ClusterDataset data = testhelp::random_converging_dataset(
        rng, 8, 1, CovariateSpec::crude(), 2, 5);
    const GeeFit fit = fit_gee(data, CovariateSpec::crude());
    const Eigen::VectorXd m = m_gradient(fit, data);
    worst_crude = std::max({worst_crude, std::abs(m[0]), std::abs(m[1] - 1.0)});
  }
  detail = fmt(" (100 fits, max rel diff %.3g, tol 1e-6; crude M max dev %.3g,"
               " tol 1e-12)",
               worst, worst_crude);
  return worst <= 1e-6 && worst_crude <= 1e-12;
}

bool c4_collapse_chain(std::string& detail) {
  Rng rng(9004);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const ClusterDataset data = testhelp::random_converging_dataset(
        rng, 8, 1, CovariateSpec::crude(), 2, 5);
    const EffectEstimate multi =
        estimate_multivariable(data, CovariateSpec::crude());
    const EffectEstimate crude = estimate_crude(data);
    const CrudeClosedForm cf = closed_form_crude(data);
    worst = std::max({worst, std::abs(multi.log_or - crude.log_or),
                      std::abs(crude.log_or - cf.beta_z),
                      std::abs(multi.se_robust - crude.se_robust),
                      std::abs(multi.se_md - crude.se_md),
                      std::abs(multi.se_kc - crude.se_kc)});
  }
  detail = fmt(" (50 datasets, max |diff| %.3g, tol 1e-6)", worst);
  return worst <= 1e-6;
}

bool c5_ow_balance(std::string& detail) {
  Rng rng(9005);
  double worst = 0.0;
  int done = 0, attempts = 0;
  while (done < 50) {
    if (++attempts > 2000) {
      detail = " (could not assemble 50 converged propensity fits)";
      return false;
    }
    const ClusterDataset data = testhelp::random_dataset(rng, 8, 2, 3, 6);
    const PropensityFit pf = estimate_propensity_logistic(data);
    if (!pf.converged) continue;
    const Eigen::VectorXd w =
        compute_weights(pf.scores, stacked_treatment(data), WeightKind::ow);
    const Eigen::VectorXd asd = absolute_standardized_difference(data, w);
    worst = std::max(worst, asd.maxCoeff());
    ++done;
  }
  detail = fmt(" (50 fits, max weighted ASD %.3g, tol 1e-8)", worst);
  return worst <= 1e-8;
}

bool c6_determinism(std::string& detail) {
  StudyConfig cfg;
  const auto row = find_scenario("model1-low-p6");
  cfg.sim = config_from_scenario(*row, 10, 15.0, 0.01);
  cfg.sim.n_reps = 40;
  cfg.sim.master_seed = 424242;
  cfg.truth_seed = 424242;
  cfg.methods = {Method::crude, Method::multi};
  cfg.variances = VarianceSet{true, true, false};

  const fs::path dir = fs::temp_directory_path() / "crtgee_acceptance_c6";
  fs::create_directories(dir);
  const auto render = [&](unsigned workers) {
    const StudyResult res = run_study(cfg, workers);
    const fs::path p = dir / ("metrics_w" + std::to_string(workers) + ".csv");
    write_metrics_csv(p, res.metrics);
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string serial = render(1);
  const std::string pooled = render(8);
  detail = " (workers 1 vs 8, metrics.csv byte comparison)";
  return !serial.empty() && serial == pooled;
}

// Averaged truth over a few oracle seeds: the tolerance stays the pinned one,
// the averaging just keeps single-draw Monte Carlo noise out of the gate.
TruthSpec averaged_truth(const SimConfig& sim,
                         const std::vector<std::uint64_t>& seeds) {
  static std::map<std::string, TruthSpec> cache;
  std::ostringstream key;
  key << sim.model << '/' << to_string(sim.incidence) << '/'
      << sim.n_covariates << '/' << sim.beta0 << '/' << sim.beta_z << '/'
      << sim.icc_latent;
  if (const auto it = cache.find(key.str()); it != cache.end())
    return it->second;
  TruthSpec avg;
  for (const auto seed : seeds) {
    const TruthSpec t = compute_true_delta(sim, seed);
    avg.delta += t.delta;
    avg.p1 += t.p1;
    avg.p0 += t.p0;
    avg.population_clusters = t.population_clusters;
    avg.population_mean_size = t.population_mean_size;
  }
  const double k = static_cast<double>(seeds.size());
  avg.delta /= k;
  avg.p1 /= k;
  avg.p0 /= k;
  cache[key.str()] = avg;
  return avg;
}

bool c7_truth_oracle(std::string& detail) {
  const struct {
    const char* key;
    double pinned;
  } rows[] = {{"model1-low-p6", -0.8317},
              {"model1-very_low-p6", -0.8103},
              {"model2-low-p6", -0.7392},
              {"model2-very_low-p6", -0.7756}};
  std::string parts;
  bool ok = true;
  for (const auto& r : rows) {
    const auto row = find_scenario(r.key);
    SimConfig sim = config_from_scenario(*row, 2, 100.0, 0.01);
    const TruthSpec t = averaged_truth(sim, {7001, 7002, 7003});
    const double err = std::abs(t.delta - r.pinned);
    ok = ok && err <= 0.02;
    parts += fmt(" %.4f", t.delta);
  }
  detail = " (got" + parts + " vs -0.8317 -0.8103 -0.7392 -0.7756, tol 0.02)";
  return ok;
}

StudyResult run_scenario(const std::string& key, int n_clusters, double m,
                         int n_reps, std::vector<Method> methods,
                         VarianceSet variances, std::uint64_t seed) {
  StudyConfig cfg;
  const auto row = find_scenario(key);
  cfg.sim = config_from_scenario(*row, n_clusters, m, 0.01);
  cfg.sim.n_reps = n_reps;
  cfg.sim.master_seed = seed;
  cfg.truth_seed = seed;
  cfg.methods = std::move(methods);
  cfg.variances = variances;
  return run_study(cfg, 0);
}

const MethodMetrics& method_row(const std::vector<MethodMetrics>& metrics,
                                const std::string& name) {
  for (const auto& m : metrics)
    if (m.method == name) return m;
  throw std::runtime_error("missing method " + name);
}

bool c8_model1_n30(std::string& detail) {
  const StudyResult res =
      run_scenario("model1-low-p6", 30, 100.0, 1000, {Method::crude},
                   VarianceSet{true, true, false}, 20260825);
  const auto row = find_scenario("model1-low-p6");
  const TruthSpec truth = averaged_truth(
      config_from_scenario(*row, 2, 100.0, 0.01), {7001, 7002, 7003});
  const auto metrics = aggregate(res.replicates, truth);
  const MethodMetrics& crude = method_row(metrics, "crude");

  const bool bias_ok = std::abs(crude.bias - (-0.010)) <= 0.02;
  const bool md_ok = crude.coverage_md.defined &&
                     std::abs(crude.coverage_md.value - 0.957) <= 0.025;
  const bool rob_ok = crude.coverage_robust.defined &&
                      std::abs(crude.coverage_robust.value - 0.934) <= 0.025;
  detail = fmt(" (bias %.4f vs -0.010 tol 0.02; cvg_md %.3f vs 0.957"
               " tol 0.025; cvg_robust %.3f vs 0.934 tol 0.025)",
               crude.bias, crude.coverage_md.value,
               crude.coverage_robust.value);
  return bias_ok && md_ok && rob_ok;
}

bool c9_model2_efficiency(std::string& detail) {
  const StudyResult res = run_scenario(
      "model2-low-p6", 30, 100.0, 1000,
      {Method::crude, Method::multi, Method::ipw_logit},
      VarianceSet{false, true, false}, 20260826);
  const auto row = find_scenario("model2-low-p6");
  const TruthSpec truth = averaged_truth(
      config_from_scenario(*row, 2, 100.0, 0.01), {7001, 7002, 7003});
  const auto metrics = aggregate(res.replicates, truth);
  const MethodMetrics& multi = method_row(metrics, "multi");
  const MethodMetrics& ipw = method_row(metrics, "ipw_logit");

  const bool multi_ok = multi.defined && multi.re_vs_crude > 1.3;
  const bool ipw_ok = ipw.defined && ipw.re_vs_crude > 1.05;
  const bool cvg_ok = ipw.coverage_md.defined &&
                      ipw.coverage_md.value >= 0.936 &&
                      ipw.coverage_md.value <= 0.982;
  detail = fmt(" (multi RE %.3f > 1.3; ipw RE %.3f > 1.05; ipw cvg_md %.3f"
               " in [0.936, 0.982])",
               multi.re_vs_crude, ipw.re_vs_crude, ipw.coverage_md.value);
  return multi_ok && ipw_ok && cvg_ok;
}

bool c10_coverage_ordering(std::string& detail) {
  const StudyResult res =
      run_scenario("model1-low-p6", 10, 100.0, 1000, {Method::crude},
                   VarianceSet::all(), 20260827);
  const auto row = find_scenario("model1-low-p6");
  const TruthSpec truth = averaged_truth(
      config_from_scenario(*row, 2, 100.0, 0.01), {7001, 7002, 7003});
  const auto metrics = aggregate(res.replicates, truth);
  const MethodMetrics& crude = method_row(metrics, "crude");

  const double cr = crude.coverage_robust.value;
  const double ck = crude.coverage_kc.value;
  const double cm = crude.coverage_md.value;
  const double slack = crude.coverage_kc.mc_se;
  const bool ok = crude.coverage_robust.defined && crude.coverage_kc.defined &&
                  crude.coverage_md.defined && cr < ck && ck <= cm + slack;
  detail = fmt(" (robust %.3f < kc %.3f <= md %.3f", cr, ck, cm) +
           fmt(" + 1 MC-SE slack %.4f)", slack);
  return ok;
}

bool c11_nonconvergence(std::string& detail) {
  const StudyResult res = run_scenario(
      "model2-very_low-p15", 6, 30.0, 500,
      {Method::crude, Method::multi, Method::ipw_logit, Method::ow_logit},
      VarianceSet::none(), 20260828);
  const MethodMetrics& crude = method_row(res.metrics, "crude");
  const MethodMetrics& multi = method_row(res.metrics, "multi");
  const MethodMetrics& ipw = method_row(res.metrics, "ipw_logit");
  const MethodMetrics& ow = method_row(res.metrics, "ow_logit");

  const bool ok = multi.non_convergence > 0.80 && crude.non_convergence < 0.25 &&
                  ipw.non_convergence < 0.25 && ow.non_convergence < 0.25;
  detail = fmt(" (multi %.3f > 0.80; crude %.3f, ipw/ow < 0.25)",
               multi.non_convergence, crude.non_convergence) +
           fmt(" [ipw %.3f, ow %.3f]", ipw.non_convergence,
               ow.non_convergence);
  return ok;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* label;
    std::function<bool(std::string&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "crude GEE coefficient equals the pooled-incidence closed form",
       c1_closed_form},
      {2, "robust/MD/KC sandwiches match a dense reference", c2_sandwich_oracle},
      {3, "standardization gradient matches finite differences", c3_gradient},
      {4, "crude-model standardization collapses onto the crude estimator",
       c4_collapse_chain},
      {5, "overlap weighting balances modeled covariates exactly",
       c5_ow_balance},
      {6, "simulation metrics are byte-identical across worker counts",
       c6_determinism},
      {7, "truth oracle reproduces the four P=6 registry contrasts",
       c7_truth_oracle},
      {8, "model 1 N=30: crude bias and robust-vs-MD coverage", c8_model1_n30},
      {9, "model 2 N=30: adjusted-method efficiency gains and MD coverage",
       c9_model2_efficiency},
      {10, "N=10 coverage ordering robust < KC <= MD", c10_coverage_ordering},
      {11, "P=15 N=6: multivariable non-convergence dwarfs the others",
       c11_nonconvergence},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string(" (exception: ") + e.what() + ")";
    }
    if (!ok) ++failures;
    std::printf("%s C%d %s%s\n", ok ? "PASS" : "FAIL", c.id, c.label,
                detail.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %d/11 criteria passed\n",
              static_cast<int>(criteria.size()) - failures);
  return failures == 0 ? 0 : 1;
}
