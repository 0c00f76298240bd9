#include "crtgee/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "crtgee/errors.hpp"
#include "crtgee/version.hpp"

namespace crtgee {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

json json_number(double v) {
  // NaN/inf serialize as null, which is how undefined cells travel in JSON.
  return std::isfinite(v) ? json(v) : json(nullptr);
}

json coverage_json(const CoverageStat& c) {
  json j;
  j["defined"] = c.defined;
  j["value"] = c.defined ? json(c.value) : json(nullptr);
  j["mc_se"] = c.defined ? json(c.mc_se) : json(nullptr);
  j["nominal"] = c.defined ? json(c.nominal) : json(nullptr);
  return j;
}

json metrics_json(const MethodMetrics& m) {
  json j;
  j["method"] = m.method;
  j["defined"] = m.defined;
  j["ate"] = json_number(m.mean_ate);
  j["bias"] = json_number(m.bias);
  j["empirical_variance"] = json_number(m.empirical_variance);
  j["re_vs_crude"] = json_number(m.re_vs_crude);
  j["coverage_robust"] = coverage_json(m.coverage_robust);
  j["coverage_md"] = coverage_json(m.coverage_md);
  j["coverage_kc"] = coverage_json(m.coverage_kc);
  j["non_convergence"] = m.non_convergence;
  j["n_converged"] = m.n_converged;
  j["n_reps"] = m.n_reps;
  return j;
}

double coverage_cell(const CoverageStat& c) {
  return c.defined ? c.value : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::string format_cell(double value) {
  if (std::isnan(value)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  return buf;
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MethodMetrics>& metrics) {
  auto out = open_out(path);
  out << "method,ate,bias,re,cvg_robust,cvg_md,cvg_kc,non_con\n";
  for (const auto& m : metrics) {
    out << m.method << ',' << format_cell(m.mean_ate) << ','
        << format_cell(m.bias) << ',' << format_cell(m.re_vs_crude) << ','
        << format_cell(coverage_cell(m.coverage_robust)) << ','
        << format_cell(coverage_cell(m.coverage_md)) << ','
        << format_cell(coverage_cell(m.coverage_kc)) << ','
        << format_cell(m.non_convergence) << '\n';
  }
}

void write_study_summary_json(const std::filesystem::path& path,
                              const StudyConfig& cfg,
                              const StudyResult& result) {
  json j;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};

  json scenario;
  if (!cfg.scenario_key.empty()) scenario["key"] = cfg.scenario_key;
  scenario["custom"] = cfg.sim.custom;
  scenario["model"] = cfg.sim.model;
  scenario["incidence"] = to_string(cfg.sim.incidence);
  scenario["n_covariates"] = cfg.sim.n_covariates;
  scenario["beta0"] = cfg.sim.beta0;
  scenario["beta_z"] = cfg.sim.beta_z;
  scenario["n_clusters"] = cfg.sim.n_clusters;
  scenario["mean_cluster_size"] = cfg.sim.mean_cluster_size;
  scenario["icc_latent"] = cfg.sim.icc_latent;

  json methods = json::array();
  for (const auto m : cfg.methods) methods.push_back(to_string(m));
  json variances = json::array();
  if (cfg.variances.robust) variances.push_back("robust");
  if (cfg.variances.md) variances.push_back("md");
  if (cfg.variances.kc) variances.push_back("kc");

  j["config"] = {{"scenario", scenario},
                 {"methods", methods},
                 {"variance_estimators", variances},
                 {"n_reps", cfg.sim.n_reps},
                 {"master_seed", cfg.sim.master_seed},
                 {"truth_seed", cfg.truth_seed},
                 {"workers", cfg.workers},
                 {"output_path", cfg.output_path.string()}};

  j["truth"] = {{"delta", result.truth.delta},
                {"p1", result.truth.p1},
                {"p0", result.truth.p0},
                {"population_clusters", result.truth.population_clusters},
                {"population_mean_size", result.truth.population_mean_size},
                {"seed", cfg.truth_seed}};

  json metrics = json::array();
  for (const auto& m : result.metrics) metrics.push_back(metrics_json(m));
  j["metrics"] = metrics;

  j["notes"] = json::array(
      {"relative efficiency uses per-method converged subsets; the reference "
       "variance is the crude method's over its own converged replications"});

  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_effects_csv(const std::filesystem::path& path,
                       const std::vector<EffectEstimate>& effects) {
  auto out = open_out(path);
  out << "method,converged,log_or,odds_ratio,se_robust,se_md,se_kc,"
         "ci_robust_lower,ci_robust_upper,ci_md_lower,ci_md_upper,"
         "ci_kc_lower,ci_kc_upper\n";
  for (const auto& e : effects) {
    out << e.method << ',' << (e.converged ? 1 : 0) << ','
        << format_cell(e.log_or) << ',' << format_cell(std::exp(e.log_or))
        << ',' << format_cell(e.se_robust) << ',' << format_cell(e.se_md)
        << ',' << format_cell(e.se_kc) << ',' << format_cell(e.ci_robust.lower)
        << ',' << format_cell(e.ci_robust.upper) << ','
        << format_cell(e.ci_md.lower) << ',' << format_cell(e.ci_md.upper)
        << ',' << format_cell(e.ci_kc.lower) << ','
        << format_cell(e.ci_kc.upper) << '\n';
  }
}

void write_balance_csv(const std::filesystem::path& path,
                       const std::vector<std::string>& covariate_names,
                       const Eigen::VectorXd& unweighted,
                       const std::vector<WeightedAsd>& weighted) {
  if (unweighted.size() != static_cast<Eigen::Index>(covariate_names.size()))
    throw ValidationError("balance table: name/value length mismatch");
  auto out = open_out(path);
  out << "covariate,asd_unweighted";
  for (const auto& [label, values] : weighted) out << ",asd_" << label;
  out << '\n';
  for (std::size_t p = 0; p < covariate_names.size(); ++p) {
    out << covariate_names[p] << ','
        << format_cell(unweighted[static_cast<Eigen::Index>(p)]);
    for (const auto& [label, values] : weighted) {
      out << ',';
      if (values)
        out << format_cell((*values)[static_cast<Eigen::Index>(p)]);
      else
        out << "NA";
    }
    out << '\n';
  }
}

void write_analyze_summary_json(const std::filesystem::path& path,
                                const std::string& data_path,
                                const std::vector<std::string>& methods,
                                const std::vector<EffectEstimate>& effects) {
  json j;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  j["data"] = data_path;
  j["methods"] = methods;
  json rows = json::array();
  for (const auto& e : effects) {
    json row;
    row["method"] = e.method;
    row["converged"] = e.converged;
    row["log_or"] = json_number(e.log_or);
    row["odds_ratio"] = json_number(std::exp(e.log_or));
    row["se"] = {{"robust", json_number(e.se_robust)},
                 {"md", json_number(e.se_md)},
                 {"kc", json_number(e.se_kc)}};
    row["ci_log_or"] = {
        {"robust", {json_number(e.ci_robust.lower), json_number(e.ci_robust.upper)}},
        {"md", {json_number(e.ci_md.lower), json_number(e.ci_md.upper)}},
        {"kc", {json_number(e.ci_kc.lower), json_number(e.ci_kc.upper)}}};
    row["ci_odds_ratio"] = {
        {"robust",
         {json_number(std::exp(e.ci_robust.lower)),
          json_number(std::exp(e.ci_robust.upper))}},
        {"md",
         {json_number(std::exp(e.ci_md.lower)),
          json_number(std::exp(e.ci_md.upper))}},
        {"kc",
         {json_number(std::exp(e.ci_kc.lower)),
          json_number(std::exp(e.ci_kc.upper))}}};
    rows.push_back(row);
  }
  j["effects"] = rows;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace crtgee
