#include "crtgee/study.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "crtgee/errors.hpp"

namespace crtgee {

std::string to_string(Method method) {
  switch (method) {
    case Method::crude:
      return "crude";
    case Method::multi:
      return "multi";
    case Method::ipw_logit:
      return "ipw_logit";
    case Method::ow_logit:
      return "ow_logit";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  if (text == "crude") return Method::crude;
  if (text == "multi") return Method::multi;
  if (text == "ipw_logit") return Method::ipw_logit;
  if (text == "ow_logit") return Method::ow_logit;
  throw ConfigError("unknown method '" + text +
                    "' (expected crude, multi, ipw_logit, ow_logit)");
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

long long parse_int(const std::string& v, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0' || errno == ERANGE)
    throw ConfigError(key + ": not an integer: '" + v + "'");
  return x;
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0' || errno == ERANGE ||
      v.find('-') != std::string::npos)
    throw ConfigError(key + ": not an unsigned integer: '" + v + "'");
  return x;
}

double parse_real(const std::string& v, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(x))
    throw ConfigError(key + ": not a finite number: '" + v + "'");
  return x;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

}  // namespace

StudyConfig load_study_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");

  StudyConfig cfg;
  bool have_master_seed = false, have_truth_seed = false, have_n_reps = false;
  bool have_methods = false, have_variances = false;
  std::string scenario_key;
  bool scenario_custom = false;
  bool have_model = false, have_incidence = false, have_p = false;
  bool have_beta0 = false, have_beta_z = false;
  bool have_n_clusters = false, have_mean_size = false, have_icc = false;

  std::string section;  // "" = top level
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);

    if (line.front() == '[') {
      if (line != "[scenario]")
        throw ConfigError(where + ": unknown section " + line);
      section = "scenario";
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError(where + ": empty key or value");

    if (section.empty()) {
      if (key == "methods") {
        for (const auto& item : split_list(value)) {
          const Method m = parse_method(item);
          if (std::find(cfg.methods.begin(), cfg.methods.end(), m) !=
              cfg.methods.end())
            throw ConfigError(where + ": duplicate method '" + item + "'");
          cfg.methods.push_back(m);
        }
        have_methods = true;
      } else if (key == "variance_estimators") {
        for (const auto& item : split_list(value)) {
          if (item == "robust")
            cfg.variances.robust = true;
          else if (item == "md")
            cfg.variances.md = true;
          else if (item == "kc")
            cfg.variances.kc = true;
          else
            throw ConfigError(where + ": unknown variance estimator '" + item +
                              "' (expected robust, md, kc)");
        }
        have_variances = true;
      } else if (key == "n_reps") {
        const long long n = parse_int(value, key);
        if (n < 1) throw ConfigError("n_reps must be positive");
        cfg.sim.n_reps = static_cast<int>(n);
        have_n_reps = true;
      } else if (key == "master_seed") {
        cfg.sim.master_seed = parse_u64(value, key);
        have_master_seed = true;
      } else if (key == "truth_seed") {
        cfg.truth_seed = parse_u64(value, key);
        have_truth_seed = true;
      } else if (key == "workers") {
        const long long w = parse_int(value, key);
        if (w < 1) throw ConfigError("workers must be positive");
        cfg.workers = static_cast<unsigned>(w);
      } else if (key == "output_path") {
        cfg.output_path = value;
      } else {
        throw ConfigError(where + ": unknown key '" + key + "'");
      }
      continue;
    }

    // [scenario]
    if (key == "key") {
      scenario_key = value;
    } else if (key == "custom") {
      scenario_custom = parse_bool(value, key);
    } else if (key == "model") {
      cfg.sim.model = static_cast<int>(parse_int(value, key));
      have_model = true;
    } else if (key == "incidence") {
      cfg.sim.incidence = parse_incidence(value);
      have_incidence = true;
    } else if (key == "n_covariates") {
      cfg.sim.n_covariates = static_cast<int>(parse_int(value, key));
      have_p = true;
    } else if (key == "beta0") {
      cfg.sim.beta0 = parse_real(value, key);
      have_beta0 = true;
    } else if (key == "beta_z") {
      cfg.sim.beta_z = parse_real(value, key);
      have_beta_z = true;
    } else if (key == "n_clusters") {
      cfg.sim.n_clusters = static_cast<int>(parse_int(value, key));
      have_n_clusters = true;
    } else if (key == "mean_cluster_size") {
      cfg.sim.mean_cluster_size = parse_real(value, key);
      have_mean_size = true;
    } else if (key == "icc_latent") {
      cfg.sim.icc_latent = parse_real(value, key);
      have_icc = true;
    } else {
      throw ConfigError(where + ": unknown scenario key '" + key + "'");
    }
  }

  if (!have_methods || cfg.methods.empty())
    throw ConfigError("config must list at least one method");
  if (!have_variances)
    throw ConfigError(
        "config must set variance_estimators (an empty list is allowed)");
  if (!have_n_reps) throw ConfigError("config must set n_reps");
  if (!have_master_seed) throw ConfigError("config must set master_seed");
  if (!have_n_clusters || !have_mean_size || !have_icc)
    throw ConfigError(
        "scenario must set n_clusters, mean_cluster_size, icc_latent");

  if (!scenario_key.empty()) {
    if (scenario_custom || have_model || have_incidence || have_p ||
        have_beta0 || have_beta_z)
      throw ConfigError(
          "scenario key and custom model parameters are mutually exclusive");
    const auto row = find_scenario(scenario_key);
    if (!row) throw ConfigError("unknown scenario key '" + scenario_key + "'");
    const int n_reps = cfg.sim.n_reps;
    const std::uint64_t seed = cfg.sim.master_seed;
    cfg.sim = config_from_scenario(*row, cfg.sim.n_clusters,
                                   cfg.sim.mean_cluster_size,
                                   cfg.sim.icc_latent);
    cfg.sim.n_reps = n_reps;
    cfg.sim.master_seed = seed;
    cfg.scenario_key = scenario_key;
  } else {
    if (!scenario_custom)
      throw ConfigError("scenario needs either key = ... or custom = true");
    if (!have_model || !have_incidence || !have_p || !have_beta0 ||
        !have_beta_z)
      throw ConfigError(
          "custom scenario must set model, incidence, n_covariates, beta0, "
          "beta_z");
    cfg.sim.custom = true;
  }

  // The crude method anchors relative efficiency; include it unconditionally.
  if (std::find(cfg.methods.begin(), cfg.methods.end(), Method::crude) ==
      cfg.methods.end())
    cfg.methods.insert(cfg.methods.begin(), Method::crude);

  if (!have_truth_seed) cfg.truth_seed = cfg.sim.master_seed;

  try {
    cfg.sim.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }
  return cfg;
}

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CRTGEE_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1)
      return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

EffectEstimate run_method(Method method, const ClusterDataset& data,
                          const VarianceSet& which) {
  try {
    switch (method) {
      case Method::crude:
        return estimate_crude(data, which);
      case Method::multi:
        return estimate_multivariable(data, CovariateSpec::all_main_effects(),
                                      which);
      case Method::ipw_logit:
        return estimate_weighted(data, WeightScheme::ipw_logistic(), which);
      case Method::ow_logit:
        return estimate_weighted(data, WeightScheme::ow_logistic(), which);
    }
  } catch (const Error&) {
    // Separation, singular information, degenerate predictions: all count as
    // a failed replication for this method.
  }
  return EffectEstimate::non_converged(to_string(method));
}

StudyResult run_study(const StudyConfig& cfg, unsigned workers_override) {
  cfg.sim.validate();
  if (cfg.methods.empty()) throw ValidationError("run_study: no methods");
  const auto n_reps = static_cast<std::uint64_t>(cfg.sim.n_reps);
  const unsigned workers = std::min<unsigned>(
      resolve_workers(workers_override ? workers_override : cfg.workers),
      static_cast<unsigned>(std::max<std::uint64_t>(n_reps, 1)));

  StudyResult result;
  result.truth = compute_true_delta(cfg.sim, cfg.truth_seed);

  result.replicates.resize(cfg.methods.size());
  for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
    result.replicates[k].method = to_string(cfg.methods[k]);
    result.replicates[k].estimates.resize(n_reps);
  }

  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const auto work = [&]() {
    for (;;) {
      const std::uint64_t r = next.fetch_add(1);
      if (r >= n_reps) return;
      {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure) return;
      }
      try {
        const ClusterDataset data = generate_dataset(cfg.sim, r);
        for (std::size_t k = 0; k < cfg.methods.size(); ++k)
          result.replicates[k].estimates[r] =
              run_method(cfg.methods[k], data, cfg.variances);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  result.metrics = aggregate(result.replicates, result.truth);
  return result;
}

}  // namespace crtgee
