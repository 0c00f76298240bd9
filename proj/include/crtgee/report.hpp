#ifndef CRTGEE_REPORT_HPP
#define CRTGEE_REPORT_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crtgee/effects.hpp"
#include "crtgee/study.hpp"

namespace crtgee {

// Fixed-header metrics table:
// method,ate,bias,re,cvg_robust,cvg_md,cvg_kc,non_con
// Undefined cells are written as NA.
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MethodMetrics>& metrics);

// Reproducibility record for a simulation run: tool version, resolved
// config, truth oracle, and the full metrics with MC standard errors and
// nominal-band flags.
void write_study_summary_json(const std::filesystem::path& path,
                              const StudyConfig& cfg, const StudyResult& result);

// Per-method effect table for `analyze`:
// method,converged,log_or,odds_ratio,se_*,ci_*_lower,ci_*_upper
void write_effects_csv(const std::filesystem::path& path,
                       const std::vector<EffectEstimate>& effects);

// Covariate balance table: unweighted ASD plus one column per weighting
// scheme (NA when the scheme's propensity fit failed).
using WeightedAsd =
    std::pair<std::string, std::optional<Eigen::VectorXd>>;
void write_balance_csv(const std::filesystem::path& path,
                       const std::vector<std::string>& covariate_names,
                       const Eigen::VectorXd& unweighted,
                       const std::vector<WeightedAsd>& weighted);

void write_analyze_summary_json(const std::filesystem::path& path,
                                const std::string& data_path,
                                const std::vector<std::string>& methods,
                                const std::vector<EffectEstimate>& effects);

// %.10g, NaN as NA; shared by every CSV writer so reports are reproducible.
std::string format_cell(double value);

}  // namespace crtgee

#endif
