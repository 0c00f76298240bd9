#include "crtgee/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace crtgee {

namespace {

bool is_binary01(double v) { return v == 0.0 || v == 1.0; }

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ClusterDataset::ClusterDataset(std::vector<Cluster> clusters,
                               std::vector<std::string> covariate_names)
    : clusters_(std::move(clusters)), names_(std::move(covariate_names)) {
  if (clusters_.size() < 2)
    throw ValidationError("dataset needs at least 2 clusters");

  std::set<std::string> seen_names;
  for (const auto& name : names_) {
    if (name.empty() || name.find(',') != std::string::npos)
      throw ValidationError("covariate name empty or contains a comma: '" +
                            name + "'");
    if (!seen_names.insert(name).second)
      throw ValidationError("duplicate covariate name: '" + name + "'");
  }

  const auto p = static_cast<Eigen::Index>(names_.size());
  std::set<std::string> seen_ids;
  bool any_treated = false;
  bool any_control = false;
  for (const auto& cl : clusters_) {
    if (!seen_ids.insert(cl.id).second)
      throw ValidationError("duplicate cluster id: '" + cl.id + "'");
    if (cl.treatment != 0 && cl.treatment != 1)
      throw ValidationError("cluster '" + cl.id + "': treatment must be 0 or 1");
    if (cl.size() == 0)
      throw ValidationError("cluster '" + cl.id + "' is empty");
    if (cl.covariates.rows() != cl.size() || cl.covariates.cols() != p)
      throw ValidationError("cluster '" + cl.id +
                            "': covariate matrix shape mismatch");
    for (Eigen::Index j = 0; j < cl.size(); ++j) {
      if (!is_binary01(cl.outcomes[j]))
        throw ValidationError("cluster '" + cl.id + "': outcome must be 0 or 1");
    }
    if (!cl.covariates.allFinite())
      throw ValidationError("cluster '" + cl.id + "': non-finite covariate");
    (cl.treatment == 1 ? any_treated : any_control) = true;
    n_subjects_ += cl.size();
  }
  if (!any_treated || !any_control)
    throw ValidationError("dataset must contain both treatment arms");
}

void CovariateSpec::validate_for(const ClusterDataset& data) const {
  if (mode_ != Mode::subset) return;
  std::set<Eigen::Index> seen;
  for (Eigen::Index idx : indices_) {
    if (idx < 0 || idx >= data.n_covariates())
      throw ValidationError("covariate index out of range: " +
                            std::to_string(idx));
    if (!seen.insert(idx).second)
      throw ValidationError("repeated covariate index: " + std::to_string(idx));
  }
}

Eigen::Index CovariateSpec::n_design_columns(Eigen::Index p) const {
  switch (mode_) {
    case Mode::crude:
      return 2;
    case Mode::all_main_effects:
      return p + 2;
    case Mode::subset:
      return static_cast<Eigen::Index>(indices_.size()) + 2;
  }
  return 0;
}

std::vector<Eigen::MatrixXd> design_matrix(const ClusterDataset& data,
                                           const CovariateSpec& spec) {
  spec.validate_for(data);
  std::vector<Eigen::Index> cols;
  if (spec.mode() == CovariateSpec::Mode::all_main_effects) {
    cols.resize(data.n_covariates());
    for (Eigen::Index j = 0; j < data.n_covariates(); ++j) cols[j] = j;
  } else if (spec.mode() == CovariateSpec::Mode::subset) {
    cols = spec.indices();
  }

  const auto q = static_cast<Eigen::Index>(cols.size()) + 2;
  std::vector<Eigen::MatrixXd> design;
  design.reserve(data.clusters().size());
  for (const auto& cl : data.clusters()) {
    Eigen::MatrixXd x(cl.size(), q);
    x.col(0).setOnes();
    for (std::size_t k = 0; k < cols.size(); ++k)
      x.col(static_cast<Eigen::Index>(k) + 1) = cl.covariates.col(cols[k]);
    x.col(q - 1).setConstant(static_cast<double>(cl.treatment));
    design.push_back(std::move(x));
  }
  return design;
}

Eigen::VectorXd stacked_outcomes(const ClusterDataset& data) {
  Eigen::VectorXd y(data.n_subjects());
  Eigen::Index at = 0;
  for (const auto& cl : data.clusters()) {
    y.segment(at, cl.size()) = cl.outcomes;
    at += cl.size();
  }
  return y;
}

Eigen::VectorXd stacked_treatment(const ClusterDataset& data) {
  Eigen::VectorXd z(data.n_subjects());
  Eigen::Index at = 0;
  for (const auto& cl : data.clusters()) {
    z.segment(at, cl.size()).setConstant(static_cast<double>(cl.treatment));
    at += cl.size();
  }
  return z;
}

Eigen::MatrixXd stacked_covariates(const ClusterDataset& data) {
  Eigen::MatrixXd x(data.n_subjects(), data.n_covariates());
  Eigen::Index at = 0;
  for (const auto& cl : data.clusters()) {
    x.middleRows(at, cl.size()) = cl.covariates;
    at += cl.size();
  }
  return x;
}

ClusterDataset select_covariates(const ClusterDataset& data,
                                 const std::vector<std::string>& names) {
  std::vector<Eigen::Index> cols;
  cols.reserve(names.size());
  for (const auto& name : names) {
    const auto& all = data.covariate_names();
    const auto it = std::find(all.begin(), all.end(), name);
    if (it == all.end())
      throw ValidationError("unknown covariate name: '" + name + "'");
    cols.push_back(static_cast<Eigen::Index>(it - all.begin()));
  }
  std::vector<Cluster> clusters;
  clusters.reserve(data.clusters().size());
  for (const auto& cl : data.clusters()) {
    Cluster out;
    out.id = cl.id;
    out.treatment = cl.treatment;
    out.outcomes = cl.outcomes;
    out.covariates.resize(cl.size(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k)
      out.covariates.col(static_cast<Eigen::Index>(k)) =
          cl.covariates.col(cols[k]);
    clusters.push_back(std::move(out));
  }
  return ClusterDataset(std::move(clusters), names);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, std::size_t row,
                    const std::string& what) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
    throw CsvError("row " + std::to_string(row) + ": " + what +
                   " is not a finite number: '" + s + "'");
  return v;
}

int parse_binary(const std::string& s, std::size_t row,
                 const std::string& what) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw CsvError("row " + std::to_string(row) + ": " + what +
                 " must be 0 or 1, got '" + s + "'");
}

}  // namespace

ClusterDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line))
    throw CsvError("'" + path.string() + "': empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "cluster_id" ||
      header[1] != "treatment" || header[2] != "outcome")
    throw CsvError("row 1: header must start with cluster_id,treatment,outcome");
  const std::vector<std::string> names(header.begin() + 3, header.end());

  // Rows for one cluster need not be contiguous; group by id, preserving the
  // order of first appearance and the within-cluster file order.
  std::vector<std::string> id_order;
  struct Raw {
    int treatment = 0;
    std::vector<double> outcomes;
    std::vector<double> covariates;  // row-major
  };
  std::vector<Raw> raws;
  std::unordered_map<std::string, std::size_t> index;

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty())
      throw CsvError("row " + std::to_string(row) + ": blank line");
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw CsvError("row " + std::to_string(row) + ": expected " +
                     std::to_string(header.size()) + " fields, got " +
                     std::to_string(fields.size()));
    const std::string& id = fields[0];
    if (id.empty())
      throw CsvError("row " + std::to_string(row) + ": empty cluster_id");
    const int z = parse_binary(fields[1], row, "treatment");
    const int y = parse_binary(fields[2], row, "outcome");

    auto [it, inserted] = index.try_emplace(id, raws.size());
    if (inserted) {
      raws.emplace_back();
      raws.back().treatment = z;
      id_order.push_back(id);
    } else if (raws[it->second].treatment != z) {
      throw CsvError("row " + std::to_string(row) + ": cluster '" + id +
                     "' changes treatment arm");
    }
    Raw& raw = raws[it->second];
    raw.outcomes.push_back(static_cast<double>(y));
    for (std::size_t j = 0; j < names.size(); ++j)
      raw.covariates.push_back(
          parse_double(fields[3 + j], row, "covariate " + names[j]));
  }
  if (raws.empty()) throw CsvError("'" + path.string() + "': no data rows");

  std::vector<Cluster> clusters;
  clusters.reserve(raws.size());
  const auto p = static_cast<Eigen::Index>(names.size());
  for (std::size_t c = 0; c < raws.size(); ++c) {
    Cluster cl;
    cl.id = id_order[c];
    cl.treatment = raws[c].treatment;
    const auto m = static_cast<Eigen::Index>(raws[c].outcomes.size());
    cl.outcomes = Eigen::Map<const Eigen::VectorXd>(raws[c].outcomes.data(), m);
    cl.covariates = Eigen::Map<const Eigen::Matrix<
        double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        raws[c].covariates.data(), m, p);
    clusters.push_back(std::move(cl));
  }
  return ClusterDataset(std::move(clusters), names);
}

void write_csv(const ClusterDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write '" + path.string() + "'");
  out << "cluster_id,treatment,outcome";
  for (const auto& name : data.covariate_names()) out << ',' << name;
  out << '\n';
  for (const auto& cl : data.clusters()) {
    for (Eigen::Index j = 0; j < cl.size(); ++j) {
      out << cl.id << ',' << cl.treatment << ','
          << static_cast<int>(cl.outcomes[j]);
      for (Eigen::Index k = 0; k < data.n_covariates(); ++k)
        out << ',' << format_double(cl.covariates(j, k));
      out << '\n';
    }
  }
  if (!out) throw CsvError("write failed for '" + path.string() + "'");
}

}  // namespace crtgee
