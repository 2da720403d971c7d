#include "mstat/report.hpp"

#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "mstat/common.hpp"

namespace mstat {
namespace {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw NumericError("failed to format a number");
  return std::string(buf, ptr);
}

std::vector<std::string> column_names(const Manifold& m) {
  std::vector<std::string> names;
  if (m.kind() == ManifoldKind::Spd) {
    const int n = m.ambient_rows();
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        names.push_back(fmt::format("m{}{}", i + 1, j + 1));
  } else {
    for (int i = 0; i < m.ambient_rows(); ++i)
      names.push_back(fmt::format("x{}", i + 1));
  }
  return names;
}

// Row-major upper triangle, the on-disk layout for symmetric matrices.
std::vector<double> upper_triangle(const Amb& p) {
  std::vector<double> out;
  for (int i = 0; i < p.rows(); ++i)
    for (int j = i; j < p.cols(); ++j) out.push_back(p(i, j));
  return out;
}

Amb from_upper_triangle(const std::vector<double>& vals, int n) {
  Amb p(n, n);
  int idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      p(i, j) = vals[idx];
      p(j, i) = vals[idx];
      ++idx;
    }
  return p;
}

std::vector<std::vector<double>> parse_csv_rows(const std::string& path,
                                                int expect_cols) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path));
  std::string line;
  if (!std::getline(in, line))
    throw InputError(fmt::format("'{}' is empty (expected a header row)", path));

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      const char* b = field.data();
      const char* e = b + field.size();
      while (b < e && (*b == ' ' || *b == '\t')) ++b;
      while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(b, e, v);
      if (ec != std::errc{} || ptr != e)
        throw InputError(fmt::format("line {}: cannot parse '{}' as a number",
                                     lineno, field));
      vals.push_back(v);
    }
    if (static_cast<int>(vals.size()) != expect_cols)
      throw InputError(fmt::format("line {}: expected {} columns, found {}",
                                   lineno, expect_cols, vals.size()));
    rows.push_back(std::move(vals));
  }
  return rows;
}

}  // namespace

void write_series(const ManifoldSeries& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path));
  const auto names = column_names(*s.manifold);
  for (size_t i = 0; i < names.size(); ++i)
    out << (i ? "," : "") << names[i];
  out << "\n";
  for (const Amb& p : s.points) {
    std::vector<double> vals = s.manifold->kind() == ManifoldKind::Spd
                                   ? upper_triangle(p)
                                   : std::vector<double>(
                                         p.data(), p.data() + p.size());
    for (size_t i = 0; i < vals.size(); ++i)
      out << (i ? "," : "") << format_double(vals[i]);
    out << "\n";
  }
  if (!out) throw InputError(fmt::format("write to '{}' failed", path));
}

ManifoldSeries read_series(const std::string& path, ManifoldKind kind,
                           int ambient_dim) {
  auto m = make_manifold(kind, ambient_dim);
  const int cols = kind == ManifoldKind::Spd
                       ? ambient_dim * (ambient_dim + 1) / 2
                       : ambient_dim;
  const auto rows = parse_csv_rows(path, cols);
  if (rows.size() < 8)
    throw InputError(fmt::format(
        "series has {} rows; at least 8 time points are required",
        rows.size()));

  ManifoldSeries s;
  s.manifold = m;
  s.points.reserve(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    Amb p;
    if (kind == ManifoldKind::Spd) {
      p = from_upper_triangle(rows[r], ambient_dim);
    } else {
      p = Eigen::Map<const Eigen::VectorXd>(rows[r].data(), cols);
    }
    if (kind == ManifoldKind::Sphere) {
      const double norm = p.norm();
      if (std::abs(norm - 1.0) > 1e-6)
        throw InputError(fmt::format(
            "row {}: norm {:.9g} is more than 1e-6 away from 1", r + 1, norm));
      p /= norm;
    }
    try {
      m->validate(p);
    } catch (const InputError& e) {
      throw InputError(fmt::format("row {}: {}", r + 1, e.what()));
    }
    s.points.push_back(std::move(p));
  }
  return s;
}

ManifoldSeries sqrt_compose(const Eigen::MatrixXd& proportions) {
  ManifoldSeries s;
  s.manifold = make_sphere(static_cast<int>(proportions.cols()) - 1);
  s.points.reserve(proportions.rows());
  for (Eigen::Index r = 0; r < proportions.rows(); ++r) {
    for (Eigen::Index c = 0; c < proportions.cols(); ++c)
      if (proportions(r, c) < 0.0)
        throw InputError(fmt::format(
            "row {}: negative proportion {:.6g} in column {}", r + 1,
            proportions(r, c), c + 1));
    const double sum = proportions.row(r).sum();
    if (std::abs(sum - 1.0) > 1e-6)
      throw InputError(fmt::format(
          "row {}: proportions sum to {:.9g}, expected 1", r + 1, sum));
    Amb p = proportions.row(r).transpose().cwiseSqrt();
    p /= p.norm();
    s.points.push_back(std::move(p));
  }
  return s;
}

ManifoldSeries read_compositional(const std::string& path, int ambient_dim) {
  const auto rows = parse_csv_rows(path, ambient_dim);
  if (rows.size() < 8)
    throw InputError(fmt::format(
        "series has {} rows; at least 8 time points are required",
        rows.size()));
  Eigen::MatrixXd props(rows.size(), ambient_dim);
  for (size_t r = 0; r < rows.size(); ++r)
    props.row(r) = Eigen::Map<const Eigen::VectorXd>(rows[r].data(),
                                                     ambient_dim);
  return sqrt_compose(props);
}

nlohmann::json report_to_json(const FirstOrderReport& rep) {
  nlohmann::json j;
  j["test"] = "first-order";
  j["q_stat"] = rep.q_stat;
  j["p_value"] = rep.p_value;
  j["reject"] = rep.reject;
  j["block_n"] = rep.block_n;
  j["hessian_min_eig"] = rep.hessian_min_eig;
  j["seed"] = rep.seed;
  j["mean"] = std::vector<double>(rep.mean.data(),
                                  rep.mean.data() + rep.mean.size());
  j["mean_iterations"] = rep.mean_iterations;
  j["mean_grad_norm"] = rep.mean_grad_norm;
  j["bootstrap_draws"] = rep.bootstrap_draws;
  return j;
}

nlohmann::json report_to_json(const SecondOrderReport& rep) {
  nlohmann::json j;
  j["test"] = "second-order";
  j["v2"] = rep.v2;
  j["w"] = rep.w;
  j["sigma2"] = rep.sigma2;
  j["z"] = rep.z;
  j["p_value"] = rep.p_value;
  j["reject"] = rep.reject;
  j["term_cross"] = rep.term_cross;
  j["term_avg"] = rep.term_avg;
  j["block_n"] = rep.block_n;
  j["m"] = rep.m;
  j["t_eff"] = rep.t_eff;
  j["warnings"] = rep.warnings;
  return j;
}

void write_report(const nlohmann::json& inputs_echo,
                  const nlohmann::json& result, double wall_seconds,
                  const std::string& path) {
  nlohmann::json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["versions"] = {{"stattest", kToolVersion},
                     {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION,
                                           EIGEN_MAJOR_VERSION,
                                           EIGEN_MINOR_VERSION)}};
  doc["inputs"] = inputs_echo;
  doc["result"] = result;
  // Wall-clock is informational; every other field is seed-deterministic.
  doc["wall_seconds"] = wall_seconds;
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path));
  out << doc.dump(2) << "\n";
  if (!out) throw InputError(fmt::format("write to '{}' failed", path));
}

}  // namespace mstat
