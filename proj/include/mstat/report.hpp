#pragma once

#include <string>

#include "mstat/first_order.hpp"
#include "mstat/manifold.hpp"
#include "mstat/second_order.hpp"

#include "json.hpp"

namespace mstat {

inline constexpr const char* kSchemaVersion = "1";
inline constexpr const char* kToolVersion = "1.0.0";

// --- series files -----------------------------------------------------------
// CSV with a header row; one row per time point.  Sphere/Euclidean: ambient
// coordinates.  SPD: row-major upper triangle of the symmetric matrix.

void write_series(const ManifoldSeries& s, const std::string& path);

// Parses and validates a series file.  Sphere rows within 1e-6 of unit norm
// are renormalized, anything further off is rejected; SPD rows must be
// positive definite; at least 8 rows are required.
ManifoldSeries read_series(const std::string& path, ManifoldKind kind,
                           int ambient_dim);

// Square-root compositional transform: rows of nonnegative proportions
// summing to 1 map to unit vectors on the sphere.
ManifoldSeries sqrt_compose(const Eigen::MatrixXd& proportions);

// Reads a proportions CSV (header row) and applies sqrt_compose.
ManifoldSeries read_compositional(const std::string& path, int ambient_dim);

// --- JSON reports ------------------------------------------------------------

nlohmann::json report_to_json(const FirstOrderReport& rep);
nlohmann::json report_to_json(const SecondOrderReport& rep);

// Wraps a result in the versioned report envelope and writes it.
void write_report(const nlohmann::json& inputs_echo,
                  const nlohmann::json& result, double wall_seconds,
                  const std::string& path);

}  // namespace mstat
