#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace mstat {

// Ambient representation of a point or tangent vector: a column vector for
// the sphere and Euclidean space, a square symmetric matrix for SPD.
using Amb = Eigen::MatrixXd;

// Invalid user-supplied data or configuration (CLI exit code 2).
struct InputError : std::runtime_error {
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric degeneracy: cut locus, ill-conditioning, degenerate statistics
// (CLI exit code 3).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mstat
