#pragma once

#include "mstat/manifold.hpp"

namespace mstat {

struct FrechetConfig {
  enum class Init { FirstPoint, ExtrinsicProjection, UserSupplied };

  int max_iter = 200;
  double tol = 1e-9;  // on the Riemannian norm of the mean log vector
  double step = 1.0;
  Init init = Init::ExtrinsicProjection;
  Amb init_point;  // used when init == UserSupplied
};

struct FrechetResult {
  Amb mean;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

// Intrinsic mean by Karcher iteration: mu <- exp_mu(step * mean of logs).
// Sphere data must lie in an open hemisphere (max pairwise distance < pi),
// which guarantees a unique minimizer; violations raise NumericError.
FrechetResult frechet_mean(const ManifoldSeries& s,
                           const FrechetConfig& cfg = {});

}  // namespace mstat
