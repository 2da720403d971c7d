#pragma once

#include <cstdint>
#include <vector>

#include "mstat/manifold.hpp"

namespace mstat {

enum class SimModel { M1, M2, M3Sphere, M3Spd, EuclideanAR };

struct SimSpec {
  SimModel model = SimModel::M1;
  double tau = 0.0;  // deviation from stationarity; 0 = stationary
  int t = 100;
  std::uint64_t seed = 0;
  int burn_in = 50;
};

struct SimResult {
  ManifoldSeries series;
  // Innovations redrawn by the sphere excursion guard (tangent state about
  // to leave the injectivity ball of radius pi).
  int resampled_steps = 0;
};

// Time-varying tangent-space AR(1) processes; see the CLI documentation for
// the model definitions.  Deterministic given (model, tau, t, seed).
SimResult simulate(const SimSpec& spec);

// One cosine/sine pair of a tangent-vector Fourier series: contributes
// cos(2*pi*h*t) * cos_coef + sin(2*pi*h*t) * sin_coef to b(t).
struct FourierTangent {
  int harmonic = 1;
  Amb cos_coef;
  Amb sin_coef;
};

struct LocalAltSpec {
  // Base dynamics (currently the stationary sphere model M1 at tau = 0).
  SimSpec base;
  // Mean curve direction b(t); coefficients are tangent vectors at the base
  // mean.  Empty curve means b = 0 (reduces exactly to the base model).
  std::vector<FourierTangent> curve;
  double rate = 1.0;
  // true: mean displacement tau(T) = rate / sqrt(T); false: fixed `rate`.
  bool scale_by_sqrt_t = true;
};

// Series drifting along exp_mu(tau(T) * b(t)) with stationary innovations
// attached through the parallel frame along the drifting mean curve.
SimResult simulate_local_alternative(const LocalAltSpec& spec);

}  // namespace mstat
