#include "mstat/models.hpp"

#include <cmath>
#include <fmt/format.h>
#include <functional>
#include <numbers>

#include "mstat/rng.hpp"

namespace mstat {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kGuardRetries = 10;

using InnovationFn = std::function<Eigen::VectorXd(double /*t*/, RngStream&)>;
using CoefFn = std::function<double(double /*t*/)>;

// Shared driver for all models: a tangent AR(1) state in parallel-frame
// coordinates, burn-in at the first rescaled time, and an excursion guard
// for spherical targets.  Coordinates are emitted before each update, so the
// step from observation i to i+1 uses coefficients at t_i = (i+1)/T.
struct ArDriver {
  int t = 0;
  int burn_in = 50;
  int dim = 0;
  CoefFn coef;
  InnovationFn innovation;
  bool sphere_guard = false;
  RngStream* stream = nullptr;

  int resampled = 0;

  Eigen::MatrixXd run() {
    Eigen::MatrixXd states(t, dim);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(dim);
    const double t1 = 1.0 / static_cast<double>(t);
    for (int i = 0; i < burn_in; ++i) step(a, t1);
    for (int i = 0; i < t; ++i) {
      states.row(i) = a;
      if (i + 1 < t) step(a, static_cast<double>(i + 1) / t);
    }
    return states;
  }

 private:
  void step(Eigen::VectorXd& a, double ti) {
    const double c = coef(ti);
    for (int attempt = 0;; ++attempt) {
      const Eigen::VectorXd candidate = c * a + innovation(ti, *stream);
      if (!sphere_guard || candidate.norm() < kPi) {
        a = candidate;
        return;
      }
      ++resampled;
      if (attempt >= kGuardRetries) {
        throw NumericError(fmt::format(
            "tangent state left the injectivity ball {} times in a row at "
            "t={:.4g}; the process is too explosive for the sphere",
            kGuardRetries + 1, ti));
      }
    }
  }
};

Amb unit_vector(int n, int j) {
  Amb e = Amb::Zero(n, 1);
  e(j, 0) = 1.0;
  return e;
}

// Symmetric 3x3 matrix with diagonal (c0, c1, c2) and symmetric off-diagonal
// entries c3 (0,1), c4 (0,2), c5 (1,2): coordinates in the basis of unit
// diagonal and paired off-diagonal matrices (the latter of norm sqrt(2)).
Eigen::MatrixXd sym_from(const Eigen::VectorXd& c) {
  Eigen::MatrixXd s(3, 3);
  s << c(0), c(3), c(4), c(3), c(1), c(5), c(4), c(5), c(2);
  return s;
}

// --- sphere S^6 models -----------------------------------------------------

// Quarter great circle from the last axis towards the first.
Amb sphere_mean_curve(double s) {
  Amb p = Amb::Zero(7, 1);
  p(6, 0) = std::cos(kPi * s / 2.0);
  p(0, 0) = std::sin(kPi * s / 2.0);
  return p;
}

SimResult run_sphere_ar(const std::vector<Amb>& mean_curve, CoefFn coef,
                        InnovationFn innovation, const SimSpec& spec,
                        RngStream& stream) {
  auto sphere = make_sphere(6);
  // Parallel frame along the mean curve, seeded at the curve start.
  std::vector<Amb> lead{sphere_mean_curve(0.0)};
  lead.insert(lead.end(), mean_curve.begin(), mean_curve.end());
  const auto frames =
      parallel_frame(*sphere, lead, sphere->tangent_basis(lead.front()));

  ArDriver driver{.t = spec.t,
                  .burn_in = spec.burn_in,
                  .dim = 6,
                  .coef = std::move(coef),
                  .innovation = std::move(innovation),
                  .sphere_guard = true,
                  .stream = &stream};
  const Eigen::MatrixXd states = driver.run();

  SimResult out;
  out.resampled_steps = driver.resampled;
  out.series.manifold = sphere;
  out.series.points.reserve(spec.t);
  for (int i = 0; i < spec.t; ++i) {
    const Amb v = from_coords(*sphere, mean_curve[i], frames[i + 1],
                              states.row(i).transpose());
    out.series.points.push_back(sphere->exp(mean_curve[i], v));
  }
  return out;
}

SimResult simulate_m1(const SimSpec& spec) {
  RngStream stream(spec.seed, "m1", 0);
  const double tau = spec.tau;
  std::vector<Amb> curve;
  curve.reserve(spec.t);
  for (int i = 1; i <= spec.t; ++i) {
    curve.push_back(sphere_mean_curve(tau * i / spec.t));
  }
  const double atten = 1.0 / (1.0 + tau);
  auto innovation = [atten](double ti, RngStream& rs) {
    Eigen::VectorXd e(6);
    for (int j = 0; j < 6; ++j) {
      const double sigma = (j < 3 ? 1.1 + 1.1 * ti : 1.0) * atten;
      e(j) = sigma * rs.uniform(-0.5, 0.5);
    }
    return e;
  };
  return run_sphere_ar(
      curve, [](double ti) { return 0.05 + 0.5 * ti * (1.0 - ti); },
      innovation, spec, stream);
}

// --- SPD models ------------------------------------------------------------

// Innovation coordinates shared by the SPD models: standard normal on the
// diagonal, N(0, 1/4) on the symmetric off-diagonal pairs.
Eigen::VectorXd spd_noise(RngStream& rs) {
  Eigen::VectorXd z(6);
  for (int j = 0; j < 3; ++j) z(j) = rs.normal();
  for (int j = 3; j < 6; ++j) z(j) = 0.5 * rs.normal();
  return z;
}

SimResult run_spd_ar(const std::vector<double>& mean_scale, CoefFn coef,
                     InnovationFn innovation, const SimSpec& spec,
                     RngStream& stream) {
  auto spd = make_spd(3);
  ArDriver driver{.t = spec.t,
                  .burn_in = spec.burn_in,
                  .dim = 6,
                  .coef = std::move(coef),
                  .innovation = std::move(innovation),
                  .sphere_guard = false,
                  .stream = &stream};
  const Eigen::MatrixXd states = driver.run();

  SimResult out;
  out.series.manifold = spd;
  out.series.points.reserve(spec.t);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
  for (int i = 0; i < spec.t; ++i) {
    // Mean 2^{tau t} I; the parallel frame along this curve is the initial
    // symmetric basis scaled by the same factor.
    const double s = mean_scale[i];
    const Amb mean = s * id;
    const Amb v = s * sym_from(states.row(i).transpose());
    Amb x = spd->exp(mean, v);
    Eigen::LLT<Eigen::MatrixXd> llt(x);
    if (llt.info() != Eigen::Success) {
      throw NumericError(
          "internal error: simulated SPD point lost positive definiteness");
    }
    out.series.points.push_back(std::move(x));
  }
  return out;
}

SimResult simulate_m2(const SimSpec& spec) {
  RngStream stream(spec.seed, "m2", 0);
  const double tau = spec.tau;
  std::vector<double> scale;
  scale.reserve(spec.t);
  for (int i = 1; i <= spec.t; ++i) {
    scale.push_back(std::exp2(tau * i / spec.t));
  }
  const double atten = 1.0 / (1.0 + 2.0 * tau);
  auto innovation = [atten](double ti, RngStream& rs) {
    const double s = atten * (6.25 * (ti - 0.25) * (ti - 0.25) + 0.2);
    return Eigen::VectorXd(s * spd_noise(rs));
  };
  return run_spd_ar(
      scale, [](double ti) { return 0.05 + 0.25 * ti; }, innovation, spec,
      stream);
}

// --- stationary-mean models (second-order study) ---------------------------

CoefFn m3_coefficient(double tau) {
  return [tau](double ti) {
    return 0.1 + tau * (0.2 * std::cos(2.0 * kPi * ti) + ti * (1.0 - ti));
  };
}

Eigen::VectorXd uniform_noise(RngStream& rs) {
  Eigen::VectorXd e(6);
  for (int j = 0; j < 6; ++j) e(j) = rs.uniform(-0.75, 0.75);
  return e;
}

SimResult simulate_m3_sphere(const SimSpec& spec) {
  RngStream stream(spec.seed, "m3-sphere", 0);
  const std::vector<Amb> curve(spec.t, sphere_mean_curve(0.0));
  return run_sphere_ar(
      curve, m3_coefficient(spec.tau),
      [](double, RngStream& rs) { return uniform_noise(rs); }, spec, stream);
}

SimResult simulate_m3_spd(const SimSpec& spec) {
  RngStream stream(spec.seed, "m3-spd", 0);
  const std::vector<double> scale(spec.t, 1.0);
  return run_spd_ar(
      scale, m3_coefficient(spec.tau),
      [](double, RngStream& rs) { return spd_noise(rs); }, spec, stream);
}

SimResult simulate_euclidean_ar(const SimSpec& spec) {
  RngStream stream(spec.seed, "m3-euclid", 0);
  ArDriver driver{.t = spec.t,
                  .burn_in = spec.burn_in,
                  .dim = 6,
                  .coef = m3_coefficient(spec.tau),
                  .innovation = [](double, RngStream& rs) { return uniform_noise(rs); },
                  .sphere_guard = false,
                  .stream = &stream};
  const Eigen::MatrixXd states = driver.run();
  SimResult out;
  out.series.manifold = make_euclidean(6);
  out.series.points.reserve(spec.t);
  for (int i = 0; i < spec.t; ++i) {
    out.series.points.push_back(states.row(i).transpose());
  }
  return out;
}

}  // namespace

SimResult simulate(const SimSpec& spec) {
  if (spec.t < 1) throw InputError("simulate: series length must be >= 1");
  if (spec.tau < 0.0) throw InputError("simulate: tau must be >= 0");
  if (spec.burn_in < 0) throw InputError("simulate: burn-in must be >= 0");
  switch (spec.model) {
    case SimModel::M1:
      return simulate_m1(spec);
    case SimModel::M2:
      return simulate_m2(spec);
    case SimModel::M3Sphere:
      return simulate_m3_sphere(spec);
    case SimModel::M3Spd:
      return simulate_m3_spd(spec);
    case SimModel::EuclideanAR:
      return simulate_euclidean_ar(spec);
  }
  throw InputError("unknown simulation model");
}

SimResult simulate_local_alternative(const LocalAltSpec& spec) {
  if (spec.base.model != SimModel::M1) {
    throw InputError(
        "local alternatives are defined for the sphere base model (M1)");
  }
  if (spec.base.t < 1) throw InputError("simulate: series length must be >= 1");
  const int t = spec.base.t;
  const double displacement =
      spec.scale_by_sqrt_t ? spec.rate / std::sqrt(static_cast<double>(t))
                           : spec.rate;

  auto sphere = make_sphere(6);
  const Amb mu = sphere_mean_curve(0.0);
  std::vector<Amb> curve;
  curve.reserve(t);
  for (int i = 1; i <= t; ++i) {
    const double ti = static_cast<double>(i) / t;
    Amb b = sphere->zero_tangent();
    for (const FourierTangent& f : spec.curve) {
      const double angle = 2.0 * kPi * f.harmonic * ti;
      b += std::cos(angle) * f.cos_coef + std::sin(angle) * f.sin_coef;
    }
    curve.push_back(sphere->exp(mu, displacement * b));
  }

  // Stationary base dynamics (tau = 0) attached along the drifting mean.
  RngStream stream(spec.base.seed, "m1", 0);
  auto innovation = [](double ti, RngStream& rs) {
    Eigen::VectorXd e(6);
    for (int j = 0; j < 6; ++j) {
      const double sigma = j < 3 ? 1.1 + 1.1 * ti : 1.0;
      e(j) = sigma * rs.uniform(-0.5, 0.5);
    }
    return e;
  };
  return run_sphere_ar(
      curve, [](double ti) { return 0.05 + 0.5 * ti * (1.0 - ti); },
      innovation, spec.base, stream);
}

}  // namespace mstat
