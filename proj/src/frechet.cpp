#include "mstat/frechet.hpp"

#include <cmath>
#include <fmt/format.h>
#include <numbers>

namespace mstat {
namespace {

Amb extrinsic_projection(const ManifoldSeries& s) {
  Amb avg = s.manifold->zero_tangent();
  for (const Amb& p : s.points) avg += p;
  avg /= static_cast<double>(s.size());
  switch (s.manifold->kind()) {
    case ManifoldKind::Sphere: {
      const double n = avg.norm();
      if (n < 1e-12) {
        throw NumericError(
            "frechet: ambient average of sphere data is ~0; no stable "
            "starting point");
      }
      return avg / n;
    }
    case ManifoldKind::Spd:
    case ManifoldKind::Euclidean:
      return avg;  // arithmetic mean is already a valid point
  }
  throw InputError("unknown manifold kind");
}

void check_hemisphere(const ManifoldSeries& s) {
  // Equivalent to max pairwise geodesic distance < pi - 1e-6, phrased on the
  // ambient inner products to avoid T^2 acos calls.
  const double threshold = std::cos(std::numbers::pi - 1e-6);
  const int t = s.size();
  for (int i = 0; i < t; ++i) {
    for (int j = i + 1; j < t; ++j) {
      if (s.points[i].col(0).dot(s.points[j].col(0)) <= threshold) {
        throw NumericError(fmt::format(
            "frechet: sphere observations {} and {} are nearly antipodal; "
            "data must lie in an open hemisphere for a unique mean",
            i + 1, j + 1));
      }
    }
  }
}

}  // namespace

FrechetResult frechet_mean(const ManifoldSeries& s, const FrechetConfig& cfg) {
  if (s.points.empty()) throw InputError("frechet: empty sample");
  const Manifold& m = *s.manifold;
  if (m.kind() == ManifoldKind::Sphere) check_hemisphere(s);

  Amb mu;
  switch (cfg.init) {
    case FrechetConfig::Init::FirstPoint:
      mu = s.points.front();
      break;
    case FrechetConfig::Init::ExtrinsicProjection:
      mu = extrinsic_projection(s);
      break;
    case FrechetConfig::Init::UserSupplied:
      m.validate(cfg.init_point);
      mu = cfg.init_point;
      break;
  }

  FrechetResult out;
  const double inv_t = 1.0 / static_cast<double>(s.size());
  for (int it = 0; it <= cfg.max_iter; ++it) {
    Amb grad = m.zero_tangent();
    for (const Amb& p : s.points) grad += m.log(mu, p);
    grad *= inv_t;
    out.iterations = it;
    out.grad_norm = m.norm(mu, grad);
    if (out.grad_norm <= cfg.tol) {
      out.converged = true;
      break;
    }
    if (it == cfg.max_iter) break;
    mu = m.exp(mu, cfg.step * grad);
  }
  out.mean = std::move(mu);
  return out;
}

}  // namespace mstat
