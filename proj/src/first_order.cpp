#include "mstat/first_order.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "mstat/frechet.hpp"
#include "mstat/rng.hpp"

namespace mstat {
namespace {

// Linear-interpolation quantile of a copy of xs (order statistic blend).
double quantile(std::vector<double> xs, double level) {
  std::sort(xs.begin(), xs.end());
  const double pos = level * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= xs.size()) return xs.back();
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[lo + 1] * frac;
}

double population_sd(const double* xs, int count) {
  double mean = 0.0;
  for (int i = 0; i < count; ++i) mean += xs[i];
  mean /= count;
  double var = 0.0;
  for (int i = 0; i < count; ++i) var += (xs[i] - mean) * (xs[i] - mean);
  return std::sqrt(var / count);
}

// Ambient demeaned coordinates for the Euclidean baseline: each point
// flattened to its ambient entries minus the ambient sample average.
Eigen::MatrixXd ambient_demeaned(const ManifoldSeries& s, Amb* mean_out) {
  const int t = s.size();
  Amb avg = s.manifold->zero_tangent();
  for (const Amb& p : s.points) avg += p;
  avg /= static_cast<double>(t);
  const auto flat = static_cast<int>(avg.size());
  Eigen::MatrixXd coords(t, flat);
  for (int i = 0; i < t; ++i) {
    const Amb diff = s.points[i] - avg;
    coords.row(i) = Eigen::Map<const Eigen::VectorXd>(diff.data(), flat);
  }
  if (mean_out != nullptr) *mean_out = avg;
  return coords;
}

void check_block(int block_n, int t) {
  if (block_n < 1) throw InputError("block size must be positive");
  if (2 * block_n >= t) {
    throw InputError(
        fmt::format("block size {} must be below T/2 = {}", block_n, t / 2));
  }
  if (t < 4 * block_n) {
    throw InputError(fmt::format(
        "series length {} is below the required 4 x block size = {}", t,
        4 * block_n));
  }
}

}  // namespace

double cusum_statistic(const Eigen::MatrixXd& coords) {
  const int t = static_cast<int>(coords.rows());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(coords.cols());
  double best = 0.0;
  for (int i = 0; i < t; ++i) {
    acc += coords.row(i).transpose();
    best = std::max(best, acc.norm());
  }
  return best / std::sqrt(static_cast<double>(t));
}

std::vector<Eigen::MatrixXd> hessian_prefix(const ManifoldSeries& s,
                                            const Amb& mean,
                                            const std::vector<Amb>& basis) {
  const Manifold& m = *s.manifold;
  const int t = s.size();
  const int d = m.dim();
  std::vector<Eigen::MatrixXd> prefix;
  prefix.reserve(t);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < t; ++i) {
    sum += m.hessian(mean, s.points[i], basis);
    // Per-entry division keeps the flat-space case exactly (j/T) * Id.
    prefix.push_back((sum.array() / static_cast<double>(t)).matrix());
  }
  return prefix;
}

std::vector<Eigen::MatrixXd> curvature_adjustments(
    const std::vector<Eigen::MatrixXd>& prefix, double* min_eig) {
  const Eigen::MatrixXd& h_t = prefix.back();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h_t);
  const double lo = es.eigenvalues().minCoeff();
  if (min_eig != nullptr) *min_eig = lo;
  if (lo < 1e-8) {
    throw NumericError(fmt::format(
        "averaged Hessian is numerically singular (min eigenvalue {:.3g} < "
        "1e-8); the test statistic is not identifiable on this sample",
        lo));
  }
  const Eigen::MatrixXd inv = es.eigenvectors() *
                              es.eigenvalues().cwiseInverse().asDiagonal() *
                              es.eigenvectors().transpose();
  std::vector<Eigen::MatrixXd> adjust;
  adjust.reserve(prefix.size());
  for (const Eigen::MatrixXd& h_k : prefix) adjust.push_back(h_k * inv);
  return adjust;
}

Eigen::MatrixXd sliding_block_sums(const Eigen::MatrixXd& coords,
                                   int block_n) {
  const int t = static_cast<int>(coords.rows());
  const int m = t - block_n + 1;
  if (m < 1) throw InputError("block size exceeds series length");
  Eigen::MatrixXd sums(m, coords.cols());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(coords.cols());
  for (int i = 0; i < block_n; ++i) acc += coords.row(i).transpose();
  sums.row(0) = acc;
  for (int j = 1; j < m; ++j) {
    acc += coords.row(j + block_n - 1).transpose();
    acc -= coords.row(j - 1).transpose();
    sums.row(j) = acc;
  }
  return sums;
}

std::vector<double> bootstrap_draws(const Eigen::MatrixXd& block_sums, int t,
                                    int block_n, int b_draws,
                                    const std::vector<Eigen::MatrixXd>& adjust,
                                    std::uint64_t seed, std::string_view tag) {
  const int m = static_cast<int>(block_sums.rows());
  const int d = static_cast<int>(block_sums.cols());
  const double scale =
      1.0 / std::sqrt(static_cast<double>(block_n) * static_cast<double>(m));
  std::vector<double> out(static_cast<std::size_t>(b_draws));

#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < b_draws; ++b) {
    RngStream rs(seed, tag, static_cast<std::uint64_t>(b));
    Eigen::VectorXd r(m);
    for (int j = 0; j < m; ++j) r(j) = rs.normal();
    const Eigen::VectorXd w = block_sums.transpose() * r;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd diff(d);
    double best = 0.0;
    for (int k = 1; k <= m; ++k) {
      acc += block_sums.row(k - 1).transpose() * r(k - 1);
      if (k < block_n) continue;
      if (adjust.empty()) {
        const double frac = static_cast<double>(k) / static_cast<double>(t);
        diff = acc - frac * w;
      } else {
        diff = acc - adjust[k - 1] * w;
      }
      best = std::max(best, diff.norm());
    }
    out[b] = scale * best;
  }
  return out;
}

int select_block_size(const Eigen::MatrixXd& coords,
                      const std::vector<Eigen::MatrixXd>& adjust,
                      std::uint64_t seed) {
  const int t = static_cast<int>(coords.rows());
  // Cap candidates near 2*T^(1/3): the stability criterion needs the
  // bootstrap max window [n, T-n+1] to keep covering the bridge, and for
  // larger n the 95% quantile drifts smoothly with n, which the volatility
  // minimum would otherwise chase into badly truncated block sizes.
  const int hi = std::min(
      std::max(4, static_cast<int>(1.5 * std::cbrt(t))), t / 4);
  const int count = hi - 1;  // candidates 2..hi
  if (count < 3) {
    throw InputError(fmt::format(
        "series too short for block-size selection ({} candidates, need 3); "
        "supply an explicit block size",
        std::max(count, 0)));
  }
  constexpr int kPilotDraws = 200;
  std::vector<double> q(count);
  // Common random numbers: draw b of every candidate uses the same stream,
  // so q(n) varies in n only through the statistic.
  for (int i = 0; i < count; ++i) {
    const int n = i + 2;
    const Eigen::MatrixXd sums = sliding_block_sums(coords, n);
    q[i] = quantile(bootstrap_draws(sums, t, n, kPilotDraws, adjust, seed,
                                    "block-pilot"),
                    0.95);
  }
  int best = 0;
  double best_vi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < count; ++i) {
    const int lo = std::max(0, i - 1);
    const int hi_w = std::min(count, i + 2);
    const double vi = population_sd(q.data() + lo, hi_w - lo);
    if (vi < best_vi) {
      best_vi = vi;
      best = i;
    }
  }
  return best + 2;
}

FirstOrderReport first_order_test(const ManifoldSeries& s,
                                  const FirstOrderConfig& cfg) {
  if (s.points.empty()) throw InputError("first-order test: empty series");
  if (cfg.block_n < 0) {
    throw InputError("block size must be positive (or 0 for automatic selection)");
  }
  if (cfg.bootstrap_b < 1) throw InputError("bootstrap sample size must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    throw InputError("alpha must lie in (0, 1)");
  }
  const int t = s.size();

  FirstOrderReport rep;
  rep.seed = cfg.seed;

  Eigen::MatrixXd coords;
  std::vector<Eigen::MatrixXd> adjust;
  if (cfg.method == FoMethod::B2Euclidean) {
    coords = ambient_demeaned(s, &rep.mean);
  } else {
    const FrechetResult fr = frechet_mean(s);
    if (!fr.converged) {
      throw NumericError(fmt::format(
          "intrinsic mean did not converge in {} iterations (gradient norm "
          "{:.3g})",
          fr.iterations, fr.grad_norm));
    }
    rep.mean = fr.mean;
    rep.mean_iterations = fr.iterations;
    rep.mean_grad_norm = fr.grad_norm;
    const std::vector<Amb> basis = s.manifold->tangent_basis(fr.mean);
    coords = log_coordinates(s, fr.mean, basis);
    if (cfg.method == FoMethod::Camb) {
      adjust = curvature_adjustments(hessian_prefix(s, fr.mean, basis),
                                     &rep.hessian_min_eig);
    }
  }

  rep.q_stat = cusum_statistic(coords);
  rep.block_n = cfg.block_n > 0 ? cfg.block_n
                                : select_block_size(coords, adjust, cfg.seed);
  check_block(rep.block_n, t);

  const Eigen::MatrixXd sums = sliding_block_sums(coords, rep.block_n);
  rep.bootstrap_draws = bootstrap_draws(sums, t, rep.block_n, cfg.bootstrap_b,
                                        adjust, cfg.seed, "boot");
  int exceed = 0;
  for (double q : rep.bootstrap_draws) {
    if (q >= rep.q_stat) ++exceed;
  }
  rep.p_value =
      static_cast<double>(exceed) / static_cast<double>(cfg.bootstrap_b);
  rep.reject = rep.p_value <= cfg.alpha;
  return rep;
}

}  // namespace mstat
