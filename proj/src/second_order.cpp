#include "mstat/second_order.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "mstat/frechet.hpp"

namespace mstat {
namespace {

constexpr double kPi = std::numbers::pi;

// Upper-tail standard normal probability.
double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

struct PhaseTable {
  // cos/sin of -h * omega_k for k = 0..n/2 (rows) and h = 0..n-1 (cols).
  Eigen::MatrixXd c;
  Eigen::MatrixXd s;
};

PhaseTable phase_table(int n) {
  const int rows = n / 2 + 1;
  PhaseTable tab{Eigen::MatrixXd(rows, n), Eigen::MatrixXd(rows, n)};
  for (int k = 0; k < rows; ++k) {
    for (int h = 0; h < n; ++h) {
      const double angle = -2.0 * kPi * static_cast<double>((static_cast<long long>(k) * h) % n) /
                           static_cast<double>(n);
      tab.c(k, h) = std::cos(angle);
      tab.s(k, h) = std::sin(angle);
    }
  }
  return tab;
}

}  // namespace

std::vector<int> tiling_starts(int t, int block_n) {
  std::vector<int> starts;
  for (int s = 0; s + block_n <= t; s += block_n) starts.push_back(s);
  return starts;
}

LocalPeriodogram local_periodogram(const Eigen::MatrixXd& coords, double omega,
                                   double t, int block_n,
                                   std::vector<std::string>* warnings) {
  const int total = static_cast<int>(coords.rows());
  const int d = static_cast<int>(coords.cols());
  int start = static_cast<int>(std::floor(t * total)) - block_n / 2;
  if (start == -1) {
    // Boundary case: the window would begin one step before the series.
    start = 0;
    if (warnings != nullptr) {
      warnings->push_back(fmt::format(
          "window at t={:.4g} shifted by one observation to stay in range",
          t));
    }
  }
  if (start < 0 || start + block_n > total) {
    throw InputError(fmt::format(
        "local periodogram window at t={:.4g} covers observations {}..{} "
        "outside 1..{}",
        t, start + 1, start + block_n, total));
  }
  LocalPeriodogram out;
  out.omega = omega;
  out.t = t;
  out.j = Eigen::VectorXcd::Zero(d);
  const double scale = 1.0 / std::sqrt(2.0 * kPi * block_n);
  for (int h = 0; h < block_n; ++h) {
    const std::complex<double> phase(std::cos(h * omega), -std::sin(h * omega));
    out.j += scale * phase * coords.row(start + h).transpose();
  }
  return out;
}

V2Breakdown v2_statistic(const Eigen::MatrixXd& coords, int block_n,
                         const std::vector<int>& starts) {
  const int total = static_cast<int>(coords.rows());
  const int d = static_cast<int>(coords.cols());
  const int n = block_n;
  if (n < 2 || n % 2 != 0) {
    throw InputError(fmt::format("block size {} must be a positive even number", n));
  }
  if (starts.empty()) throw InputError("no blocks supplied");
  for (int s : starts) {
    if (s < 0 || s + n > total) {
      throw InputError(fmt::format(
          "block starting at observation {} covers indices outside 1..{}",
          s + 1, total));
    }
  }
  const int m = static_cast<int>(starts.size());
  const int k_max = n / 2;
  const double t_eff = static_cast<double>(m) * n;

  const PhaseTable tab = phase_table(n);
  const double scale = 1.0 / std::sqrt(2.0 * kPi * n);

  double term_cross = 0.0;
  double w_raw = 0.0;
  Eigen::VectorXd cross_mean = Eigen::VectorXd::Zero(k_max);  // over blocks
  std::vector<Eigen::MatrixXcd> avg_spec(
      k_max + 1, Eigen::MatrixXcd::Zero(d, d));

  for (int s : starts) {
    const auto window = coords.middleRows(s, n);
    const Eigen::MatrixXd re = scale * (tab.c * window);
    const Eigen::MatrixXd im = scale * (tab.s * window);
    // Rows k = 0..n/2 of re + i*im are J(omega_k) for this block.
    Eigen::VectorXd norms(k_max + 1);
    for (int k = 0; k <= k_max; ++k) {
      norms(k) = re.row(k).squaredNorm() + im.row(k).squaredNorm();
      Eigen::VectorXcd jk(d);
      jk.real() = re.row(k).transpose();
      jk.imag() = im.row(k).transpose();
      avg_spec[k] += jk * jk.adjoint();
      if (k >= 1) {
        // <J_k, J_{k-1}> with conjugation on the first argument.
        const double dre = re.row(k).dot(re.row(k - 1)) +
                           im.row(k).dot(im.row(k - 1));
        const double dim = re.row(k).dot(im.row(k - 1)) -
                           im.row(k).dot(re.row(k - 1));
        const double x = dre * dre + dim * dim;
        term_cross += x;
        cross_mean(k - 1) += x;
        w_raw += norms(k) * norms(k - 1);
      }
    }
  }

  V2Breakdown out;
  out.m = m;
  out.t_eff = m * n;
  out.term_cross = 4.0 * kPi / t_eff * term_cross;
  out.w = 4.0 * kPi / (t_eff * m) * w_raw;
  double avg = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    avg += (avg_spec[k] / static_cast<double>(m)).squaredNorm();
  }
  out.term_avg = 4.0 * kPi / n * avg;
  out.v2 = out.term_cross + out.w - out.term_avg;
  cross_mean /= static_cast<double>(m);
  out.sigma2 = 16.0 * kPi * kPi / n * cross_mean.squaredNorm();
  return out;
}

DetrendResult detrend(const ManifoldSeries& s, int bandwidth) {
  if (bandwidth < 2) throw InputError("detrend bandwidth must be >= 2");
  const Manifold& m = *s.manifold;
  const int t = s.size();
  const int w = std::min(bandwidth, t);

  // Sliding-window intrinsic means, warm-started from the previous window.
  std::vector<Amb> curve(t);
  FrechetConfig fc;
  for (int i = 0; i < t; ++i) {
    const int lo = std::clamp(i - w / 2, 0, t - w);
    ManifoldSeries window{s.manifold,
                          {s.points.begin() + lo, s.points.begin() + lo + w}};
    const FrechetResult fr = frechet_mean(window, fc);
    curve[i] = fr.mean;
    fc.init = FrechetConfig::Init::UserSupplied;
    fc.init_point = curve[i];
  }

  DetrendResult out;
  out.base = curve.front();
  out.basis = m.tangent_basis(out.base);
  out.coords.resize(t, m.dim());
  for (int i = 0; i < t; ++i) {
    Amb v = m.log(curve[i], s.points[i]);
    for (int k = i; k > 0; --k) v = m.transport(v, curve[k], curve[k - 1]);
    out.coords.row(i) = tangent_coords(m, out.base, out.basis, v);
  }
  return out;
}

SecondOrderReport second_order_from_coords(const Eigen::MatrixXd& coords,
                                           const SecondOrderConfig& cfg) {
  const int t = static_cast<int>(coords.rows());
  const int n = cfg.block_n;
  if (n < 2 || n % 2 != 0) {
    throw InputError(
        fmt::format("block size {} must be a positive even number", n));
  }
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    throw InputError("alpha must lie in (0, 1)");
  }

  SecondOrderReport rep;
  rep.block_n = n;

  std::vector<int> starts;
  if (cfg.block_starts.empty()) {
    starts = tiling_starts(t, n);
    if (starts.empty()) {
      throw InputError(
          fmt::format("block size {} exceeds series length {}", n, t));
    }
    const int covered = static_cast<int>(starts.size()) * n;
    if (covered < t) {
      rep.warnings.push_back(fmt::format(
          "series length {} is not a multiple of the block size {}; dropping "
          "the last {} observations",
          t, n, t - covered));
    }
  } else {
    starts.reserve(cfg.block_starts.size());
    for (int s1 : cfg.block_starts) {
      if (s1 < 1 || s1 + n - 1 > t) {
        throw InputError(fmt::format(
            "block starting at observation {} covers indices outside 1..{}",
            s1, t));
      }
      starts.push_back(s1 - 1);
    }
    if (starts == tiling_starts(t, n)) {
      const int covered = static_cast<int>(starts.size()) * n;
      if (covered < t) {
        rep.warnings.push_back(fmt::format(
            "series length {} is not a multiple of the block size {}; "
            "dropping the last {} observations",
            t, n, t - covered));
      }
    } else {
      rep.warnings.push_back("non-tiling blocks");
    }
  }

  const V2Breakdown b = v2_statistic(coords, n, starts);
  rep.term_cross = b.term_cross;
  rep.w = b.w;
  rep.term_avg = b.term_avg;
  rep.v2 = b.v2;
  rep.sigma2 = b.sigma2;
  rep.m = b.m;
  rep.t_eff = b.t_eff;

  const double lo_n = std::sqrt(static_cast<double>(b.t_eff));
  const double hi_n = std::pow(static_cast<double>(b.t_eff), 2.0 / 3.0);
  if (n < lo_n || n > hi_n) {
    rep.warnings.push_back(fmt::format(
        "block size {} is outside the recommended range [sqrt(T), T^(2/3)] = "
        "[{:.1f}, {:.1f}]",
        n, lo_n, hi_n));
  }

  if (!(rep.sigma2 > 0.0)) {
    throw NumericError(
        "variance estimate is zero (degenerate data: all local periodogram "
        "cross-products vanish)");
  }
  rep.z = std::sqrt(static_cast<double>(b.t_eff)) * rep.v2 /
          std::sqrt(rep.sigma2);
  rep.p_value = normal_sf(rep.z);
  rep.reject = rep.p_value <= cfg.alpha;
  return rep;
}

SecondOrderReport second_order_test(const ManifoldSeries& s,
                                    const SecondOrderConfig& cfg) {
  if (s.points.empty()) throw InputError("second-order test: empty series");
  Eigen::MatrixXd coords;
  std::vector<std::string> notes;
  if (cfg.detrend == DetrendKind::BlockFrechet) {
    const int bw = cfg.bandwidth > 0 ? cfg.bandwidth : s.size() / 5;
    coords = detrend(s, bw).coords;
    notes.push_back(fmt::format("detrended with bandwidth {}", bw));
  } else {
    const FrechetResult fr = frechet_mean(s);
    if (!fr.converged) {
      throw NumericError(fmt::format(
          "intrinsic mean did not converge in {} iterations (gradient norm "
          "{:.3g})",
          fr.iterations, fr.grad_norm));
    }
    coords = log_coordinates(s, fr.mean,
                             s.manifold->tangent_basis(fr.mean));
  }
  SecondOrderReport rep = second_order_from_coords(coords, cfg);
  rep.warnings.insert(rep.warnings.begin(), notes.begin(), notes.end());
  return rep;
}

}  // namespace mstat
