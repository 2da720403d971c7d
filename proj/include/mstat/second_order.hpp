#pragma once

#include <complex>
#include <string>
#include <vector>

#include "mstat/manifold.hpp"

namespace mstat {

enum class DetrendKind { None, BlockFrechet };

struct SecondOrderConfig {
  int block_n = 0;  // required: positive, even
  double alpha = 0.05;
  DetrendKind detrend = DetrendKind::None;
  int bandwidth = 0;  // smoother window; 0 -> floor(T/5)
  // Optional explicit block starts (1-based observation indices).  Empty ->
  // non-overlapping tiling 1, n+1, 2n+1, ...  Non-tiling layouts are allowed
  // and flagged in the report.
  std::vector<int> block_starts;
};

struct SecondOrderReport {
  double v2 = 0.0;      // squared-variation statistic
  double w = 0.0;       // positive correction term
  double sigma2 = 0.0;  // variance estimate
  double z = 0.0;       // sqrt(T) * v2 / sigma
  double p_value = 1.0;
  double term_cross = 0.0;  // adjacent-frequency cross term
  double term_avg = 0.0;    // time-averaged periodogram term
  int block_n = 0;
  int m = 0;      // number of blocks
  int t_eff = 0;  // observations covered by the blocks (m * block_n)
  bool reject = false;
  std::vector<std::string> warnings;
};

// Local discrete Fourier transform of the residual coordinates: d complex
// coefficients J(omega, t) of the window of length n centred at floor(t*T).
struct LocalPeriodogram {
  Eigen::VectorXcd j;
  double omega = 0.0;
  double t = 0.0;
  // Rank-one local spectral matrix I = J J^*.
  Eigen::MatrixXcd spectral_matrix() const { return j * j.adjoint(); }
};

LocalPeriodogram local_periodogram(const Eigen::MatrixXd& coords, double omega,
                                   double t, int block_n,
                                   std::vector<std::string>* warnings = nullptr);

struct V2Breakdown {
  double term_cross = 0.0;
  double w = 0.0;
  double term_avg = 0.0;
  double v2 = 0.0;
  double sigma2 = 0.0;
  int m = 0;
  int t_eff = 0;
};

// Statistic over the given blocks (0-based start indices; pass the result of
// `tiling_starts` for the default layout).  Frequencies omega_k = 2*pi*k/n,
// k = 0..n/2; sums over k = 1..n/2 pair omega_k with omega_{k-1}.
V2Breakdown v2_statistic(const Eigen::MatrixXd& coords, int block_n,
                         const std::vector<int>& starts);

// Default non-overlapping layout covering floor(T/n) blocks.
std::vector<int> tiling_starts(int t, int block_n);

// Block-Frechet detrending: sliding-window intrinsic means, then every
// residual log vector transported to the first window mean along the
// estimated piecewise-geodesic curve.
struct DetrendResult {
  Eigen::MatrixXd coords;
  Amb base;
  std::vector<Amb> basis;
};

DetrendResult detrend(const ManifoldSeries& s, int bandwidth);

SecondOrderReport second_order_test(const ManifoldSeries& s,
                                    const SecondOrderConfig& cfg);

// The z-test applied to precomputed residual coordinates (used internally
// and by calibration tests on synthetic coordinate data).
SecondOrderReport second_order_from_coords(const Eigen::MatrixXd& coords,
                                           const SecondOrderConfig& cfg);

}  // namespace mstat
