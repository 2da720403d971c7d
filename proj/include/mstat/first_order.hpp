#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "mstat/manifold.hpp"

namespace mstat {

enum class FoMethod { Camb, B1NoCurvature, B2Euclidean };

struct FirstOrderConfig {
  FoMethod method = FoMethod::Camb;
  int bootstrap_b = 2000;
  // 0 -> minimum-volatility selection over {2, ..., min(3*sqrt(T), T/4)}.
  int block_n = 0;
  double alpha = 0.05;
  std::uint64_t seed = 0;
};

struct FirstOrderReport {
  double q_stat = 0.0;
  double p_value = 1.0;
  int block_n = 0;
  bool reject = false;
  // Minimum eigenvalue of the averaged Hessian (1 for the flat baselines).
  double hessian_min_eig = 1.0;
  std::uint64_t seed = 0;
  std::vector<double> bootstrap_draws;
  Amb mean;  // intrinsic mean (ambient average for the Euclidean baseline)
  int mean_iterations = 0;
  double mean_grad_norm = 0.0;
};

// Full test: residual coordinates -> CUSUM statistic -> multiplier bootstrap
// with the method's curvature adjustment -> p-value = #{Q_b >= Q_T} / B.
FirstOrderReport first_order_test(const ManifoldSeries& s,
                                  const FirstOrderConfig& cfg);

// --- building blocks (exposed for tests and the experiment harness) ---

// max_j ||sum_{i<=j} v_i|| / sqrt(T) for T x d residual coordinates.
double cusum_statistic(const Eigen::MatrixXd& coords);

// Prefix averages H_j = (1/T) sum_{i<=j} H(mean, X_i), j = 1..T, in `basis`.
std::vector<Eigen::MatrixXd> hessian_prefix(const ManifoldSeries& s,
                                            const Amb& mean,
                                            const std::vector<Amb>& basis);

// A_k = H_k * H_T^{-1} for k = 1..T via symmetric eigendecomposition of H_T;
// errors if the minimum eigenvalue of H_T is below 1e-8.
std::vector<Eigen::MatrixXd> curvature_adjustments(
    const std::vector<Eigen::MatrixXd>& prefix, double* min_eig = nullptr);

// Sliding block sums S_j = sum_{i=j}^{j+n-1} v_i, j = 1..T-n+1.
Eigen::MatrixXd sliding_block_sums(const Eigen::MatrixXd& coords, int block_n);

// B bootstrap maxima: per draw, i.i.d. N(0,1) multipliers R_j, partial sums
// V_k = sum_{j<=k} S_j R_j / sqrt(n(T-n+1)), and
// Q_b = max_{k=n..T-n+1} ||V_k - A_k V_{T-n+1}||.  `adjust` supplies A_k
// (index k-1); empty means A_k = (k/T) Id.  Draw b uses the RNG stream
// (seed, tag, b), so results are independent of evaluation order.
std::vector<double> bootstrap_draws(const Eigen::MatrixXd& block_sums, int t,
                                    int block_n, int b_draws,
                                    const std::vector<Eigen::MatrixXd>& adjust,
                                    std::uint64_t seed, std::string_view tag);

// Minimum-volatility block size: pilot bootstrap (B = 200, common random
// numbers across candidates), 95% quantile q(n), volatility = sd of
// {q(n-1), q(n), q(n+1)}; returns the minimizer (smallest n on ties).
int select_block_size(const Eigen::MatrixXd& coords,
                      const std::vector<Eigen::MatrixXd>& adjust,
                      std::uint64_t seed);

}  // namespace mstat
