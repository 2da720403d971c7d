#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "mstat/frechet.hpp"
#include "mstat/models.hpp"
#include "mstat/rng.hpp"
#include "mstat/second_order.hpp"

using namespace mstat;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd random_coords(int t, int d, std::uint64_t seed) {
  RngStream rs(seed, "coords", 0);
  Eigen::MatrixXd c(t, d);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < d; ++j) c(i, j) = rs.normal();
  return c;
}

ManifoldSeries m3_sphere(int t, double tau, std::uint64_t seed) {
  SimSpec spec;
  spec.model = SimModel::M3Sphere;
  spec.tau = tau;
  spec.t = t;
  spec.seed = seed;
  return simulate(spec).series;
}

}  // namespace

TEST_CASE("periodogram at frequency zero is the scaled window sum") {
  const Eigen::MatrixXd c = random_coords(16, 3, 1);
  const LocalPeriodogram lp = local_periodogram(c, 0.0, 0.5, 16);
  CHECK(lp.j.imag().norm() == 0.0);
  const Eigen::VectorXd want =
      c.colwise().sum().transpose() / std::sqrt(2.0 * kPi * 16.0);
  CHECK((lp.j.real() - want).norm() < 1e-12);

  const Eigen::MatrixXcd spec_mat = lp.spectral_matrix();
  CHECK((spec_mat - spec_mat.adjoint()).norm() < 1e-14);
  CHECK(std::abs(spec_mat.trace().real() - lp.j.squaredNorm()) < 1e-10);
}

TEST_CASE("periodogram of zero coordinates vanishes") {
  const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(32, 2);
  const LocalPeriodogram lp = local_periodogram(zeros, 1.3, 0.5, 8);
  CHECK(lp.j.norm() == 0.0);
}

TEST_CASE("discrete fourier energy identity holds on one window") {
  const int n = 16;
  const Eigen::MatrixXd c = random_coords(n, 4, 2);
  double energy = 0.0;
  for (int k = 0; k < n; ++k) {
    const LocalPeriodogram lp =
        local_periodogram(c, 2.0 * kPi * k / n, 0.5, n);
    energy += lp.j.squaredNorm();
  }
  CHECK(std::abs(2.0 * kPi * energy - c.squaredNorm()) < 1e-9);
}

TEST_CASE("window at the left boundary shifts by one and warns") {
  const Eigen::MatrixXd c = random_coords(64, 2, 3);
  std::vector<std::string> warnings;
  const LocalPeriodogram shifted =
      local_periodogram(c, 0.7, 3.0 / 64.0, 8, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("shifted") != std::string::npos);
  const LocalPeriodogram direct = local_periodogram(c, 0.7, 4.0 / 64.0, 8);
  CHECK((shifted.j - direct.j).norm() == 0.0);

  CHECK_THROWS_AS((void)local_periodogram(c, 0.7, 1.0 / 64.0, 8), InputError);
  CHECK_THROWS_AS((void)local_periodogram(c, 0.7, 0.97, 8), InputError);
}

TEST_CASE("statistic terms match a direct periodogram computation") {
  const int t = 32, n = 8, d = 3;
  const Eigen::MatrixXd c = random_coords(t, d, 4);
  const std::vector<int> starts = tiling_starts(t, n);
  REQUIRE(starts == std::vector<int>({0, 8, 16, 24}));
  const V2Breakdown b = v2_statistic(c, n, starts);

  const int m = static_cast<int>(starts.size());
  const double t_eff = static_cast<double>(m) * n;
  double cross = 0.0, w_raw = 0.0;
  std::vector<double> cross_mean(n / 2, 0.0);
  for (int j = 1; j <= m; ++j) {
    const double tj = n * (j - 0.5) / t;
    std::vector<LocalPeriodogram> lps;
    for (int k = 0; k <= n / 2; ++k)
      lps.push_back(local_periodogram(c, 2.0 * kPi * k / n, tj, n));
    for (int k = 1; k <= n / 2; ++k) {
      const std::complex<double> ip = lps[k].j.adjoint() * lps[k - 1].j;
      const double x = std::norm(ip);
      cross += x;
      cross_mean[k - 1] += x;
      w_raw += lps[k].j.squaredNorm() * lps[k - 1].j.squaredNorm();
    }
  }
  CHECK(b.term_cross == doctest::Approx(4.0 * kPi / t_eff * cross).epsilon(1e-12));
  CHECK(b.w == doctest::Approx(4.0 * kPi / (t_eff * m) * w_raw).epsilon(1e-12));
  double s2 = 0.0;
  for (double x : cross_mean) s2 += (x / m) * (x / m);
  CHECK(b.sigma2 ==
        doctest::Approx(16.0 * kPi * kPi / n * s2).epsilon(1e-12));
  CHECK(b.v2 == doctest::Approx(b.term_cross + b.w - b.term_avg).epsilon(1e-14));
  CHECK(b.m == 4);
  CHECK(b.t_eff == 32);
}

TEST_CASE("statistic vanishes on zero coordinates") {
  const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(64, 2);
  const V2Breakdown b = v2_statistic(zeros, 8, tiling_starts(64, 8));
  CHECK(b.v2 == 0.0);
  CHECK(b.w == 0.0);
  CHECK(b.term_cross == 0.0);
  CHECK(b.sigma2 == 0.0);
}

TEST_CASE("statistic is invariant under orthogonal coordinate changes") {
  const Eigen::MatrixXd c = random_coords(256, 3, 5);
  RngStream rs(6, "rot", 0);
  Eigen::MatrixXd g(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g(i, j) = rs.normal();
  const Eigen::MatrixXd q =
      Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();

  const auto starts = tiling_starts(256, 8);
  const V2Breakdown a = v2_statistic(c, 8, starts);
  const V2Breakdown b = v2_statistic(c * q, 8, starts);
  CHECK(std::abs(a.v2 - b.v2) < 1e-10);
  CHECK(std::abs(a.w - b.w) < 1e-10);
  CHECK(std::abs(a.sigma2 - b.sigma2) < 1e-10);
  CHECK(a.w >= 0.0);
  CHECK(a.term_cross >= 0.0);
}

TEST_CASE("correction term is invariant under time reversal") {
  const Eigen::MatrixXd c = random_coords(128, 2, 7);
  const Eigen::MatrixXd rev = c.colwise().reverse();
  const auto starts = tiling_starts(128, 8);
  const V2Breakdown a = v2_statistic(c, 8, starts);
  const V2Breakdown b = v2_statistic(rev, 8, starts);
  CHECK(std::abs(a.w - b.w) < 1e-9);
}

TEST_CASE("scaling coordinates by c scales the variance estimate by c^8") {
  const Eigen::MatrixXd c = random_coords(96, 2, 8);
  const double f = 1.7;
  const auto starts = tiling_starts(96, 8);
  const V2Breakdown a = v2_statistic(c, 8, starts);
  const V2Breakdown b = v2_statistic(f * c, 8, starts);
  const double c4 = f * f * f * f;
  CHECK(b.v2 == doctest::Approx(c4 * a.v2).epsilon(1e-12));
  CHECK(b.w == doctest::Approx(c4 * a.w).epsilon(1e-12));
  CHECK(b.sigma2 == doctest::Approx(c4 * c4 * a.sigma2).epsilon(1e-12));
}

TEST_CASE("statistic is mean-zero for independent gaussian noise") {
  const int reps = 200;
  std::vector<double> v2(reps);
  for (int r = 0; r < reps; ++r) {
    const Eigen::MatrixXd c = random_coords(1024, 1, 9000 + r);
    v2[r] = v2_statistic(c, 8, tiling_starts(1024, 8)).v2;
  }
  double mean = 0.0;
  for (double x : v2) mean += x;
  mean /= reps;
  double var = 0.0;
  for (double x : v2) var += (x - mean) * (x - mean);
  const double se = std::sqrt(var / (reps - 1) / reps);
  CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("variance estimate matches the white-noise spectral value") {
  const int reps = 100;
  std::vector<double> s2(reps);
  for (int r = 0; r < reps; ++r) {
    const Eigen::MatrixXd c = random_coords(4096, 1, 20000 + r);
    s2[r] = v2_statistic(c, 16, tiling_starts(4096, 16)).sigma2;
  }
  std::nth_element(s2.begin(), s2.begin() + reps / 2, s2.end());
  const double median = s2[reps / 2];
  const double want = 1.0 / (2.0 * kPi * kPi);
  CHECK(median > 0.75 * want);
  CHECK(median < 1.25 * want);
}

TEST_CASE("z statistic centers better as the series grows") {
  auto mean_z = [](int t, int reps, std::uint64_t seed0) {
    double sum = 0.0;
    for (int r = 0; r < reps; ++r) {
      SecondOrderConfig cfg;
      cfg.block_n = t / 8;
      sum += second_order_test(m3_sphere(t, 0.0, seed0 + r), cfg).z;
    }
    return sum / reps;
  };
  const double at256 = mean_z(256, 500, 31000);
  const double at1024 = mean_z(1024, 500, 32000);
  CHECK(std::abs(at1024) < std::abs(at256) + 0.1);
}

TEST_CASE("default blocks tile and drop a short tail with a warning") {
  CHECK(tiling_starts(37, 8) == std::vector<int>({0, 8, 16, 24}));
  CHECK(tiling_starts(32, 8) == std::vector<int>({0, 8, 16, 24}));
  CHECK(tiling_starts(7, 8).empty());

  const Eigen::MatrixXd c = random_coords(37, 2, 10);
  SecondOrderConfig cfg;
  cfg.block_n = 8;
  const SecondOrderReport rep = second_order_from_coords(c, cfg);
  CHECK(rep.m == 4);
  CHECK(rep.t_eff == 32);
  REQUIRE(rep.warnings.size() == 1);
  CHECK(rep.warnings[0].find("dropping the last 5") != std::string::npos);
}

TEST_CASE("explicit tiling blocks are not flagged but overlaps are") {
  const Eigen::MatrixXd c = random_coords(37, 2, 11);
  SecondOrderConfig cfg;
  cfg.block_n = 8;
  cfg.block_starts = {1, 9, 17, 25};
  const SecondOrderReport tiled = second_order_from_coords(c, cfg);
  for (const std::string& w : tiled.warnings)
    CHECK(w.find("non-tiling") == std::string::npos);

  cfg.block_starts = {1, 8, 15, 22, 30};
  const SecondOrderReport overlapped = second_order_from_coords(c, cfg);
  REQUIRE(overlapped.warnings.size() == 1);
  CHECK(overlapped.warnings[0] == "non-tiling blocks");
  CHECK(overlapped.m == 5);
  CHECK(overlapped.t_eff == 40);

  cfg.block_starts = {1, 31};  // 31 + 8 - 1 = 38 > 37
  CHECK_THROWS_AS((void)second_order_from_coords(c, cfg), InputError);
}

TEST_CASE("configuration errors are rejected") {
  const Eigen::MatrixXd c = random_coords(32, 2, 12);
  SecondOrderConfig cfg;
  cfg.block_n = 7;
  CHECK_THROWS_AS((void)second_order_from_coords(c, cfg), InputError);
  cfg.block_n = 0;
  CHECK_THROWS_AS((void)second_order_from_coords(c, cfg), InputError);
  cfg.block_n = 40;
  CHECK_THROWS_AS((void)second_order_from_coords(c, cfg), InputError);
  cfg.block_n = 8;
  cfg.alpha = 0.0;
  CHECK_THROWS_AS((void)second_order_from_coords(c, cfg), InputError);
}

TEST_CASE("an out-of-range block size adds a warning") {
  const Eigen::MatrixXd c = random_coords(256, 1, 13);
  SecondOrderConfig cfg;
  cfg.block_n = 4;  // sqrt(256) = 16, so 4 is below the recommended range
  const SecondOrderReport rep = second_order_from_coords(c, cfg);
  REQUIRE(rep.warnings.size() == 1);
  CHECK(rep.warnings[0].find("recommended range") != std::string::npos);
}

TEST_CASE("a constant series is degenerate for the variance estimate") {
  auto s6 = make_sphere(6);
  Amb pole = Amb::Zero(7, 1);
  pole(6, 0) = 1.0;
  ManifoldSeries s;
  s.manifold = s6;
  s.points.assign(64, pole);
  SecondOrderConfig cfg;
  cfg.block_n = 8;
  CHECK_THROWS_AS((void)second_order_test(s, cfg), NumericError);

  ManifoldSeries empty;
  empty.manifold = s6;
  CHECK_THROWS_AS((void)second_order_test(empty, cfg), InputError);
}

TEST_CASE("full test is deterministic and detrending leaves a note") {
  const ManifoldSeries s = m3_sphere(256, 0.0, 14);
  SecondOrderConfig cfg;
  cfg.block_n = 32;
  const SecondOrderReport a = second_order_test(s, cfg);
  const SecondOrderReport b = second_order_test(s, cfg);
  CHECK(a.v2 == b.v2);
  CHECK(a.z == b.z);
  CHECK(a.p_value == b.p_value);
  CHECK(a.p_value >= 0.0);
  CHECK(a.p_value <= 1.0);

  cfg.detrend = DetrendKind::BlockFrechet;
  const SecondOrderReport d = second_order_test(s, cfg);
  REQUIRE_FALSE(d.warnings.empty());
  CHECK(d.warnings[0].find("detrended with bandwidth 51") != std::string::npos);
}

TEST_CASE("detrending a constant-mean series changes little") {
  // Independent noise around a fixed point: the sliding-window means stay
  // near the global mean, so detrended and plain residuals almost agree.
  const int t = 512;
  ManifoldSeries s;
  s.manifold = make_sphere(6);
  RngStream rs(15, "flatnoise", 0);
  Amb base(7, 1);
  for (int i = 0; i < 7; ++i) base(i, 0) = rs.normal();
  base /= base.norm();
  const std::vector<Amb> frame = s.manifold->tangent_basis(base);
  for (int i = 0; i < t; ++i) {
    Eigen::VectorXd c(6);
    for (int j = 0; j < 6; ++j) c(j) = 0.1 * rs.normal();
    s.points.push_back(s.manifold->exp(base, from_coords(*s.manifold, base,
                                                         frame, c)));
  }
  const DetrendResult dr = detrend(s, t / 5);

  const FrechetResult fr = frechet_mean(s);
  const Eigen::MatrixXd plain =
      log_coordinates(s, fr.mean, s.manifold->tangent_basis(fr.mean));
  const double rms = std::sqrt((dr.coords - plain).squaredNorm() /
                               static_cast<double>(plain.size()));
  CHECK(rms < 0.1);
}

TEST_CASE("detrending removes a linear trend in flat space") {
  const int t = 400;
  ManifoldSeries s;
  s.manifold = make_euclidean(1);
  RngStream rs(16, "trend", 0);
  for (int i = 0; i < t; ++i) {
    Amb p(1, 1);
    p(0, 0) = static_cast<double>(i) / t + 0.5 * rs.normal();
    s.points.push_back(p);
  }
  const DetrendResult dr = detrend(s, t / 5);
  CHECK(std::abs(dr.coords.mean()) < 2.0 / std::sqrt(static_cast<double>(t)));
}

TEST_CASE("detrending a noise-free geodesic leaves almost nothing") {
  const int t = 1024;
  auto s6 = make_sphere(6);
  ManifoldSeries s;
  s.manifold = s6;
  for (int i = 0; i < t; ++i) {
    const double u = kPi / 2.0 * (i + 1.0) / t;
    Amb p = Amb::Zero(7, 1);
    p(6, 0) = std::cos(u);
    p(0, 0) = std::sin(u);
    s.points.push_back(p);
  }
  const DetrendResult dr = detrend(s, 16);
  const double rms =
      std::sqrt(dr.coords.squaredNorm() / static_cast<double>(dr.coords.size()));
  CHECK(rms < 1e-3);

  CHECK_THROWS_AS((void)detrend(s, 1), InputError);
}
