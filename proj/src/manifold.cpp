#include "mstat/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

namespace mstat {
namespace {

constexpr double kPi = std::numbers::pi;
// Inner products this close to -1 are treated as antipodal (cut locus).
constexpr double kCutLocusTol = 1e-12;
// Conditioning guard for SPD eigenvalue ratios.
constexpr double kSpdConditionLimit = 1e12;

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

void check_shape(const Manifold& m, const Amb& a, const char* what) {
  if (a.rows() != m.ambient_rows() || a.cols() != m.ambient_cols()) {
    throw InputError(fmt::format(
        "{}: expected {}x{} {} on {}, got {}x{}", what, m.ambient_rows(),
        m.ambient_cols(), what, m.name(), a.rows(), a.cols()));
  }
}

// ---------------------------------------------------------------------------
// Sphere S^d embedded in R^{d+1}.

class Sphere final : public Manifold {
 public:
  explicit Sphere(int d) : d_(d) {
    if (d < 1) throw InputError("sphere: intrinsic dimension must be >= 1");
  }

  ManifoldKind kind() const override { return ManifoldKind::Sphere; }
  int dim() const override { return d_; }
  int ambient_rows() const override { return d_ + 1; }
  int ambient_cols() const override { return 1; }
  std::string name() const override { return fmt::format("S^{}", d_); }

  void validate(const Amb& p) const override {
    check_shape(*this, p, "point");
    if (std::abs(p.norm() - 1.0) > 1e-9) {
      throw InputError(
          fmt::format("sphere point has norm {:.12g}, expected 1", p.norm()));
    }
  }

  double distance(const Amb& p, const Amb& q) const override {
    return std::acos(clamp_unit(p.col(0).dot(q.col(0))));
  }

  Amb exp(const Amb& p, const Amb& v) const override {
    const double t = v.norm();
    if (t >= kPi) {
      throw NumericError(fmt::format(
          "sphere exp: tangent norm {:.6g} >= pi leaves the injectivity "
          "domain",
          t));
    }
    if (t < 1e-15) return p;
    return std::cos(t) * p + (std::sin(t) / t) * v;
  }

  Amb log(const Amb& p, const Amb& q) const override {
    const double c = clamp_unit(p.col(0).dot(q.col(0)));
    if (c <= -1.0 + kCutLocusTol) {
      throw NumericError(
          "sphere log: antipodal points (cut locus); no unique minimizing "
          "geodesic");
    }
    const double theta = std::acos(c);
    Amb w = q - c * p;
    const double wn = w.norm();
    if (wn < 1e-15) return zero_tangent();
    return (theta / wn) * w;
  }

  Amb transport(const Amb& v, const Amb& from, const Amb& to) const override {
    const Amb u = log(from, to);
    const double theta = u.norm();
    if (theta < 1e-15) return v;
    const Amb e = u / theta;
    const double a = v.col(0).dot(e.col(0));
    return v + a * ((std::cos(theta) - 1.0) * e - std::sin(theta) * from);
  }

  double inner(const Amb& p, const Amb& u, const Amb& v) const override {
    (void)p;
    return u.col(0).dot(v.col(0));
  }

  std::vector<Amb> tangent_basis(const Amb& p) const override {
    const int n = d_ + 1;
    Amb pole = Amb::Zero(n, 1);
    pole(n - 1, 0) = 1.0;
    Amb w = p - pole;
    const double w2 = w.squaredNorm();
    std::vector<Amb> basis;
    basis.reserve(d_);
    for (int j = 0; j < d_; ++j) {
      Amb ej = Amb::Zero(n, 1);
      ej(j, 0) = 1.0;
      if (w2 > 1e-30) ej -= (2.0 * w(j, 0) / w2) * w;  // Householder column
      basis.push_back(std::move(ej));
    }
    return basis;
  }

  Eigen::MatrixXd hessian(const Amb& p, const Amb& x,
                          const std::vector<Amb>& basis) const override {
    const Amb u = log(p, x);  // errors at the cut locus
    const double theta = u.norm();
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(d_, d_);
    if (theta < 1e-7) return h;
    // Eigenvalue 1 along the geodesic direction, theta*cot(theta) orthogonal
    // to it.
    const double fac = theta * std::cos(theta) / std::sin(theta);
    Eigen::VectorXd uc = tangent_coords(*this, p, basis, u / theta);
    h = fac * Eigen::MatrixXd::Identity(d_, d_) +
        (1.0 - fac) * (uc * uc.transpose());
    return h;
  }

 private:
  int d_;
};

// ---------------------------------------------------------------------------
// SPD(n) with the affine-invariant metric.

struct SpdEig {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;
};

SpdEig spd_eig(const Eigen::MatrixXd& p, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p);
  if (es.info() != Eigen::Success) {
    throw NumericError(fmt::format("{}: eigendecomposition failed", what));
  }
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0) {
    throw NumericError(fmt::format(
        "{}: matrix not positive definite (min eigenvalue {:.6g})", what, lo));
  }
  if (hi / lo > kSpdConditionLimit) {
    throw NumericError(fmt::format(
        "{}: eigenvalue ratio {:.3g} exceeds conditioning limit {:g}", what,
        hi / lo, kSpdConditionLimit));
  }
  return {es.eigenvectors(), es.eigenvalues()};
}

Eigen::MatrixXd apply_scalar(const SpdEig& e, double (*f)(double)) {
  Eigen::VectorXd fv = e.values.unaryExpr([&](double x) { return f(x); });
  Eigen::MatrixXd r = e.vectors * fv.asDiagonal() * e.vectors.transpose();
  return 0.5 * (r + r.transpose());
}

Eigen::MatrixXd sym_expm(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  Eigen::VectorXd fv =
      es.eigenvalues().unaryExpr([](double x) { return std::exp(x); });
  Eigen::MatrixXd r =
      es.eigenvectors() * fv.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (r + r.transpose());
}

class Spd final : public Manifold {
 public:
  explicit Spd(int n) : n_(n), d_(n * (n + 1) / 2) {
    if (n < 2) throw InputError("spd: matrix size must be >= 2");
  }

  ManifoldKind kind() const override { return ManifoldKind::Spd; }
  int dim() const override { return d_; }
  int ambient_rows() const override { return n_; }
  int ambient_cols() const override { return n_; }
  std::string name() const override { return fmt::format("SPD({})", n_); }

  void validate(const Amb& p) const override {
    check_shape(*this, p, "point");
    if ((p - p.transpose()).norm() > 1e-9 * std::max(1.0, p.norm())) {
      throw InputError("spd point is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw InputError(fmt::format(
          "spd point is not positive definite (min eigenvalue {:.6g})",
          es.eigenvalues().minCoeff()));
    }
  }

  double distance(const Amb& p, const Amb& q) const override {
    return whitened_log(p, q).norm();
  }

  Amb exp(const Amb& p, const Amb& v) const override {
    const SpdEig e = spd_eig(p, "spd exp");
    const Eigen::MatrixXd s = apply_scalar(e, [](double x) { return std::sqrt(x); });
    const Eigen::MatrixXd si =
        apply_scalar(e, [](double x) { return 1.0 / std::sqrt(x); });
    Eigen::MatrixXd a = si * v * si;
    a = 0.5 * (a + a.transpose());
    Eigen::MatrixXd r = s * sym_expm(a) * s;
    return 0.5 * (r + r.transpose());
  }

  Amb log(const Amb& p, const Amb& q) const override {
    const SpdEig e = spd_eig(p, "spd log");
    const Eigen::MatrixXd s = apply_scalar(e, [](double x) { return std::sqrt(x); });
    Eigen::MatrixXd r = s * whitened_log(p, q) * s;
    return 0.5 * (r + r.transpose());
  }

  Amb transport(const Amb& v, const Amb& from, const Amb& to) const override {
    if ((from - to).squaredNorm() == 0.0) return v;
    // E = (to * from^{-1})^{1/2}, computed symmetrically.
    const SpdEig e = spd_eig(from, "spd transport");
    const Eigen::MatrixXd s = apply_scalar(e, [](double x) { return std::sqrt(x); });
    const Eigen::MatrixXd si =
        apply_scalar(e, [](double x) { return 1.0 / std::sqrt(x); });
    Eigen::MatrixXd w = si * to * si;
    w = 0.5 * (w + w.transpose());
    const Eigen::MatrixXd wsqrt =
        apply_scalar(spd_eig(w, "spd transport"), [](double x) { return std::sqrt(x); });
    const Eigen::MatrixXd ee = s * wsqrt * si;
    Eigen::MatrixXd r = ee * v * ee.transpose();
    return 0.5 * (r + r.transpose());
  }

  double inner(const Amb& p, const Amb& u, const Amb& v) const override {
    const Eigen::LLT<Eigen::MatrixXd> llt(p);
    if (llt.info() != Eigen::Success) {
      throw NumericError("spd inner: base point not positive definite");
    }
    const Eigen::MatrixXd a = llt.solve(u);
    const Eigen::MatrixXd b = llt.solve(v);
    return a.cwiseProduct(b.transpose()).sum();  // tr(p^{-1} u p^{-1} v)
  }

  std::vector<Amb> tangent_basis(const Amb& p) const override {
    const SpdEig e = spd_eig(p, "spd basis");
    const Eigen::MatrixXd s = apply_scalar(e, [](double x) { return std::sqrt(x); });
    std::vector<Amb> basis;
    basis.reserve(d_);
    const double off = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < n_; ++i) {
      Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n_, n_);
      u(i, i) = 1.0;
      basis.push_back(s * u * s);
    }
    for (int i = 0; i < n_; ++i) {
      for (int j = i + 1; j < n_; ++j) {
        Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n_, n_);
        u(i, j) = off;
        u(j, i) = off;
        basis.push_back(s * u * s);
      }
    }
    return basis;
  }

  Eigen::MatrixXd hessian(const Amb& p, const Amb& x,
                          const std::vector<Amb>& basis) const override {
    return finite_difference_hessian(*this, p, x, basis);
  }

 private:
  Eigen::MatrixXd whitened_log(const Amb& p, const Amb& q) const {
    const SpdEig e = spd_eig(p, "spd log");
    const Eigen::MatrixXd si =
        apply_scalar(e, [](double x) { return 1.0 / std::sqrt(x); });
    Eigen::MatrixXd w = si * q * si;
    w = 0.5 * (w + w.transpose());
    return apply_scalar(spd_eig(w, "spd log"), [](double x) { return std::log(x); });
  }

  int n_;
  int d_;
};

// ---------------------------------------------------------------------------
// Euclidean R^d.

class Euclidean final : public Manifold {
 public:
  explicit Euclidean(int d) : d_(d) {
    if (d < 1) throw InputError("euclidean: dimension must be >= 1");
  }

  ManifoldKind kind() const override { return ManifoldKind::Euclidean; }
  int dim() const override { return d_; }
  int ambient_rows() const override { return d_; }
  int ambient_cols() const override { return 1; }
  std::string name() const override { return fmt::format("R^{}", d_); }

  void validate(const Amb& p) const override { check_shape(*this, p, "point"); }

  double distance(const Amb& p, const Amb& q) const override {
    return (p - q).norm();
  }
  Amb exp(const Amb& p, const Amb& v) const override { return p + v; }
  Amb log(const Amb& p, const Amb& q) const override { return q - p; }
  Amb transport(const Amb& v, const Amb& from, const Amb& to) const override {
    (void)from;
    (void)to;
    return v;
  }
  double inner(const Amb& p, const Amb& u, const Amb& v) const override {
    (void)p;
    return u.col(0).dot(v.col(0));
  }
  std::vector<Amb> tangent_basis(const Amb& p) const override {
    (void)p;
    std::vector<Amb> basis;
    basis.reserve(d_);
    for (int j = 0; j < d_; ++j) {
      Amb ej = Amb::Zero(d_, 1);
      ej(j, 0) = 1.0;
      basis.push_back(std::move(ej));
    }
    return basis;
  }
  Eigen::MatrixXd hessian(const Amb& p, const Amb& x,
                          const std::vector<Amb>& basis) const override {
    (void)p;
    (void)x;
    (void)basis;
    return Eigen::MatrixXd::Identity(d_, d_);
  }

 private:
  int d_;
};

}  // namespace

std::shared_ptr<const Manifold> make_sphere(int intrinsic_dim) {
  return std::make_shared<Sphere>(intrinsic_dim);
}
std::shared_ptr<const Manifold> make_spd(int matrix_size) {
  return std::make_shared<Spd>(matrix_size);
}
std::shared_ptr<const Manifold> make_euclidean(int dim) {
  return std::make_shared<Euclidean>(dim);
}

std::shared_ptr<const Manifold> make_manifold(ManifoldKind kind,
                                              int ambient_dim) {
  switch (kind) {
    case ManifoldKind::Sphere:
      return make_sphere(ambient_dim - 1);
    case ManifoldKind::Spd:
      return make_spd(ambient_dim);
    case ManifoldKind::Euclidean:
      return make_euclidean(ambient_dim);
  }
  throw InputError("unknown manifold kind");
}

Eigen::VectorXd tangent_coords(const Manifold& m, const Amb& p,
                               const std::vector<Amb>& basis, const Amb& v) {
  Eigen::VectorXd c(static_cast<int>(basis.size()));
  for (int j = 0; j < c.size(); ++j) c(j) = m.inner(p, v, basis[j]);
  return c;
}

Amb from_coords(const Manifold& m, const Amb& p, const std::vector<Amb>& basis,
                const Eigen::VectorXd& coords) {
  (void)p;
  Amb v = m.zero_tangent();
  for (int j = 0; j < coords.size(); ++j) v += coords(j) * basis[j];
  return v;
}

Eigen::MatrixXd log_coordinates(const ManifoldSeries& s, const Amb& mean,
                                const std::vector<Amb>& basis) {
  const Manifold& m = *s.manifold;
  Eigen::MatrixXd coords(s.size(), m.dim());
  for (int i = 0; i < s.size(); ++i) {
    coords.row(i) = tangent_coords(m, mean, basis, m.log(mean, s.points[i]));
  }
  return coords;
}

Eigen::MatrixXd finite_difference_hessian(const Manifold& m, const Amb& p,
                                          const Amb& x,
                                          const std::vector<Amb>& basis) {
  const int d = m.dim();
  const double h = 1e-4 * std::max(1.0, m.distance(p, x));
  Eigen::MatrixXd hess(d, d);
  for (int j = 0; j < d; ++j) {
    const Amb pp = m.exp(p, h * basis[j]);
    const Amb pm = m.exp(p, -h * basis[j]);
    const Amb gp = m.transport(-m.log(pp, x), pp, p);
    const Amb gm = m.transport(-m.log(pm, x), pm, p);
    hess.col(j) =
        (tangent_coords(m, p, basis, gp) - tangent_coords(m, p, basis, gm)) /
        (2.0 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

std::vector<std::vector<Amb>> parallel_frame(const Manifold& m,
                                             const std::vector<Amb>& curve,
                                             const std::vector<Amb>& initial) {
  std::vector<std::vector<Amb>> frames;
  frames.reserve(curve.size());
  frames.push_back(initial);
  for (std::size_t k = 1; k < curve.size(); ++k) {
    std::vector<Amb> next;
    next.reserve(initial.size());
    for (const Amb& v : frames.back()) {
      next.push_back(m.transport(v, curve[k - 1], curve[k]));
    }
    frames.push_back(std::move(next));
  }
  return frames;
}

}  // namespace mstat
