#pragma once

#include <memory>
#include <vector>

#include "mstat/common.hpp"

namespace mstat {

enum class ManifoldKind { Sphere, Spd, Euclidean };

// Riemannian manifold kernels for the unit sphere S^d, symmetric
// positive-definite matrices with the affine-invariant metric, and Euclidean
// space.  All operations are pure functions; points and tangent vectors use
// the ambient representation (unit vector / symmetric matrix / vector).
class Manifold {
 public:
  virtual ~Manifold() = default;

  virtual ManifoldKind kind() const = 0;
  // Intrinsic dimension d.
  virtual int dim() const = 0;
  virtual int ambient_rows() const = 0;
  virtual int ambient_cols() const = 0;
  virtual std::string name() const = 0;

  // Throws InputError if p is not a valid point (shape, unit norm, SPD-ness).
  virtual void validate(const Amb& p) const = 0;

  virtual double distance(const Amb& p, const Amb& q) const = 0;
  // Geodesic starting at p with initial velocity v, evaluated at time 1.
  virtual Amb exp(const Amb& p, const Amb& v) const = 0;
  // Inverse of exp along the minimizing geodesic; errors at the cut locus.
  virtual Amb log(const Amb& p, const Amb& q) const = 0;
  // Parallel transport of v along the minimizing geodesic from -> to.
  virtual Amb transport(const Amb& v, const Amb& from, const Amb& to) const = 0;
  // Riemannian metric at p.
  virtual double inner(const Amb& p, const Amb& u, const Amb& v) const = 0;
  // Deterministic orthonormal basis of the tangent space at p.
  virtual std::vector<Amb> tangent_basis(const Amb& p) const = 0;
  // Hessian of f_x = d^2(., x)/2 at p, as a d x d symmetric matrix in the
  // given orthonormal basis.
  virtual Eigen::MatrixXd hessian(const Amb& p, const Amb& x,
                                  const std::vector<Amb>& basis) const = 0;

  double norm(const Amb& p, const Amb& v) const {
    return std::sqrt(inner(p, v, v));
  }
  Amb zero_tangent() const {
    return Amb::Zero(ambient_rows(), ambient_cols());
  }
};

std::shared_ptr<const Manifold> make_sphere(int intrinsic_dim);
std::shared_ptr<const Manifold> make_spd(int matrix_size);
std::shared_ptr<const Manifold> make_euclidean(int dim);
std::shared_ptr<const Manifold> make_manifold(ManifoldKind kind,
                                              int ambient_dim);

struct ManifoldSeries {
  std::shared_ptr<const Manifold> manifold;
  std::vector<Amb> points;

  int size() const { return static_cast<int>(points.size()); }
};

// Coordinates of tangent vector v in an orthonormal basis at p.
Eigen::VectorXd tangent_coords(const Manifold& m, const Amb& p,
                               const std::vector<Amb>& basis, const Amb& v);

// Ambient tangent vector with the given coordinates.
Amb from_coords(const Manifold& m, const Amb& p, const std::vector<Amb>& basis,
                const Eigen::VectorXd& coords);

// T x d matrix of log-map coordinates of every series point at `mean`.
Eigen::MatrixXd log_coordinates(const ManifoldSeries& s, const Amb& mean,
                                const std::vector<Amb>& basis);

// Central finite differences of the gradient field g(z) = -log_z(x),
// transported back to p.  Metric-correct to O(h^2); used where no closed
// form exists and as an independent oracle in tests.
Eigen::MatrixXd finite_difference_hessian(const Manifold& m, const Amb& p,
                                          const Amb& x,
                                          const std::vector<Amb>& basis);

// Parallel orthonormal frame along a discrete curve: frame[k+1] is the
// transport of frame[k] along the connecting geodesic.
std::vector<std::vector<Amb>> parallel_frame(const Manifold& m,
                                             const std::vector<Amb>& curve,
                                             const std::vector<Amb>& initial);

}  // namespace mstat
