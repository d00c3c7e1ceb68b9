#ifndef ROLLHOL_CONNECTION_HPP
#define ROLLHOL_CONNECTION_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "rollhol/curve.hpp"
#include "rollhol/geometry.hpp"
#include "rollhol/manifold.hpp"

namespace rollhol {

/// Element (X, r) of the rank-(n+1) bundle TM + R at a base point.
struct FiberVector {
  Eigen::VectorXd base;     // chart point
  Eigen::VectorXd tangent;  // X, coordinate components
  double scalar = 0.0;      // r
};

/// h_c((X,r),(Y,s)) = g(X,Y) + r s / c; positive definite for c = 1,
/// Lorentzian for c = -1. c is restricted to {-1, +1}.
double fiber_inner(const ManifoldSpec& spec, double c, const FiberVector& u,
                   const FiberVector& v);

/// Gram matrix of h_c in the adapted (orthonormal frame + scalar) basis:
/// diag(1,..,1, 1/c).
Eigen::MatrixXd fiber_metric_adapted(int n, double c);

void require_curvature_sign(double c);

/// Covariant derivative of the section (X-field, r-field) along the tangent
/// vector Y at x: (nabla_Y X + r(x) Y, Y(r) - c g(X_x, Y)).
FiberVector rolling_derivative(const ManifoldSpec& spec, double c,
                               const std::vector<Expr>& X_field, const Expr& r_field,
                               const Eigen::VectorXd& Y, const Eigen::VectorXd& x,
                               double step = 1e-5);

/// Parallel transport around `curve`; `matrix` acts on adapted-basis fiber
/// coordinates (orthonormal frame of the start point, then the scalar slot)
/// and maps them to adapted coordinates at the end point.
struct TransportOperator {
  double c = 1.0;
  Eigen::VectorXd start, end;
  Eigen::MatrixXd matrix;        // adapted basis
  Eigen::MatrixXd coord_matrix;  // raw (coordinate + scalar) representation
  int steps_used = 0;
};

/// Snapshot of a partial rolling transport (adapted at the running point).
struct RollingCheckpoint {
  double frac = 0.0;
  Eigen::VectorXd x;
  Eigen::MatrixXd adapted;  // maps adapted coords at start to adapted at x
};

TransportOperator rolling_transport(const ManifoldSpec& spec, double c,
                                    const CurvePath& curve, int steps = 0,
                                    const std::vector<double>* checkpoint_fracs = nullptr,
                                    std::vector<RollingCheckpoint>* checkpoints = nullptr);

/// Curvature F(X,Y) of the rolling connection as a matrix on the adapted
/// fiber basis at x, assembled by applying the connection forms of
/// rolling_derivative to a fiber basis with five-point finite differences.
Eigen::MatrixXd rolling_curvature(const ManifoldSpec& spec, double c,
                                  const Eigen::VectorXd& x, const Eigen::VectorXd& X,
                                  const Eigen::VectorXd& Y, double outer_step = 1e-2);

/// F(e_i, e_j) for every coordinate plane i<j (row-major pair order); one
/// shared stencil evaluation serves all planes.
std::vector<Eigen::MatrixXd> rolling_curvature_planes(const ManifoldSpec& spec, double c,
                                                      const Eigen::VectorXd& x,
                                                      double outer_step = 1e-2);

/// The Riemannian cone over `base`: coordinates (x1..xn, s), metric
/// s^2 g + ds^2, radial range restricted to s_range inside (0, inf).
ManifoldSpec cone_spec(const ManifoldSpec& base, Interval s_range = {0.25, 4.0});

/// Cone covariant derivative of the field Y + b d/ds (Y, b defined on the
/// base, constant in s) at (x, s). `along_s` differentiates in the radial
/// direction, otherwise along the base tangent vector X. `generic`
/// evaluates through the cone chart's Christoffel symbols instead of the
/// closed warped-product form (cross-check path). Returns n+1 components.
Eigen::VectorXd cone_covariant(const ManifoldSpec& base, const std::vector<Expr>& Y_field,
                               const Expr& b_field, const Eigen::VectorXd& X, bool along_s,
                               const Eigen::VectorXd& x, double s, bool generic = false);

/// Fiber isomorphism at (x, s): X + b d/ds -> (s X, b), as a matrix from
/// cone coordinates to fiber coordinates.
Eigen::MatrixXd cone_fiber_isomorphism(int n, double s);

struct ConeIsomorphismReport {
  double residual = 0.0;  // operator-norm difference
  double s0 = 0.0;
  int steps_used = 0;
};

/// Levi-Civita transport around the cone loop, conjugated through the fiber
/// isomorphism, against the rolling transport (c = 1) of the projected base
/// loop. The cone loop must close and start at radius s0.
ConeIsomorphismReport verify_cone_isomorphism(const ManifoldSpec& base,
                                              const CurvePath& cone_loop, double s0,
                                              int steps = 0);

/// Projects a cone curve to its base manifold components.
CurvePath project_cone_curve(const CurvePath& cone_curve, int base_dim);

}  // namespace rollhol

#endif
