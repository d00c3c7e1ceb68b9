#ifndef ROLLHOL_GEOMETRY_HPP
#define ROLLHOL_GEOMETRY_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "rollhol/curve.hpp"
#include "rollhol/manifold.hpp"

namespace rollhol {

using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// g(x) with domain and positive-definiteness checks.
Eigen::MatrixXd eval_metric(const ManifoldSpec& spec, const Eigen::VectorXd& x);

/// Gamma[k](i,j) = Gamma^k_ij by central differences on the metric entries.
/// Steps are relative to coordinate magnitude when |x_i| > 1. order 2 is the
/// default scheme; order 4 uses the five-point stencil (reference quality).
std::vector<Eigen::MatrixXd> christoffel(const ManifoldSpec& spec,
                                         const Eigen::VectorXd& x,
                                         double step = 1e-5, int order = 2);

/// (nabla_V W)(x) for expression vector fields V (direction) and W.
Eigen::VectorXd covariant_derivative_field(const ManifoldSpec& spec,
                                           const std::vector<Expr>& V,
                                           const std::vector<Expr>& W,
                                           const Eigen::VectorXd& x,
                                           double step = 1e-5);

/// (nabla_Y W)(x) for a numeric field W and a fixed direction Y.
Eigen::VectorXd covariant_derivative(const ManifoldSpec& spec, const Eigen::VectorXd& Y,
                                     const VectorField& W, const Eigen::VectorXd& x,
                                     double fd_step = 1e-3);

/// State snapshot recorded while integrating a transport along a curve.
struct TransportCheckpoint {
  double frac = 0.0;      // global curve fraction in [0,1]
  Eigen::VectorXd x;      // base point
  Eigen::MatrixXd state;  // accumulated transport matrix
};

/// Fixed-step classical RK4 for Ydot = A(x(t), xdot(t)) Y along the curve,
/// split at polyline corners. Returns Y(1) with Y(0) = identity.
Eigen::MatrixXd integrate_linear_ode(
    const CurvePath& curve, int steps_per_segment, int state_dim,
    const std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&,
                             Eigen::MatrixXd&)>& coeff,
    const std::vector<double>* checkpoint_fracs = nullptr,
    std::vector<TransportCheckpoint>* checkpoints = nullptr);

/// Levi-Civita parallel transport; matrix maps coordinate components at the
/// curve start to coordinate components at the end. steps = 0 uses the
/// curve's own steps_per_segment.
Eigen::MatrixXd lc_transport_matrix(const ManifoldSpec& spec, const CurvePath& curve,
                                    int steps = 0);
Eigen::VectorXd levi_civita_transport(const ManifoldSpec& spec, const CurvePath& curve,
                                      const Eigen::VectorXd& v0, int steps = 0);

/// R(X,Y) = nabla_X nabla_Y - nabla_Y nabla_X - nabla_[X,Y] as a matrix on
/// T_xM (coordinate components), assembled from Christoffel symbols and
/// their finite differences (five-point outer stencil).
Eigen::MatrixXd riemann_endomorphism(const ManifoldSpec& spec, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                     double outer_step = 1e-2);

/// R(e_i, e_j) for all coordinate planes, row-major upper pairs (i<j).
std::vector<Eigen::MatrixXd> riemann_coordinate_planes(const ManifoldSpec& spec,
                                                       const Eigen::VectorXd& x,
                                                       double outer_step = 1e-2);

/// Ric(F_a, F_b) = trace(W -> R(W, F_a) F_b) in the supplied frame
/// (columns, must be g-orthonormal).
Eigen::MatrixXd ricci(const ManifoldSpec& spec, const Eigen::VectorXd& x,
                      const Eigen::MatrixXd& frame, double outer_step = 1e-2);

struct GeodesicResult {
  Eigen::VectorXd x;  // endpoint
  Eigen::VectorXd v;  // endpoint velocity
};

/// Integrates xddot^k + Gamma^k_ij xdot^i xdot^j = 0 up to time T.
GeodesicResult geodesic(const ManifoldSpec& spec, const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& v0, double T, int steps = 512);

/// Gram-Schmidt of the coordinate frame with respect to g(x), in coordinate
/// order; columns are the frame vectors.
Eigen::MatrixXd orthonormal_frame(const ManifoldSpec& spec, const Eigen::VectorXd& x);

}  // namespace rollhol

#endif
