#ifndef ROLLHOL_ROLLING_HPP
#define ROLLHOL_ROLLING_HPP

#include <Eigen/Dense>
#include <vector>

#include "rollhol/connection.hpp"
#include "rollhol/curve.hpp"
#include "rollhol/manifold.hpp"

namespace rollhol {

/// Contact configuration of M rolling on the unit sphere: chart point on M,
/// embedded sphere point, and the images under the contact isometry of the
/// base orthonormal frame of T_xM (columns, tangent to the sphere).
struct RollingState {
  Eigen::VectorXd x;
  Eigen::VectorXd xhat;     // unit vector in R^{n+1}
  Eigen::MatrixXd A_frame;  // (n+1) x n, orthonormal columns orthogonal to xhat
};

/// Maximal deviation from the RollingState invariants.
double rolling_state_defect(const RollingState& q);

struct RollingTrajectory {
  std::vector<double> t;  // global curve parameter per grid point
  std::vector<RollingState> states;
  std::vector<Eigen::VectorXd> xdot;  // base-curve velocity at each grid point
  std::vector<int> span_id;           // smooth-span index (FD windows stop at corners)
  std::vector<double> span_h;         // parameter step per span
  int reorthonormalizations = 0;
  double max_invariant_defect = 0.0;
};

/// Integrates the development of `curve` through the rolling constraints:
/// the sphere contact point obeys the no-slip equation and the contact
/// isometry evolves by parallel frames on both sides (no twist).
RollingTrajectory develop(const ManifoldSpec& specM, const CurvePath& curve,
                          const RollingState& q0, int steps = 0);

struct RollingResiduals {
  double ns = 0.0;  // || d/dt xhat - A xdot || measured from the grid data
  double nt = 0.0;  // || D/dt (A V) - A D/dt V || for the first frame field
  double state_defect = 0.0;
};

/// Pure measurement on trajectory data: derivatives are taken by five-point
/// stencils on the stored grid, so tampered or inconsistent trajectories
/// show up as large residuals.
RollingResiduals rolling_residuals(const ManifoldSpec& specM, const RollingTrajectory& traj);

/// Develops the loop, reads off the kinematic monodromy in SO(n+1) from the
/// initial and final contact configurations, and compares it with the
/// rolling-connection transport under the identification
/// (X, r) -> A0 X + r xhat0. Returns the Frobenius-norm difference.
double holonomy_crosscheck(const ManifoldSpec& specM, const CurvePath& loop,
                           const RollingState& q0, int steps = 0);

/// Contact configuration rolling M over the sphere at the embedded image of
/// chart point x (only meaningful when M itself is a sphere builtin).
RollingState sphere_self_contact(const ManifoldSpec& sphere_spec, const Eigen::VectorXd& x);

/// Standard upright start for an arbitrary M: contact at the sphere's south
/// pole, frame axes aligned with the first n coordinate directions.
RollingState standard_contact(const ManifoldSpec& specM, const Eigen::VectorXd& x);

}  // namespace rollhol

#endif
