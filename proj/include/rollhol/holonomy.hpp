#ifndef ROLLHOL_HOLONOMY_HPP
#define ROLLHOL_HOLONOMY_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rollhol/connection.hpp"
#include "rollhol/curve.hpp"
#include "rollhol/manifold.hpp"

namespace rollhol {

/// Deterministic loop family at `base`: coordinate rectangles in every
/// plane at sides rect_deltas, then `count` seeded smooth loops (truncated
/// trigonometric polynomials rescaled to stay inside the chart domain).
struct LoopOptions {
  std::vector<double> rect_deltas{0.05, 0.1, 0.2};
  int trig_modes = 3;
  int steps_per_segment = 512;
};
std::vector<CurvePath> generate_loops(const ManifoldSpec& spec,
                                      const Eigen::VectorXd& base, int count,
                                      unsigned seed, const LoopOptions& opts = {});

/// One transported loop: the holonomy matrix and its principal logarithm
/// (absent on branch failure, with a note).
struct HolonomySample {
  int loop_id = 0;
  Eigen::MatrixXd matrix;
  bool log_ok = false;
  Eigen::MatrixXd log_matrix;
  std::string note;
};

struct EstimateOptions {
  double rank_tolerance = 1e-6;  // relative singular-value cutoff
  double rank_floor = 1e-7;      // absolute singular-value floor
  int steps = 0;                 // 0 = loops' own steps_per_segment
  std::vector<double> checkpoint_fracs{0.25, 0.5, 0.75};
  Eigen::MatrixXd base_frame_rotation;  // optional n x n orthogonal
  int threads = 0;
};

/// Estimated Lie algebra of the rolling holonomy at a base point: an
/// orthonormal (Frobenius) basis of h_1-skew matrices in the adapted basis.
struct HolonomyAlgebra {
  Eigen::VectorXd base;
  std::vector<Eigen::MatrixXd> basis;
  int rank = 0;
  std::vector<double> singular_values;
  double rank_tolerance = 1e-6;
  double rank_floor = 1e-7;
  double bracket_closure_residual = 0.0;
  int discarded_logs = 0;
  std::vector<std::string> notes;
};

/// Spans loop-transport logarithms together with curvature endomorphisms
/// sampled along each loop and conjugated back to the base point.
HolonomyAlgebra estimate_algebra(const ManifoldSpec& spec, const Eigen::VectorXd& base,
                                 const std::vector<CurvePath>& loops,
                                 const EstimateOptions& opts = {});

/// Orthonormal basis of skew matrices commuting with every algebra element
/// (all of skew(n) when the algebra is trivial).
std::vector<Eigen::MatrixXd> commutant_skew(const std::vector<Eigen::MatrixXd>& basis,
                                            int fiber_dim);

enum class GroupLabel { Trivial, SO, U, SU, Sp, SpSp1, Spin7, Undetermined };

struct GroupVerdict {
  GroupLabel label = GroupLabel::Undetermined;
  std::string label_string = "UNDETERMINED";
  bool controllable = false;
  int algebra_dim = 0;
  int commutant_skew_dim = 0;
  int n = 0;
  std::vector<std::string> notes;
};

/// Matches (algebra_dim, commutant dimension, n) against the candidate
/// subgroups of SO(n+1) acting transitively on the sphere; SO and TRIVIAL
/// apply for all n, the unitary/symplectic chains for odd n.
GroupVerdict classify(const HolonomyAlgebra& algebra, int n);

/// Table-only classification from stored dimensions (report files).
/// su_trace_ok reports whether algebra elements had vanishing complex-trace
/// component against the invariant structure.
GroupVerdict classify_dims(int algebra_dim, int commutant_dim, int n,
                           bool su_trace_ok = true);

/// Controllability flag plus the structure carried by the matched group.
std::pair<bool, std::string> controllability(const GroupVerdict& verdict);

}  // namespace rollhol

#endif
