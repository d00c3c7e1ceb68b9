#ifndef ROLLHOL_STRUCTURES_HPP
#define ROLLHOL_STRUCTURES_HPP

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <memory>
#include <mutex>
#include <vector>

#include "rollhol/holonomy.hpp"

namespace rollhol {

using MatrixField = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
using CovectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Unit-scaled generator of a one-dimensional skew commutant, with
/// J^2 = -I verified and the sign fixed so that the tangent part of
/// J(0,1) has positive first nonvanishing component (scalar-row sign as
/// tie break). Throws NumericError when the commutant is not
/// one-dimensional or not of complex type.
Eigen::MatrixXd invariant_complex_structure(const HolonomyAlgebra& algebra);

/// Quaternionic triple J_i J_j = -eps_ijk J_k from a three-dimensional skew
/// commutant: J1 unit-scaled from the leading generator, J2 by anticommuting
/// projection of the next, J3 their product (J2 J1). A `seed` triple is used
/// instead when supplied (containment cases such as trivial holonomy); it
/// must commute with the algebra and satisfy the relations.
std::array<Eigen::MatrixXd, 3> invariant_quaternionic_triple(
    const HolonomyAlgebra& algebra,
    const std::array<Eigen::MatrixXd, 3>* seed = nullptr);

/// Parallel extension J^R_x = P J0 P^{-1} of an invariant fiber tensor along
/// canonical coordinate polylines from the base point; evaluations near an
/// existing anchor extend by a short straight leg instead of a fresh
/// transport. All matrices are in the adapted (frame + scalar) basis.
class ParallelStructure {
 public:
  ParallelStructure(const ManifoldSpec& spec, Eigen::VectorXd base,
                    Eigen::MatrixXd J0_adapted, int steps = 512);

  const ManifoldSpec& spec() const { return *spec_; }
  const Eigen::VectorXd& base() const { return base_; }
  const Eigen::MatrixXd& J0() const { return J0_; }

  Eigen::MatrixXd jr_adapted(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd jr_coord(const Eigen::VectorXd& x) const;

  /// Tangent part of J^R(0,1) in coordinate components.
  Eigen::VectorXd Z(const Eigen::VectorXd& x) const;
  /// Tangent-tangent block as a coordinate (1,1) tensor.
  Eigen::MatrixXd J(const Eigen::VectorXd& x) const;
  /// alpha = -beta, beta the scalar row; coordinate covector components.
  Eigen::VectorXd alpha(const Eigen::VectorXd& x) const;
  /// |scalar part of J^R(0,1)|; above tolerance this flags a non-unitary fit.
  double scalar_defect(const Eigen::VectorXd& x) const;

  /// Conjugation mismatch between the canonical polyline and the
  /// reverse-coordinate-order polyline to x.
  double path_independence_residual(const Eigen::VectorXd& x) const;

 private:
  struct PointValue {
    Eigen::VectorXd x;
    Eigen::MatrixXd jr;     // adapted
    Eigen::MatrixXd frame;  // orthonormal frame at x
  };
  PointValue value_at(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd transport_to(const Eigen::VectorXd& x) const;

  const ManifoldSpec* spec_ = nullptr;
  Eigen::VectorXd base_;
  Eigen::MatrixXd J0_;
  int steps_ = 512;

  struct Anchor {
    Eigen::VectorXd x;
    Eigen::MatrixXd P;  // adapted transport base -> x
  };
  mutable std::vector<Anchor> anchors_;
  mutable std::vector<PointValue> values_;
  mutable std::mutex mutex_;
};

/// A Sasaki candidate as numeric fields in coordinate representation.
struct TensorFields {
  VectorField Z;
  MatrixField J;
  CovectorField alpha;  // may be empty; defaults to g Z
};

/// Field evaluators backed by a parallel structure (the extraction of
/// Theorem-style data Z, J, alpha from J^R). Throws NumericError if the
/// scalar part of J^R(0,1) exceeds 1e-6 at the structure's base.
TensorFields extract_sasaki(const ParallelStructure& ps);

/// Field evaluators from expression components (tests and CLI input).
TensorFields fields_from_exprs(const ManifoldSpec& spec, std::vector<Expr> Z,
                               std::vector<std::vector<Expr>> J);

struct SasakiResiduals {
  // pointwise structure identities
  double reeb_unit = 0.0;      // | ||Z||_g - 1 |
  double alpha_of_Z = 0.0;     // | alpha(Z) - 1 |
  double J_of_Z = 0.0;         // || J Z ||
  double J_squared = 0.0;      // || J^2 + I - Z alpha ||
  double compat = 0.0;         // || g(J.,J.) - g + alpha alpha ||
  // differential identities
  double nablaZ_vs_J = 0.0;        // || J - nabla Z ||
  double nablaJ_identity = 0.0;    // || (nabla_X J)Y - g(Z,Y)X + g(X,Z)Y ||
  double killing = 0.0;            // || g(nabla_. Z, .) symmetric part ||
  double dalpha_2omega = 0.0;      // || d alpha - 2 omega ||
  double omega_skew = 0.0;         // || omega + omega^T ||
  double dalpha_of_Z = 0.0;        // || d alpha (Z, .) ||
  double curvature_identity = 0.0; // || R(X,Z)Y - g(Z,Y)X + g(X,Z)Y ||
  double omega_min_singular_value = 0.0;  // nondegeneracy of omega on ker alpha
  double scalar_defect = 0.0;
  bool fd_converged = true;

  double max_identity_residual() const;
};

/// Evaluates every Sasakian identity at the sample points with central
/// finite differences of step fd_step; a half-step pass feeds the
/// fd_converged diagnostic.
SasakiResiduals verify_sasaki(const ManifoldSpec& spec, const TensorFields& S,
                              const std::vector<Eigen::VectorXd>& points,
                              double fd_step = 1e-3, double tolerance = 1e-4);

struct JRBuildReport {
  double hypothesis_unit = 0.0;      // | ||Z|| - 1 |
  double hypothesis_killing = 0.0;
  double hypothesis_JZ = 0.0;
  double hypothesis_acs = 0.0;       // J^2 = -id on D, isometry on D
  double isometry_residual = 0.0;    // adapted J^R orthogonality
  double loop_commutator_residual = 0.0;  // max || [P_loop, J^R] ||
};

struct BuiltJR {
  MatrixField jr_adapted;
  MatrixField jr_coord;
  JRBuildReport report;
};

/// The converse construction J^R(X,r) = (JX + rZ, -g(X,Z)); the loop
/// commutator residual over `loops` is the numerical witness that the
/// rolling holonomy commutes with J^R.
BuiltJR build_JR_from_structure(const ManifoldSpec& spec, const TensorFields& S,
                                const Eigen::VectorXd& base,
                                const std::vector<CurvePath>& loops,
                                const std::vector<Eigen::VectorXd>& check_points,
                                int steps = 0, double fd_step = 1e-3);

struct ThreeSasakiResiduals {
  std::array<SasakiResiduals, 3> each;
  double Z_orthonormal = 0.0;  // max | g(Z_i, Z_j) - delta_ij |
  double bracket = 0.0;        // max || [Z_i,Z_j] - 2 eps_ijk Z_k ||
  double JiZj = 0.0;           // max || J_i Z_j + eps_ijk Z_k ||
};

/// Extraction of three structures from a quaternionic triple of parallel
/// tensors, with the cross relations evaluated by finite differences.
ThreeSasakiResiduals extract_3sasaki(const ManifoldSpec& spec,
                                     const std::array<const ParallelStructure*, 3>& ps,
                                     const std::vector<Eigen::VectorXd>& points,
                                     double fd_step = 1e-3);

struct TripleBuildReport {
  double hypothesis_residual = 0.0;  // worst single-structure hypothesis check
  double bracket_hypothesis = 0.0;   // [Z_i,Z_j] = 2 eps Z_k
  double cone_case = 0.0;            // on (0,1)
  double d_case = 0.0;               // on sections of D
  double z_case = 0.0;               // on span{Z_1,Z_2,Z_3}
  double JiZj_antisym = 0.0;         // J_i Z_j + J_j Z_i
};

/// The converse triple J_i^R(X,r) = (J_i X + r Z_i, -g(X,Z_i)) with the
/// eps-relation identity checked case by case: on the distinguished fiber
/// direction, on sections of D, and on the span of the Z's.
TripleBuildReport build_JR_triple(const ManifoldSpec& spec,
                                  const std::array<TensorFields, 3>& S,
                                  const std::vector<Eigen::VectorXd>& points,
                                  double fd_step = 1e-3);

/// Sign of the permutation (1 2 3) -> (i j k); 0 when not a permutation.
int epsilon3(int i, int j, int k);

}  // namespace rollhol

#endif
