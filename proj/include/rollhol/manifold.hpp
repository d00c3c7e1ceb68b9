#ifndef ROLLHOL_MANIFOLD_HPP
#define ROLLHOL_MANIFOLD_HPP

#include <Eigen/Dense>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rollhol/expr.hpp"

namespace rollhol {

/// Malformed spec files, unknown builtin names, schema violations.
struct InputError : std::runtime_error {
  explicit InputError(const std::string& m) : std::runtime_error(m) {}
};

/// A queried point or curve left the chart domain.
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& m) : std::runtime_error(m) {}
};

/// Numerical failure: non-SPD metric, singular solve, branch-cut log.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& m) : std::runtime_error(m) {}
};

/// Open interval; infinite endpoints allowed.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool contains(double v, double margin = 0.0) const {
    return v > lo + margin && v < hi - margin;
  }
  double width() const { return hi - lo; }
};

enum class BuiltinKind { Custom, Euclidean, Sphere, Hyperbolic, Heisenberg, Cone };

/// Chart-described Riemannian manifold: dimension, metric component
/// expressions g_ij(x1..xn), optional declared-orthonormal frame fields,
/// and per-coordinate open interval bounds.
class ManifoldSpec {
 public:
  ManifoldSpec() = default;

  static ManifoldSpec from_metric(std::string name, int dim, std::vector<Expr> metric,
                                  std::vector<Interval> domain = {},
                                  std::vector<std::vector<Expr>> frame = {});

  int dim() const { return dim_; }
  const std::string& name() const { return name_; }
  const VarTable& vars() const { return vars_; }
  const std::vector<Interval>& domain() const { return domain_; }
  BuiltinKind kind() const { return kind_; }

  const Expr& metric_expr(int i, int j) const { return metric_[i * dim_ + j]; }
  const std::vector<Expr>& metric_exprs() const { return metric_; }

  bool has_frame() const { return !frame_.empty(); }
  /// Component expressions of declared frame field i.
  const std::vector<Expr>& frame_exprs(int i) const { return frame_[i]; }
  /// Evaluates declared frame field i at x (coordinate components).
  Eigen::VectorXd frame_field(int i, const Eigen::VectorXd& x) const;

  /// Fills g(x) without domain or SPD checks; the hot path.
  void metric_at(const double* x, Eigen::MatrixXd& g) const;
  Eigen::MatrixXd metric_at(const Eigen::VectorXd& x) const;

  bool in_domain(const Eigen::VectorXd& x, double margin = 0.0) const;
  void require_in_domain(const Eigen::VectorXd& x, double margin = 0.0) const;

  /// Distance from x_i to the nearest domain bound (inf if unbounded).
  double boundary_distance(const Eigen::VectorXd& x, int i) const;

  // Cone charts keep their base spec for the warped-product cross-checks.
  bool is_cone() const { return kind_ == BuiltinKind::Cone; }
  const ManifoldSpec& cone_base() const;

  // Sphere charts record the radius for the embedding oracle.
  double sphere_radius() const { return sphere_radius_; }
  // Heisenberg charts record m (dim = 2m+1).
  int heisenberg_m() const { return heisenberg_m_; }

 private:
  std::string name_;
  int dim_ = 0;
  std::vector<Expr> metric_;                // row-major n*n
  std::vector<Prog> metric_prog_;           // compiled upper triangle, row-major
  std::vector<std::vector<Expr>> frame_;    // frame_[i][k] = component k of field i
  std::vector<std::vector<Prog>> frame_prog_;
  std::vector<Interval> domain_;
  VarTable vars_;
  BuiltinKind kind_ = BuiltinKind::Custom;
  double sphere_radius_ = 0.0;
  int heisenberg_m_ = 0;
  std::shared_ptr<const ManifoldSpec> cone_base_;

  void compile();
  friend ManifoldSpec make_builtin(const std::string& tag);
  friend ManifoldSpec make_cone(const ManifoldSpec& base, Interval s_range);
};

/// Builds a builtin from its name string: "euclidean:3", "sphere:3:radius=1",
/// "hyperbolic:3", "heisenberg:m=1", "cone:<child>".
ManifoldSpec make_builtin(const std::string& tag);

/// Warped product M x (0,inf) with metric s^2 g + ds^2, restricted to s_range.
ManifoldSpec make_cone(const ManifoldSpec& base, Interval s_range = {0.25, 4.0});

/// Loads a manifold JSON file ({name, dim, metric|builtin, frame?, domain?})
/// or resolves a builtin name string, then validates.
ManifoldSpec load_manifold(const std::string& path_or_name);

/// Parses the JSON text form directly (used by load_manifold and tests).
ManifoldSpec manifold_from_json_text(const std::string& text);

/// Checks metric symmetry and positive-definiteness at `samples` random
/// domain points, and the frame Gram identity when a frame is declared.
/// Throws InputError / NumericError on violation.
void validate_spec(const ManifoldSpec& spec, int samples = 1000, unsigned seed = 12345);

/// Deterministic points strictly inside the chart domain (test sampling).
std::vector<Eigen::VectorXd> random_domain_points(const ManifoldSpec& spec, int count,
                                                  unsigned seed, double scale = 1.0);

/// Stable digest of a spec's defining data (for reports).
std::string spec_digest(const ManifoldSpec& spec);

// Stereographic chart oracle for sphere builtins: chart point u in R^n maps
// to the sphere of radius R in R^{n+1}; projection is from the north pole
// (0,..,0,R) onto the equatorial plane, so the chart origin is the south pole.
Eigen::VectorXd sphere_embed(double radius, const Eigen::VectorXd& u);
Eigen::VectorXd sphere_unembed(double radius, const Eigen::VectorXd& p);
Eigen::MatrixXd sphere_embed_jacobian(double radius, const Eigen::VectorXd& u);

}  // namespace rollhol

#endif
