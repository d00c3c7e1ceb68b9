#ifndef ROLLHOL_CURVE_HPP
#define ROLLHOL_CURVE_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rollhol/expr.hpp"

namespace rollhol {

/// One smooth piece of a path, parametrized over [0,1]. Three forms:
/// coordinate expressions in t, a polyline (smoothing off), or a closed
/// trigonometric polynomial (the seeded loop generator's native form).
class Segment {
 public:
  static Segment from_exprs(std::vector<Expr> components);
  static Segment polyline(std::vector<Eigen::VectorXd> waypoints);
  /// x(t) = base + sum_k cos_coef.col(k) (cos(2 pi (k+1) t) - 1)
  ///             + sin_coef.col(k) sin(2 pi (k+1) t); closed by construction.
  static Segment trig_loop(Eigen::VectorXd base, Eigen::MatrixXd cos_coef,
                           Eigen::MatrixXd sin_coef);

  int dim() const { return dim_; }
  Eigen::VectorXd at(double t) const;
  Eigen::VectorXd velocity(double t) const;

  /// Interior parameter values where smoothness breaks (polyline corners).
  std::vector<double> breakpoints() const;

  bool is_polyline() const { return kind_ == Kind::Polyline; }
  const std::vector<Eigen::VectorXd>& waypoints() const { return waypoints_; }
  const std::vector<Expr>& exprs() const { return exprs_; }

  Segment reversed() const;
  /// The same path restricted to the first m coordinates.
  Segment head_components(int m) const;

 private:
  enum class Kind { Exprs, Polyline, TrigLoop };
  Kind kind_ = Kind::Polyline;
  int dim_ = 0;
  bool reversed_ = false;

  std::vector<Expr> exprs_;
  std::vector<Prog> pos_prog_, vel_prog_;

  std::vector<Eigen::VectorXd> waypoints_;

  Eigen::VectorXd base_;
  Eigen::MatrixXd cos_coef_, sin_coef_;

  double param(double t) const { return reversed_ ? 1.0 - t : t; }
};

/// Piecewise-smooth path through a chart; consecutive segment endpoints must
/// coincide within 1e-12, and loops must close to the same tolerance.
class CurvePath {
 public:
  CurvePath() = default;
  CurvePath(std::vector<Segment> segments, int steps_per_segment, bool is_loop);

  static CurvePath line(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                        int steps = 512);
  static CurvePath through_points(const std::vector<Eigen::VectorXd>& pts,
                                  int steps = 512, bool is_loop = false);
  /// Coordinate rectangle loop at `base`, sides delta along axes i then j.
  static CurvePath rectangle(const Eigen::VectorXd& base, int axis_i, int axis_j,
                             double delta, int steps = 512);
  /// Axis-by-axis polyline from a to b, coordinates changed in `order`
  /// (defaults to 0..n-1).
  static CurvePath axis_polyline(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                 int steps = 512, const std::vector<int>& order = {});

  static CurvePath from_json_text(const std::string& text);

  int dim() const;
  bool is_loop() const { return is_loop_; }
  int steps_per_segment() const { return steps_per_segment_; }
  void set_steps_per_segment(int s) { steps_per_segment_ = s; }
  const std::vector<Segment>& segments() const { return segments_; }

  Eigen::VectorXd start() const;
  Eigen::VectorXd end() const;
  /// Position at global parameter in [0,1] spanning all segments evenly.
  Eigen::VectorXd at(double t) const;

  CurvePath reversed() const;
  /// Concatenation: this followed by other (endpoints must match).
  CurvePath then(const CurvePath& other) const;

 private:
  std::vector<Segment> segments_;
  int steps_per_segment_ = 512;
  bool is_loop_ = false;
};

}  // namespace rollhol

#endif
