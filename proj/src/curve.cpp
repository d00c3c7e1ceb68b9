#include "rollhol/curve.hpp"

#include <cmath>

#include <json.hpp>

#include "rollhol/manifold.hpp"  // InputError

namespace rollhol {

namespace {
constexpr double kJoinTol = 1e-12;
const double kTwoPi = 8.0 * std::atan(1.0);
}  // namespace

// ---------------------------------------------------------------------------
// Segment

Segment Segment::from_exprs(std::vector<Expr> components) {
  if (components.empty()) throw InputError("segment needs at least one component");
  Segment s;
  s.kind_ = Kind::Exprs;
  s.dim_ = static_cast<int>(components.size());
  s.exprs_ = std::move(components);
  VarTable tvar(std::vector<std::string>{"t"});
  for (const Expr& e : s.exprs_) {
    s.pos_prog_.push_back(compile_expr(e, tvar));
    s.vel_prog_.push_back(compile_expr(e.derivative("t"), tvar));
  }
  return s;
}

Segment Segment::polyline(std::vector<Eigen::VectorXd> waypoints) {
  if (waypoints.size() < 2) throw InputError("polyline needs at least two waypoints");
  Segment s;
  s.kind_ = Kind::Polyline;
  s.dim_ = static_cast<int>(waypoints.front().size());
  for (const auto& w : waypoints)
    if (w.size() != s.dim_) throw InputError("polyline waypoints have mixed dimensions");
  s.waypoints_ = std::move(waypoints);
  return s;
}

Segment Segment::trig_loop(Eigen::VectorXd base, Eigen::MatrixXd cos_coef,
                           Eigen::MatrixXd sin_coef) {
  Segment s;
  s.kind_ = Kind::TrigLoop;
  s.dim_ = static_cast<int>(base.size());
  if (cos_coef.rows() != s.dim_ || sin_coef.rows() != s.dim_ ||
      cos_coef.cols() != sin_coef.cols())
    throw InputError("trig loop coefficient shapes do not match");
  s.base_ = std::move(base);
  s.cos_coef_ = std::move(cos_coef);
  s.sin_coef_ = std::move(sin_coef);
  return s;
}

Eigen::VectorXd Segment::at(double t) const {
  double u = param(t);
  switch (kind_) {
    case Kind::Exprs: {
      Eigen::VectorXd x(dim_);
      for (int i = 0; i < dim_; ++i) x(i) = pos_prog_[static_cast<std::size_t>(i)].eval(&u, 1);
      return x;
    }
    case Kind::Polyline: {
      int legs = static_cast<int>(waypoints_.size()) - 1;
      double s = u * legs;
      int leg = std::min(static_cast<int>(s), legs - 1);
      double f = s - leg;
      return (1.0 - f) * waypoints_[static_cast<std::size_t>(leg)] +
             f * waypoints_[static_cast<std::size_t>(leg + 1)];
    }
    case Kind::TrigLoop: {
      Eigen::VectorXd x = base_;
      for (int k = 0; k < cos_coef_.cols(); ++k) {
        double w = kTwoPi * (k + 1) * u;
        x += cos_coef_.col(k) * (std::cos(w) - 1.0) + sin_coef_.col(k) * std::sin(w);
      }
      return x;
    }
  }
  return Eigen::VectorXd();
}

Eigen::VectorXd Segment::velocity(double t) const {
  double u = param(t);
  double sign = reversed_ ? -1.0 : 1.0;
  switch (kind_) {
    case Kind::Exprs: {
      Eigen::VectorXd v(dim_);
      for (int i = 0; i < dim_; ++i) v(i) = vel_prog_[static_cast<std::size_t>(i)].eval(&u, 1);
      return sign * v;
    }
    case Kind::Polyline: {
      int legs = static_cast<int>(waypoints_.size()) - 1;
      double s = u * legs;
      int leg = std::min(static_cast<int>(s), legs - 1);
      return sign * legs *
             (waypoints_[static_cast<std::size_t>(leg + 1)] -
              waypoints_[static_cast<std::size_t>(leg)]);
    }
    case Kind::TrigLoop: {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
      for (int k = 0; k < cos_coef_.cols(); ++k) {
        double w = kTwoPi * (k + 1) * u;
        v += kTwoPi * (k + 1) *
             (-cos_coef_.col(k) * std::sin(w) + sin_coef_.col(k) * std::cos(w));
      }
      return sign * v;
    }
  }
  return Eigen::VectorXd();
}

std::vector<double> Segment::breakpoints() const {
  if (kind_ != Kind::Polyline) return {};
  std::vector<double> bp;
  int legs = static_cast<int>(waypoints_.size()) - 1;
  for (int k = 1; k < legs; ++k) {
    double u = static_cast<double>(k) / legs;
    bp.push_back(reversed_ ? 1.0 - u : u);
  }
  if (reversed_) std::reverse(bp.begin(), bp.end());
  return bp;
}

Segment Segment::reversed() const {
  Segment s = *this;
  s.reversed_ = !reversed_;
  return s;
}

Segment Segment::head_components(int m) const {
  Segment s;
  switch (kind_) {
    case Kind::Exprs:
      s = from_exprs(std::vector<Expr>(exprs_.begin(), exprs_.begin() + m));
      break;
    case Kind::Polyline: {
      std::vector<Eigen::VectorXd> pts;
      pts.reserve(waypoints_.size());
      for (const auto& w : waypoints_) pts.push_back(w.head(m));
      s = polyline(std::move(pts));
      break;
    }
    case Kind::TrigLoop:
      s = trig_loop(base_.head(m), cos_coef_.topRows(m), sin_coef_.topRows(m));
      break;
  }
  s.reversed_ = reversed_;
  return s;
}

// ---------------------------------------------------------------------------
// CurvePath

CurvePath::CurvePath(std::vector<Segment> segments, int steps_per_segment, bool is_loop)
    : segments_(std::move(segments)), steps_per_segment_(steps_per_segment),
      is_loop_(is_loop) {
  if (segments_.empty()) throw InputError("curve needs at least one segment");
  if (steps_per_segment_ < 1) throw InputError("steps_per_segment must be positive");
  for (std::size_t k = 0; k + 1 < segments_.size(); ++k) {
    double gap = (segments_[k].at(1.0) - segments_[k + 1].at(0.0)).lpNorm<Eigen::Infinity>();
    if (gap > kJoinTol)
      throw InputError("consecutive curve segments do not join (gap " +
                       std::to_string(gap) + ")");
  }
  if (is_loop_) {
    double gap = (end() - start()).lpNorm<Eigen::Infinity>();
    if (gap > kJoinTol)
      throw InputError("loop does not close (gap " + std::to_string(gap) + ")");
  }
}

CurvePath CurvePath::line(const Eigen::VectorXd& a, const Eigen::VectorXd& b, int steps) {
  return CurvePath({Segment::polyline({a, b})}, steps, false);
}

CurvePath CurvePath::through_points(const std::vector<Eigen::VectorXd>& pts, int steps,
                                    bool is_loop) {
  return CurvePath({Segment::polyline(pts)}, steps, is_loop);
}

CurvePath CurvePath::rectangle(const Eigen::VectorXd& base, int axis_i, int axis_j,
                               double delta, int steps) {
  Eigen::VectorXd ei = Eigen::VectorXd::Zero(base.size());
  Eigen::VectorXd ej = Eigen::VectorXd::Zero(base.size());
  ei(axis_i) = delta;
  ej(axis_j) = delta;
  return through_points({base, base + ei, base + ei + ej, base + ej, base}, steps, true);
}

CurvePath CurvePath::axis_polyline(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                   int steps, const std::vector<int>& order) {
  std::vector<int> ord = order;
  if (ord.empty())
    for (int i = 0; i < a.size(); ++i) ord.push_back(i);
  std::vector<Eigen::VectorXd> pts{a};
  Eigen::VectorXd cur = a;
  for (int i : ord) {
    if (cur(i) == b(i)) continue;
    cur(i) = b(i);
    pts.push_back(cur);
  }
  if (pts.size() == 1) pts.push_back(a);  // a == b: degenerate constant path
  return through_points(pts, steps, false);
}

int CurvePath::dim() const { return segments_.front().dim(); }

Eigen::VectorXd CurvePath::start() const { return segments_.front().at(0.0); }
Eigen::VectorXd CurvePath::end() const { return segments_.back().at(1.0); }

Eigen::VectorXd CurvePath::at(double t) const {
  int nseg = static_cast<int>(segments_.size());
  double s = t * nseg;
  int k = std::min(static_cast<int>(s), nseg - 1);
  return segments_[static_cast<std::size_t>(k)].at(s - k);
}

CurvePath CurvePath::reversed() const {
  std::vector<Segment> segs;
  for (auto it = segments_.rbegin(); it != segments_.rend(); ++it)
    segs.push_back(it->reversed());
  return CurvePath(std::move(segs), steps_per_segment_, is_loop_);
}

CurvePath CurvePath::then(const CurvePath& other) const {
  std::vector<Segment> segs = segments_;
  segs.insert(segs.end(), other.segments_.begin(), other.segments_.end());
  bool loop = (other.end() - start()).lpNorm<Eigen::Infinity>() <= kJoinTol;
  return CurvePath(std::move(segs), steps_per_segment_, loop);
}

CurvePath CurvePath::from_json_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid curve JSON: ") + e.what());
  }
  if (!doc.contains("segments")) throw InputError("curve document needs 'segments'");
  std::vector<Segment> segs;
  for (const auto& js : doc["segments"]) {
    if (js.contains("exprs")) {
      std::vector<Expr> comps;
      for (const auto& e : js["exprs"]) comps.push_back(parse_expr(e.get<std::string>()));
      segs.push_back(Segment::from_exprs(std::move(comps)));
    } else if (js.contains("polyline")) {
      std::vector<Eigen::VectorXd> pts;
      for (const auto& p : js["polyline"]) {
        Eigen::VectorXd v(p.size());
        for (std::size_t i = 0; i < p.size(); ++i)
          v(static_cast<int>(i)) = p[i].get<double>();
        pts.push_back(std::move(v));
      }
      segs.push_back(Segment::polyline(std::move(pts)));
    } else {
      throw InputError("segment needs 'exprs' or 'polyline'");
    }
  }
  int steps = doc.value("steps_per_segment", 512);
  bool loop = doc.value("is_loop", false);
  return CurvePath(std::move(segs), steps, loop);
}

}  // namespace rollhol
