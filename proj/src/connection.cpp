#include "rollhol/connection.hpp"

#include <cmath>

namespace rollhol {

void require_curvature_sign(double c) {
  if (c != 1.0 && c != -1.0)
    throw InputError("curvature parameter c must be +1 or -1");
}

double fiber_inner(const ManifoldSpec& spec, double c, const FiberVector& u,
                   const FiberVector& v) {
  require_curvature_sign(c);
  if ((u.base - v.base).lpNorm<Eigen::Infinity>() > 1e-12)
    throw InputError("fiber_inner: vectors sit over different base points");
  Eigen::MatrixXd g;
  spec.metric_at(u.base.data(), g);
  return u.tangent.transpose() * g * v.tangent + u.scalar * v.scalar / c;
}

Eigen::MatrixXd fiber_metric_adapted(int n, double c) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n + 1, n + 1);
  h(n, n) = 1.0 / c;
  return h;
}

FiberVector rolling_derivative(const ManifoldSpec& spec, double c,
                               const std::vector<Expr>& X_field, const Expr& r_field,
                               const Eigen::VectorXd& Y, const Eigen::VectorXd& x,
                               double step) {
  require_curvature_sign(c);
  spec.require_in_domain(x);
  int n = spec.dim();

  std::vector<Prog> xp;
  for (const Expr& e : X_field) xp.push_back(compile_expr(e, spec.vars()));
  Prog rp = compile_expr(r_field, spec.vars());

  Eigen::VectorXd Xx(n);
  for (int i = 0; i < n; ++i) Xx(i) = xp[static_cast<std::size_t>(i)].eval(x.data(), n);
  double r = rp.eval(x.data(), n);

  // directional derivatives of X's components and of r along Y
  Eigen::VectorXd dX = Eigen::VectorXd::Zero(n);
  double dr = 0.0;
  Eigen::VectorXd pt = x;
  for (int i = 0; i < n; ++i) {
    if (Y(i) == 0.0) continue;
    double h = step * std::max(1.0, std::abs(x(i)));
    pt(i) = x(i) + h;
    for (int k = 0; k < n; ++k)
      dX(k) += Y(i) * xp[static_cast<std::size_t>(k)].eval(pt.data(), n) / (2.0 * h);
    dr += Y(i) * rp.eval(pt.data(), n) / (2.0 * h);
    pt(i) = x(i) - h;
    for (int k = 0; k < n; ++k)
      dX(k) -= Y(i) * xp[static_cast<std::size_t>(k)].eval(pt.data(), n) / (2.0 * h);
    dr -= Y(i) * rp.eval(pt.data(), n) / (2.0 * h);
    pt(i) = x(i);
  }

  auto Gamma = christoffel(spec, x, step);
  Eigen::MatrixXd g;
  spec.metric_at(x.data(), g);

  FiberVector out;
  out.base = x;
  out.tangent = dX + r * Y;
  for (int k = 0; k < n; ++k)
    out.tangent(k) += Y.transpose() * Gamma[static_cast<std::size_t>(k)] * Xx;
  out.scalar = dr - c * (Xx.transpose() * g * Y)(0);
  return out;
}

// ---------------------------------------------------------------------------
// transport

namespace {

Eigen::MatrixXd adapted_change(const ManifoldSpec& spec, const Eigen::VectorXd& x,
                               bool inverse) {
  int n = spec.dim();
  Eigen::MatrixXd F = orthonormal_frame(spec, x);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n + 1, n + 1);
  if (inverse)
    B.topLeftCorner(n, n) = F.inverse();
  else
    B.topLeftCorner(n, n) = F;
  B(n, n) = 1.0;
  return B;
}

}  // namespace

TransportOperator rolling_transport(const ManifoldSpec& spec, double c,
                                    const CurvePath& curve, int steps,
                                    const std::vector<double>* checkpoint_fracs,
                                    std::vector<RollingCheckpoint>* checkpoints) {
  require_curvature_sign(c);
  int n = spec.dim();
  Eigen::MatrixXd g;
  std::vector<Eigen::MatrixXd> Gamma;

  auto coeff = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                   Eigen::MatrixXd& A) {
    spec.require_in_domain(x);
    Gamma = christoffel(spec, x);
    spec.metric_at(x.data(), g);
    A.resize(n + 1, n + 1);
    for (int k = 0; k < n; ++k)
      A.row(k).head(n) = -(v.transpose() * Gamma[static_cast<std::size_t>(k)]);
    A.col(n).head(n) = -v;
    A.row(n).head(n) = c * (g * v).transpose();
    A(n, n) = 0.0;
  };

  std::vector<TransportCheckpoint> raw_cps;
  Eigen::MatrixXd Y = integrate_linear_ode(curve, steps, n + 1, coeff, checkpoint_fracs,
                                           checkpoints ? &raw_cps : nullptr);

  TransportOperator op;
  op.c = c;
  op.start = curve.start();
  op.end = curve.end();
  op.coord_matrix = Y;
  op.steps_used = steps > 0 ? steps : curve.steps_per_segment();

  Eigen::MatrixXd to_start = adapted_change(spec, op.start, false);
  op.matrix = adapted_change(spec, op.end, true) * Y * to_start;

  if (checkpoints) {
    for (const auto& cp : raw_cps)
      checkpoints->push_back({cp.frac, cp.x,
                              adapted_change(spec, cp.x, true) * cp.state * to_start});
  }
  return op;
}

// ---------------------------------------------------------------------------
// curvature

namespace {

// Connection forms of the rolling derivative: the non-derivative part of
// nabla^R along e_k acting on coordinate fiber components,
//   B_k = [ Gamma^a_{kb}   e_k ]
//         [ -c g_{kb}       0  ]
std::vector<Eigen::MatrixXd> connection_forms(const ManifoldSpec& spec, double c,
                                              const Eigen::VectorXd& x) {
  int n = spec.dim();
  auto Gamma = christoffel(spec, x);
  Eigen::MatrixXd g;
  spec.metric_at(x.data(), g);
  std::vector<Eigen::MatrixXd> B(static_cast<std::size_t>(n),
                                 Eigen::MatrixXd::Zero(n + 1, n + 1));
  for (int k = 0; k < n; ++k) {
    auto& Bk = B[static_cast<std::size_t>(k)];
    for (int a = 0; a < n; ++a)
      Bk.row(a).head(n) = Gamma[static_cast<std::size_t>(a)].row(k);
    Bk(k, n) = 1.0;
    Bk.row(n).head(n) = -c * g.row(k);
  }
  return B;
}

}  // namespace

std::vector<Eigen::MatrixXd> rolling_curvature_planes(const ManifoldSpec& spec, double c,
                                                      const Eigen::VectorXd& x,
                                                      double outer_step) {
  require_curvature_sign(c);
  spec.require_in_domain(x);
  int n = spec.dim();

  auto B = connection_forms(spec, c, x);

  // dB[i][j] = d_i B_j via the five-point stencil
  std::vector<std::vector<Eigen::MatrixXd>> dB(static_cast<std::size_t>(n));
  Eigen::VectorXd xp = x;
  for (int i = 0; i < n; ++i) {
    double h = outer_step * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + h;
    auto Bp = connection_forms(spec, c, xp);
    xp(i) = x(i) - h;
    auto Bm = connection_forms(spec, c, xp);
    xp(i) = x(i) + 2 * h;
    auto Bp2 = connection_forms(spec, c, xp);
    xp(i) = x(i) - 2 * h;
    auto Bm2 = connection_forms(spec, c, xp);
    xp(i) = x(i);
    std::vector<Eigen::MatrixXd> d(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
      d[static_cast<std::size_t>(j)] =
          (8.0 * (Bp[static_cast<std::size_t>(j)] - Bm[static_cast<std::size_t>(j)]) -
           (Bp2[static_cast<std::size_t>(j)] - Bm2[static_cast<std::size_t>(j)])) /
          (12.0 * h);
    dB[static_cast<std::size_t>(i)] = std::move(d);
  }

  Eigen::MatrixXd to_adapted = adapted_change(spec, x, true);
  Eigen::MatrixXd from_adapted = adapted_change(spec, x, false);

  std::vector<Eigen::MatrixXd> planes;
  planes.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Eigen::MatrixXd F =
          dB[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
          dB[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] +
          B[static_cast<std::size_t>(i)] * B[static_cast<std::size_t>(j)] -
          B[static_cast<std::size_t>(j)] * B[static_cast<std::size_t>(i)];
      planes.push_back(to_adapted * F * from_adapted);
    }
  return planes;
}

Eigen::MatrixXd rolling_curvature(const ManifoldSpec& spec, double c,
                                  const Eigen::VectorXd& x, const Eigen::VectorXd& X,
                                  const Eigen::VectorXd& Y, double outer_step) {
  int n = spec.dim();
  auto planes = rolling_curvature_planes(spec, c, x, outer_step);
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n + 1, n + 1);
  int p = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++p)
      F += (X(i) * Y(j) - X(j) * Y(i)) * planes[static_cast<std::size_t>(p)];
  return F;
}

// ---------------------------------------------------------------------------
// cone

ManifoldSpec cone_spec(const ManifoldSpec& base, Interval s_range) {
  return make_cone(base, s_range);
}

Eigen::MatrixXd cone_fiber_isomorphism(int n, double s) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n + 1, n + 1) * s;
  M(n, n) = 1.0;
  return M;
}

Eigen::VectorXd cone_covariant(const ManifoldSpec& base, const std::vector<Expr>& Y_field,
                               const Expr& b_field, const Eigen::VectorXd& X, bool along_s,
                               const Eigen::VectorXd& x, double s, bool generic) {
  if (!(s > 0.0)) throw DomainError("cone radial coordinate must be positive");
  int n = base.dim();

  if (generic) {
    // lift the base fields to the cone chart (independent of s) and use the
    // chart-level covariant derivative
    ManifoldSpec cone = cone_spec(base, Interval{s * 0.5, s * 2.0});
    std::vector<Expr> W;
    W.reserve(static_cast<std::size_t>(n + 1));
    for (const Expr& e : Y_field) W.push_back(e);
    W.push_back(b_field);
    std::vector<Expr> V(static_cast<std::size_t>(n + 1), Expr::number(0.0));
    if (along_s) {
      V[static_cast<std::size_t>(n)] = Expr::number(1.0);
    } else {
      for (int i = 0; i < n; ++i) V[static_cast<std::size_t>(i)] = Expr::number(X(i));
    }
    Eigen::VectorXd xs(n + 1);
    xs.head(n) = x;
    xs(n) = s;
    return covariant_derivative_field(cone, V, W, xs);
  }

  std::vector<Prog> yp;
  for (const Expr& e : Y_field) yp.push_back(compile_expr(e, base.vars()));
  Prog bp = compile_expr(b_field, base.vars());
  Eigen::VectorXd Yx(n);
  for (int i = 0; i < n; ++i) Yx(i) = yp[static_cast<std::size_t>(i)].eval(x.data(), n);
  double bx = bp.eval(x.data(), n);

  Eigen::VectorXd out = Eigen::VectorXd::Zero(n + 1);
  if (along_s) {
    out.head(n) = Yx / s;  // radial rule: (Y + b d/ds) -> Y / s
    return out;
  }

  // tangent rule: nabla_X Y + (b/s) X + (X(b) - s g(X,Y)) d/ds
  std::vector<Expr> Xexpr(static_cast<std::size_t>(n), Expr::number(0.0));
  for (int i = 0; i < n; ++i) Xexpr[static_cast<std::size_t>(i)] = Expr::number(X(i));
  out.head(n) = covariant_derivative_field(base, Xexpr, Y_field, x) + (bx / s) * X;

  double Xb = 0.0;
  Eigen::VectorXd pt = x;
  for (int i = 0; i < n; ++i) {
    if (X(i) == 0.0) continue;
    double h = 1e-5 * std::max(1.0, std::abs(x(i)));
    pt(i) = x(i) + h;
    Xb += X(i) * bp.eval(pt.data(), n) / (2.0 * h);
    pt(i) = x(i) - h;
    Xb -= X(i) * bp.eval(pt.data(), n) / (2.0 * h);
    pt(i) = x(i);
  }
  Eigen::MatrixXd g;
  base.metric_at(x.data(), g);
  out(n) = Xb - s * (X.transpose() * g * Yx)(0);
  return out;
}

CurvePath project_cone_curve(const CurvePath& cone_curve, int base_dim) {
  std::vector<Segment> segs;
  for (const Segment& s : cone_curve.segments())
    segs.push_back(s.head_components(base_dim));
  // projections of closed cone loops close as well
  return CurvePath(std::move(segs), cone_curve.steps_per_segment(), cone_curve.is_loop());
}

ConeIsomorphismReport verify_cone_isomorphism(const ManifoldSpec& base,
                                              const CurvePath& cone_loop, double s0,
                                              int steps) {
  int n = base.dim();
  if (!cone_loop.is_loop()) throw InputError("cone isomorphism check needs a loop");
  Eigen::VectorXd start = cone_loop.start();
  if (std::abs(start(n) - s0) > 1e-9)
    throw InputError("cone loop must start at radial coordinate s0");

  ManifoldSpec cone = cone_spec(base, Interval{std::min(0.25, s0 * 0.5),
                                               std::max(4.0, s0 * 2.0)});
  Eigen::MatrixXd cone_P = lc_transport_matrix(cone, cone_loop, steps);

  CurvePath gamma = project_cone_curve(cone_loop, n);
  TransportOperator roll = rolling_transport(base, 1.0, gamma, steps);

  Eigen::MatrixXd I = cone_fiber_isomorphism(n, s0);
  Eigen::MatrixXd lhs = I * cone_P * I.inverse();

  Eigen::MatrixXd diff = lhs - roll.coord_matrix;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(diff);

  ConeIsomorphismReport rep;
  rep.residual = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  rep.s0 = s0;
  rep.steps_used = steps > 0 ? steps : cone_loop.steps_per_segment();
  return rep;
}

}  // namespace rollhol
