#include "rollhol/geometry.hpp"

#include <cmath>

namespace rollhol {

namespace {

double rel_step(double base, double xi) { return base * std::max(1.0, std::abs(xi)); }

// metric first derivatives d_l g at x; order 2 or 4 central stencils
void metric_derivatives(const ManifoldSpec& spec, const Eigen::VectorXd& x, double step,
                        int order, std::vector<Eigen::MatrixXd>& dg) {
  int n = spec.dim();
  dg.assign(static_cast<std::size_t>(n), Eigen::MatrixXd());
  Eigen::VectorXd xp = x;
  Eigen::MatrixXd gp, gm, gp2, gm2;
  for (int l = 0; l < n; ++l) {
    double h = rel_step(step, x(l));
    xp(l) = x(l) + h;
    spec.metric_at(xp.data(), gp);
    xp(l) = x(l) - h;
    spec.metric_at(xp.data(), gm);
    if (order >= 4) {
      xp(l) = x(l) + 2 * h;
      spec.metric_at(xp.data(), gp2);
      xp(l) = x(l) - 2 * h;
      spec.metric_at(xp.data(), gm2);
      dg[static_cast<std::size_t>(l)] = (8.0 * (gp - gm) - (gp2 - gm2)) / (12.0 * h);
    } else {
      dg[static_cast<std::size_t>(l)] = (gp - gm) / (2.0 * h);
    }
    xp(l) = x(l);
  }
}

std::vector<Eigen::MatrixXd> christoffel_impl(const ManifoldSpec& spec,
                                              const Eigen::VectorXd& x, double step,
                                              int order) {
  int n = spec.dim();
  Eigen::MatrixXd g;
  spec.metric_at(x.data(), g);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericError("metric is near-singular at the requested point");
  Eigen::MatrixXd ginv = ldlt.solve(Eigen::MatrixXd::Identity(n, n));

  std::vector<Eigen::MatrixXd> dg;
  metric_derivatives(spec, x, step, order, dg);

  std::vector<Eigen::MatrixXd> Gamma(static_cast<std::size_t>(n),
                                     Eigen::MatrixXd::Zero(n, n));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double sum = 0.0;
        for (int l = 0; l < n; ++l)
          sum += ginv(k, l) * (dg[static_cast<std::size_t>(i)](j, l) +
                               dg[static_cast<std::size_t>(j)](i, l) -
                               dg[static_cast<std::size_t>(l)](i, j));
        double v = 0.5 * sum;
        Gamma[static_cast<std::size_t>(k)](i, j) = v;
        Gamma[static_cast<std::size_t>(k)](j, i) = v;
      }
  return Gamma;
}

// Gamma contracted with a direction: (M)^k_j = Gamma^k_ij v^i
Eigen::MatrixXd contract_gamma(const std::vector<Eigen::MatrixXd>& Gamma,
                               const Eigen::VectorXd& v) {
  int n = static_cast<int>(v.size());
  Eigen::MatrixXd M(n, n);
  for (int k = 0; k < n; ++k)
    M.row(k) = v.transpose() * Gamma[static_cast<std::size_t>(k)];
  return M;
}

}  // namespace

Eigen::MatrixXd eval_metric(const ManifoldSpec& spec, const Eigen::VectorXd& x) {
  spec.require_in_domain(x);
  Eigen::MatrixXd g;
  spec.metric_at(x.data(), g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw NumericError("metric of '" + spec.name() + "' is not positive definite at the point");
  return g;
}

std::vector<Eigen::MatrixXd> christoffel(const ManifoldSpec& spec,
                                         const Eigen::VectorXd& x, double step,
                                         int order) {
  return christoffel_impl(spec, x, step, order);
}

Eigen::VectorXd covariant_derivative_field(const ManifoldSpec& spec,
                                           const std::vector<Expr>& V,
                                           const std::vector<Expr>& W,
                                           const Eigen::VectorXd& x, double step) {
  int n = spec.dim();
  std::vector<Prog> vp, wp;
  for (const Expr& e : V) vp.push_back(compile_expr(e, spec.vars()));
  for (const Expr& e : W) wp.push_back(compile_expr(e, spec.vars()));

  Eigen::VectorXd Yx(n), Wx(n);
  for (int i = 0; i < n; ++i) Yx(i) = vp[static_cast<std::size_t>(i)].eval(x.data(), n);
  for (int i = 0; i < n; ++i) Wx(i) = wp[static_cast<std::size_t>(i)].eval(x.data(), n);

  // directional derivative of W's components along Yx
  Eigen::VectorXd dW = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd xp = x;
  for (int i = 0; i < n; ++i) {
    if (Yx(i) == 0.0) continue;
    double h = rel_step(step, x(i));
    xp(i) = x(i) + h;
    for (int k = 0; k < n; ++k)
      dW(k) += Yx(i) * wp[static_cast<std::size_t>(k)].eval(xp.data(), n) / (2.0 * h);
    xp(i) = x(i) - h;
    for (int k = 0; k < n; ++k)
      dW(k) -= Yx(i) * wp[static_cast<std::size_t>(k)].eval(xp.data(), n) / (2.0 * h);
    xp(i) = x(i);
  }

  auto Gamma = christoffel(spec, x, step);
  Eigen::VectorXd out = dW;
  for (int k = 0; k < n; ++k)
    out(k) += Yx.transpose() * Gamma[static_cast<std::size_t>(k)] * Wx;
  return out;
}

Eigen::VectorXd covariant_derivative(const ManifoldSpec& spec, const Eigen::VectorXd& Y,
                                     const VectorField& W, const Eigen::VectorXd& x,
                                     double fd_step) {
  int n = spec.dim();
  Eigen::VectorXd dW = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd xp = x;
  for (int i = 0; i < n; ++i) {
    if (Y(i) == 0.0) continue;
    double h = rel_step(fd_step, x(i));
    xp(i) = x(i) + h;
    Eigen::VectorXd wp = W(xp);
    xp(i) = x(i) - h;
    Eigen::VectorXd wm = W(xp);
    xp(i) = x(i);
    dW += Y(i) * (wp - wm) / (2.0 * h);
  }
  auto Gamma = christoffel(spec, x);
  Eigen::VectorXd Wx = W(x);
  for (int k = 0; k < n; ++k)
    dW(k) += Y.transpose() * Gamma[static_cast<std::size_t>(k)] * Wx;
  return dW;
}

// ---------------------------------------------------------------------------
// transport

Eigen::MatrixXd integrate_linear_ode(
    const CurvePath& curve, int steps_per_segment, int state_dim,
    const std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&,
                             Eigen::MatrixXd&)>& coeff,
    const std::vector<double>* checkpoint_fracs,
    std::vector<TransportCheckpoint>* checkpoints) {
  int steps = steps_per_segment > 0 ? steps_per_segment : curve.steps_per_segment();
  int nseg = static_cast<int>(curve.segments().size());

  Eigen::MatrixXd Y = Eigen::MatrixXd::Identity(state_dim, state_dim);
  Eigen::MatrixXd A0(state_dim, state_dim), Am(state_dim, state_dim),
      A1(state_dim, state_dim);
  Eigen::MatrixXd k1, k2, k3, k4;

  std::size_t next_cp = 0;
  auto record = [&](double global_frac, const Eigen::VectorXd& x) {
    if (!checkpoint_fracs || !checkpoints) return;
    while (next_cp < checkpoint_fracs->size() &&
           global_frac >= (*checkpoint_fracs)[next_cp] - 1e-12) {
      checkpoints->push_back({global_frac, x, Y});
      ++next_cp;
    }
  };

  for (int si = 0; si < nseg; ++si) {
    const Segment& seg = curve.segments()[static_cast<std::size_t>(si)];
    std::vector<double> cuts{0.0};
    for (double b : seg.breakpoints()) cuts.push_back(b);
    cuts.push_back(1.0);

    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      double u0 = cuts[c], u1 = cuts[c + 1];
      int m = std::max(4, static_cast<int>(std::lround(steps * (u1 - u0))));
      double h = (u1 - u0) / m;
      // velocity sampled strictly inside the span: at a polyline corner the
      // right endpoint would otherwise pick up the next leg's velocity
      double vcap = u1 - (u1 - u0) * 1e-12;
      auto vel = [&](double t) { return seg.velocity(std::min(t, vcap)); };
      for (int s = 0; s < m; ++s) {
        double t0 = u0 + s * h, tm = t0 + 0.5 * h, t1 = t0 + h;
        coeff(seg.at(t0), vel(t0), A0);
        coeff(seg.at(tm), vel(tm), Am);
        coeff(seg.at(t1), vel(t1), A1);
        k1 = A0 * Y;
        k2 = Am * (Y + (0.5 * h) * k1);
        k3 = Am * (Y + (0.5 * h) * k2);
        k4 = A1 * (Y + h * k3);
        Y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        record((si + t1) / nseg, seg.at(t1));
      }
    }
  }
  return Y;
}

Eigen::MatrixXd lc_transport_matrix(const ManifoldSpec& spec, const CurvePath& curve,
                                    int steps) {
  int n = spec.dim();
  auto coeff = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                   Eigen::MatrixXd& A) {
    spec.require_in_domain(x);
    A = -contract_gamma(christoffel(spec, x), v);
  };
  return integrate_linear_ode(curve, steps, n, coeff);
}

Eigen::VectorXd levi_civita_transport(const ManifoldSpec& spec, const CurvePath& curve,
                                      const Eigen::VectorXd& v0, int steps) {
  return lc_transport_matrix(spec, curve, steps) * v0;
}

// ---------------------------------------------------------------------------
// curvature

std::vector<Eigen::MatrixXd> riemann_coordinate_planes(const ManifoldSpec& spec,
                                                       const Eigen::VectorXd& x,
                                                       double outer_step) {
  int n = spec.dim();
  auto Gamma = christoffel(spec, x);

  // dGamma[i] = d_i Gamma by a five-point stencil on whole Christoffel tables
  std::vector<std::vector<Eigen::MatrixXd>> dGamma(static_cast<std::size_t>(n));
  Eigen::VectorXd xp = x;
  for (int i = 0; i < n; ++i) {
    double h = rel_step(outer_step, x(i));
    xp(i) = x(i) + h;
    auto gp = christoffel(spec, xp);
    xp(i) = x(i) - h;
    auto gm = christoffel(spec, xp);
    xp(i) = x(i) + 2 * h;
    auto gp2 = christoffel(spec, xp);
    xp(i) = x(i) - 2 * h;
    auto gm2 = christoffel(spec, xp);
    xp(i) = x(i);
    std::vector<Eigen::MatrixXd> d(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
      d[static_cast<std::size_t>(k)] =
          (8.0 * (gp[static_cast<std::size_t>(k)] - gm[static_cast<std::size_t>(k)]) -
           (gp2[static_cast<std::size_t>(k)] - gm2[static_cast<std::size_t>(k)])) /
          (12.0 * h);
    dGamma[static_cast<std::size_t>(i)] = std::move(d);
  }

  // R^l_kij = d_i Gamma^l_jk - d_j Gamma^l_ik + Gamma^l_im Gamma^m_jk
  //                                           - Gamma^l_jm Gamma^m_ik
  std::vector<Eigen::MatrixXd> planes;
  planes.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Eigen::MatrixXd R(n, n);
      for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k) {
          double v = dGamma[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)](j, k) -
                     dGamma[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)](i, k);
          for (int m = 0; m < n; ++m)
            v += Gamma[static_cast<std::size_t>(l)](i, m) *
                     Gamma[static_cast<std::size_t>(m)](j, k) -
                 Gamma[static_cast<std::size_t>(l)](j, m) *
                     Gamma[static_cast<std::size_t>(m)](i, k);
          R(l, k) = v;
        }
      planes.push_back(std::move(R));
    }
  return planes;
}

Eigen::MatrixXd riemann_endomorphism(const ManifoldSpec& spec, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                     double outer_step) {
  int n = spec.dim();
  auto planes = riemann_coordinate_planes(spec, x, outer_step);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
  int p = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++p)
      R += (X(i) * Y(j) - X(j) * Y(i)) * planes[static_cast<std::size_t>(p)];
  return R;
}

Eigen::MatrixXd ricci(const ManifoldSpec& spec, const Eigen::VectorXd& x,
                      const Eigen::MatrixXd& frame, double outer_step) {
  int n = spec.dim();
  Eigen::MatrixXd g;
  spec.metric_at(x.data(), g);
  Eigen::MatrixXd gram = frame.transpose() * g * frame;
  if ((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-8)
    throw InputError("ricci: supplied frame is not g-orthonormal");

  auto planes = riemann_coordinate_planes(spec, x, outer_step);
  auto plane = [&](int i, int j) -> Eigen::MatrixXd {
    if (i == j) return Eigen::MatrixXd::Zero(n, n);
    int a = std::min(i, j), b = std::max(i, j);
    int p = a * n - a * (a + 1) / 2 + (b - a - 1);
    Eigen::MatrixXd R = planes[static_cast<std::size_t>(p)];
    return (i < j) ? R : Eigen::MatrixXd(-R);
  };

  // Ric(X, Y) = sum_l [R(e_l, X) Y]^l
  Eigen::MatrixXd ric = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double sum = 0.0;
      for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i) {
          if (frame(i, a) == 0.0) continue;
          sum += frame(i, a) * (plane(l, i) * frame.col(b))(l);
        }
      ric(a, b) = sum;
    }
  return ric;
}

// ---------------------------------------------------------------------------
// geodesics and frames

GeodesicResult geodesic(const ManifoldSpec& spec, const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& v0, double T, int steps) {
  spec.require_in_domain(x0);
  int n = spec.dim();
  Eigen::VectorXd x = x0, v = v0;
  double h = T / steps;

  auto acc = [&](const Eigen::VectorXd& xx, const Eigen::VectorXd& vv) -> Eigen::VectorXd {
    spec.require_in_domain(xx);
    auto Gamma = christoffel(spec, xx);
    Eigen::VectorXd a(n);
    for (int k = 0; k < n; ++k)
      a(k) = -vv.transpose() * Gamma[static_cast<std::size_t>(k)] * vv;
    return a;
  };

  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXd k1x = v, k1v = acc(x, v);
    Eigen::VectorXd k2x = v + 0.5 * h * k1v, k2v = acc(x + 0.5 * h * k1x, v + 0.5 * h * k1v);
    Eigen::VectorXd k3x = v + 0.5 * h * k2v, k3v = acc(x + 0.5 * h * k2x, v + 0.5 * h * k2v);
    Eigen::VectorXd k4x = v + h * k3v, k4v = acc(x + h * k3x, v + h * k3v);
    x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }
  return {x, v};
}

Eigen::MatrixXd orthonormal_frame(const ManifoldSpec& spec, const Eigen::VectorXd& x) {
  int n = spec.dim();
  Eigen::MatrixXd g;
  spec.metric_at(x.data(), g);
  Eigen::MatrixXd F = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd e = F.col(i);
    for (int j = 0; j < i; ++j) e -= (F.col(j).transpose() * g * e)(0) * F.col(j);
    double norm = std::sqrt((e.transpose() * g * e)(0));
    if (!(norm > 0.0)) throw NumericError("orthonormal_frame: metric not positive definite");
    F.col(i) = e / norm;
  }
  return F;
}

}  // namespace rollhol
