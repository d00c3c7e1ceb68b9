#include "rollhol/rolling.hpp"

#include <cmath>

#include "rollhol/geometry.hpp"

namespace rollhol {

double rolling_state_defect(const RollingState& q) {
  int n = static_cast<int>(q.A_frame.cols());
  Eigen::MatrixXd M(q.A_frame.rows(), n + 1);
  M.leftCols(n) = q.A_frame;
  M.col(n) = q.xhat;
  return (M.transpose() * M - Eigen::MatrixXd::Identity(n + 1, n + 1))
      .cwiseAbs()
      .maxCoeff();
}

namespace {

struct DevState {
  Eigen::VectorXd xhat;  // n+1
  Eigen::MatrixXd W;     // (n+1) x n, images of the M-parallel frame
  Eigen::MatrixXd V;     // n x n, M-parallel frame in chart coordinates
};

DevState axpy(const DevState& s, double a, const DevState& d) {
  return {s.xhat + a * d.xhat, s.W + a * d.W, s.V + a * d.V};
}

}  // namespace

RollingTrajectory develop(const ManifoldSpec& specM, const CurvePath& curve,
                          const RollingState& q0, int steps) {
  int n = specM.dim();
  if (q0.xhat.size() != n + 1 || q0.A_frame.rows() != n + 1 || q0.A_frame.cols() != n)
    throw InputError("develop: contact state has wrong dimensions");
  if ((curve.start() - q0.x).lpNorm<Eigen::Infinity>() > 1e-9)
    throw InputError("develop: initial state does not sit over the curve start");
  if (rolling_state_defect(q0) > 1e-6)
    throw InputError("develop: initial state violates the contact invariants");

  int steps_per_segment = steps > 0 ? steps : curve.steps_per_segment();

  DevState S;
  S.xhat = q0.xhat;
  S.W = q0.A_frame;  // V(0) columns are the base orthonormal frame itself
  S.V = orthonormal_frame(specM, q0.x);

  RollingTrajectory traj;
  auto record = [&](double tglob, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                    int span) {
    RollingState st;
    st.x = x;
    st.xhat = S.xhat;
    Eigen::MatrixXd Fr = orthonormal_frame(specM, x);
    st.A_frame = S.W * S.V.partialPivLu().solve(Fr);
    traj.t.push_back(tglob);
    traj.states.push_back(std::move(st));
    traj.xdot.push_back(v);
    traj.span_id.push_back(span);
  };

  auto derivative = [&](const Segment& seg, double t, double vcap,
                        const DevState& s) -> DevState {
    Eigen::VectorXd x = seg.at(t);
    specM.require_in_domain(x);
    Eigen::VectorXd xdot = seg.velocity(std::min(t, vcap));
    auto Gamma = christoffel(specM, x);

    DevState d;
    Eigen::VectorXd c = s.V.partialPivLu().solve(xdot);
    d.xhat = s.W * c;  // no-slip
    d.V.resize(n, n);
    for (int k = 0; k < n; ++k)
      d.V.row(k) = -(xdot.transpose() * Gamma[static_cast<std::size_t>(k)]) * s.V;
    d.W.resize(n + 1, n);
    for (int i = 0; i < n; ++i)
      d.W.col(i) = -(s.W.col(i).dot(d.xhat)) * s.xhat;  // sphere-parallel frames
    return d;
  };

  int nseg = static_cast<int>(curve.segments().size());
  int span = 0;
  for (int si = 0; si < nseg; ++si) {
    const Segment& seg = curve.segments()[static_cast<std::size_t>(si)];
    std::vector<double> cuts{0.0};
    for (double b : seg.breakpoints()) cuts.push_back(b);
    cuts.push_back(1.0);

    for (std::size_t c = 0; c + 1 < cuts.size(); ++c, ++span) {
      double u0 = cuts[c], u1 = cuts[c + 1];
      int m = std::max(4, static_cast<int>(std::lround(steps_per_segment * (u1 - u0))));
      double h = (u1 - u0) / m;
      // keep velocity samples strictly inside the span (polyline corners)
      double vcap = u1 - (u1 - u0) * 1e-12;
      traj.span_h.push_back(h / nseg);
      if (si == 0 && c == 0) record((si + u0) / nseg, seg.at(u0), seg.velocity(u0), span);

      for (int s = 0; s < m; ++s) {
        double t0 = u0 + s * h;
        DevState k1 = derivative(seg, t0, vcap, S);
        DevState k2 = derivative(seg, t0 + 0.5 * h, vcap, axpy(S, 0.5 * h, k1));
        DevState k3 = derivative(seg, t0 + 0.5 * h, vcap, axpy(S, 0.5 * h, k2));
        DevState k4 = derivative(seg, t0 + h, vcap, axpy(S, h, k3));
        S.xhat += (h / 6.0) * (k1.xhat + 2.0 * k2.xhat + 2.0 * k3.xhat + k4.xhat);
        S.W += (h / 6.0) * (k1.W + 2.0 * k2.W + 2.0 * k3.W + k4.W);
        S.V += (h / 6.0) * (k1.V + 2.0 * k2.V + 2.0 * k3.V + k4.V);

        // drift control on the sphere-side data
        Eigen::MatrixXd M(n + 1, n + 1);
        M.leftCols(n) = S.W;
        M.col(n) = S.xhat;
        double defect =
            (M.transpose() * M - Eigen::MatrixXd::Identity(n + 1, n + 1))
                .cwiseAbs()
                .maxCoeff();
        traj.max_invariant_defect = std::max(traj.max_invariant_defect, defect);
        if (defect > 1e-9) {
          S.xhat.normalize();
          for (int i = 0; i < n; ++i) {
            Eigen::VectorXd w = S.W.col(i);
            w -= w.dot(S.xhat) * S.xhat;
            for (int j = 0; j < i; ++j) w -= w.dot(S.W.col(j)) * S.W.col(j);
            S.W.col(i) = w.normalized();
          }
          ++traj.reorthonormalizations;
        }

        double t1 = t0 + h;
        record((si + t1) / nseg, seg.at(t1), seg.velocity(t1), span);
      }
    }
  }
  return traj;
}

// ---------------------------------------------------------------------------
// residual measurement (pure function of the stored grid)

namespace {

// five-point interior first derivative on a uniform grid
Eigen::VectorXd stencil4(const std::vector<Eigen::VectorXd>& f, std::size_t k, double h) {
  return (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h);
}

}  // namespace

RollingResiduals rolling_residuals(const ManifoldSpec& specM,
                                   const RollingTrajectory& traj) {
  RollingResiduals out;
  int n = specM.dim();
  std::size_t N = traj.states.size();

  std::vector<Eigen::VectorXd> xhat_series(N), w_series(N), e1_series(N);
  for (std::size_t k = 0; k < N; ++k) {
    const RollingState& st = traj.states[k];
    out.state_defect = std::max(out.state_defect, rolling_state_defect(st));
    xhat_series[k] = st.xhat;
    w_series[k] = st.A_frame.col(0);  // image of the first frame field
    e1_series[k] = orthonormal_frame(specM, st.x).col(0);
  }

  for (std::size_t k = 2; k + 2 < N; ++k) {
    int span = traj.span_id[k];
    if (traj.span_id[k - 2] != span || traj.span_id[k + 2] != span) continue;
    double h = traj.span_h[static_cast<std::size_t>(span)];
    const RollingState& st = traj.states[k];

    Eigen::MatrixXd Fr = orthonormal_frame(specM, st.x);
    auto apply_A = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      return st.A_frame * Fr.partialPivLu().solve(v);
    };

    // (NS): d/dt xhat = A xdot
    Eigen::VectorXd xhat_dot = stencil4(xhat_series, k, h);
    out.ns = std::max(out.ns, (xhat_dot - apply_A(traj.xdot[k])).norm());

    // (NT) with the test field V = E_1(x(t)):
    //   sphere side: tangential part of d/dt (A V)
    //   base side:   A (d/dt V + Gamma(xdot) V)
    Eigen::VectorXd w_dot = stencil4(w_series, k, h);
    Eigen::VectorXd lhs = w_dot - w_dot.dot(st.xhat) * st.xhat;

    auto Gamma = christoffel(specM, st.x);
    Eigen::VectorXd v_cov = stencil4(e1_series, k, h);
    for (int kk = 0; kk < n; ++kk)
      v_cov(kk) +=
          traj.xdot[k].transpose() * Gamma[static_cast<std::size_t>(kk)] * e1_series[k];
    out.nt = std::max(out.nt, (lhs - apply_A(v_cov)).norm());
  }
  return out;
}

// ---------------------------------------------------------------------------
// cross-check against the rolling connection

double holonomy_crosscheck(const ManifoldSpec& specM, const CurvePath& loop,
                           const RollingState& q0, int steps) {
  if (!loop.is_loop()) throw InputError("holonomy_crosscheck needs a loop");
  int n = specM.dim();

  RollingTrajectory traj = develop(specM, loop, q0, steps);
  const RollingState& q1 = traj.states.back();

  auto config = [&](const RollingState& q) {
    Eigen::MatrixXd Q(n + 1, n + 1);
    Q.leftCols(n) = q.A_frame;
    Q.col(n) = q.xhat;
    return Q;
  };
  // a constant ambient vector w is a parallel section of the rolling
  // connection through the identification, so P = Q1^T Q0
  Eigen::MatrixXd P_kinematic = config(q1).transpose() * config(q0);

  TransportOperator op = rolling_transport(specM, 1.0, loop, steps);
  return (op.matrix - P_kinematic).norm();
}

RollingState sphere_self_contact(const ManifoldSpec& sphere, const Eigen::VectorXd& x) {
  if (sphere.kind() != BuiltinKind::Sphere)
    throw InputError("sphere_self_contact needs a sphere builtin");
  double R = sphere.sphere_radius();
  RollingState q;
  q.x = x;
  q.xhat = sphere_embed(R, x) / R;  // unit sphere target
  Eigen::MatrixXd J = sphere_embed_jacobian(R, x) / R;
  q.A_frame = J * orthonormal_frame(sphere, x) * R;
  return q;
}

RollingState standard_contact(const ManifoldSpec& specM, const Eigen::VectorXd& x) {
  int n = specM.dim();
  RollingState q;
  q.x = x;
  q.xhat = Eigen::VectorXd::Zero(n + 1);
  q.xhat(n) = -1.0;  // south pole
  q.A_frame = Eigen::MatrixXd::Zero(n + 1, n);
  q.A_frame.topLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  return q;
}

}  // namespace rollhol
