#include "rollhol/structures.hpp"

#include <cmath>

#include "rollhol/linalg.hpp"

namespace rollhol {

int epsilon3(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0;
  return ((j - i + 3) % 3 == 1) ? 1 : -1;
}

// ---------------------------------------------------------------------------
// invariant structures

namespace {

// scale a skew K with K^2 = -lambda^2 I to a complex structure
Eigen::MatrixXd unit_complex_scale(const Eigen::MatrixXd& K, const char* what) {
  int N = static_cast<int>(K.rows());
  Eigen::MatrixXd K2 = K * K;
  double lambda2 = -K2.trace() / N;
  if (!(lambda2 > 0.0))
    throw NumericError(std::string(what) + ": generator does not square to a "
                                           "negative multiple of the identity");
  Eigen::MatrixXd J = K / std::sqrt(lambda2);
  if ((J * J + Eigen::MatrixXd::Identity(N, N)).cwiseAbs().maxCoeff() > 1e-6)
    throw NumericError(std::string(what) + ": J^2 + I residual above tolerance "
                                           "(commutant is not of complex type)");
  return J;
}

// deterministic sign: tangent part of J(0,1) gets a positive first
// nonvanishing component; the scalar row breaks exact ties
void fix_sign(Eigen::MatrixXd& J) {
  int N = static_cast<int>(J.rows());
  Eigen::VectorXd Ztan = J.col(N - 1).head(N - 1);
  for (int i = 0; i < N - 1; ++i) {
    if (std::abs(Ztan(i)) > 1e-6) {
      if (Ztan(i) < 0.0) J = -J;
      return;
    }
  }
  for (int i = 0; i < N - 1; ++i) {
    if (std::abs(J(N - 1, i)) > 1e-6) {
      if (J(N - 1, i) < 0.0) J = -J;
      return;
    }
  }
}

double commutation_residual(const Eigen::MatrixXd& J,
                            const std::vector<Eigen::MatrixXd>& basis) {
  double worst = 0.0;
  for (const auto& b : basis)
    worst = std::max(worst, (J * b - b * J).cwiseAbs().maxCoeff());
  return worst;
}

double triple_relation_residual(const std::array<Eigen::MatrixXd, 3>& J) {
  int N = static_cast<int>(J[0].rows());
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(N, N);
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    worst = std::max(worst, (J[static_cast<std::size_t>(i)] *
                                 J[static_cast<std::size_t>(i)] +
                             I).cwiseAbs().maxCoeff());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      int k = 3 - i - j;
      Eigen::MatrixXd want = -epsilon3(i + 1, j + 1, k + 1) *
                             J[static_cast<std::size_t>(k)];
      worst = std::max(worst, (J[static_cast<std::size_t>(i)] *
                                   J[static_cast<std::size_t>(j)] -
                               want).cwiseAbs().maxCoeff());
    }
  return worst;
}

}  // namespace

Eigen::MatrixXd invariant_complex_structure(const HolonomyAlgebra& algebra) {
  int N = static_cast<int>(algebra.base.size()) + 1;
  auto commutant = commutant_skew(algebra.basis, N);
  if (commutant.size() != 1)
    throw NumericError("no invariant structure: commutant dimension is " +
                       std::to_string(commutant.size()) + ", need 1");
  Eigen::MatrixXd J = unit_complex_scale(commutant.front(), "invariant_complex_structure");
  fix_sign(J);
  return J;
}

std::array<Eigen::MatrixXd, 3> invariant_quaternionic_triple(
    const HolonomyAlgebra& algebra, const std::array<Eigen::MatrixXd, 3>* seed) {
  int N = static_cast<int>(algebra.base.size()) + 1;
  if (seed) {
    for (const auto& J : *seed)
      if (commutation_residual(J, algebra.basis) > 1e-6)
        throw NumericError("seed triple does not commute with the holonomy algebra");
    if (triple_relation_residual(*seed) > 1e-6)
      throw NumericError("seed triple violates the quaternion relations");
    return *seed;
  }

  auto commutant = commutant_skew(algebra.basis, N);
  if (commutant.size() != 3)
    throw NumericError("no invariant quaternionic triple: commutant dimension is " +
                       std::to_string(commutant.size()) + ", need 3");

  Eigen::MatrixXd J1 = unit_complex_scale(commutant[0], "invariant_quaternionic_triple");
  fix_sign(J1);

  // anticommuting part of the next generator; fall back to the third
  Eigen::MatrixXd W = 0.5 * (commutant[1] + J1 * commutant[1] * J1);
  if (W.norm() < 1e-8) W = 0.5 * (commutant[2] + J1 * commutant[2] * J1);
  if (W.norm() < 1e-8)
    throw NumericError("invariant_quaternionic_triple: no anticommuting generator");
  Eigen::MatrixXd J2 = unit_complex_scale(W, "invariant_quaternionic_triple");
  fix_sign(J2);
  Eigen::MatrixXd J3 = J2 * J1;

  std::array<Eigen::MatrixXd, 3> triple{J1, J2, J3};
  if (triple_relation_residual(triple) > 1e-6)
    throw NumericError("invariant_quaternionic_triple: quaternion relations "
                       "unachievable at tolerance (UNDETERMINED)");
  return triple;
}

// ---------------------------------------------------------------------------
// parallel extension

ParallelStructure::ParallelStructure(const ManifoldSpec& spec, Eigen::VectorXd base,
                                     Eigen::MatrixXd J0_adapted, int steps)
    : spec_(&spec), base_(std::move(base)), J0_(std::move(J0_adapted)), steps_(steps) {
  spec.require_in_domain(base_);
}

Eigen::MatrixXd ParallelStructure::transport_to(const Eigen::VectorXd& x) const {
  Eigen::VectorXd anchor_x;
  Eigen::MatrixXd anchor_P;
  bool found = false;
  {
    std::lock_guard<std::mutex> lk(mutex_);
    double best_d = 0.1;  // extension radius
    for (const Anchor& a : anchors_) {
      double d = (a.x - x).lpNorm<Eigen::Infinity>();
      if (d < best_d) {
        best_d = d;
        anchor_x = a.x;
        anchor_P = a.P;
        found = true;
      }
    }
    if (found && best_d < 1e-15) return anchor_P;
  }
  if (found) {
    CurvePath leg = CurvePath::line(anchor_x, x, 64);
    return rolling_transport(*spec_, 1.0, leg).matrix * anchor_P;
  }
  CurvePath path = CurvePath::axis_polyline(base_, x, steps_);
  Eigen::MatrixXd P = rolling_transport(*spec_, 1.0, path).matrix;
  std::lock_guard<std::mutex> lk(mutex_);
  anchors_.push_back({x, P});
  return P;
}

ParallelStructure::PointValue ParallelStructure::value_at(
    const Eigen::VectorXd& x) const {
  {
    std::lock_guard<std::mutex> lk(mutex_);
    for (const PointValue& v : values_)
      if ((v.x - x).lpNorm<Eigen::Infinity>() < 1e-15) return v;
  }
  Eigen::MatrixXd P = transport_to(x);
  PointValue v;
  v.x = x;
  v.jr = P * J0_ * P.inverse();
  v.frame = orthonormal_frame(*spec_, x);
  std::lock_guard<std::mutex> lk(mutex_);
  values_.push_back(v);
  return v;
}

Eigen::MatrixXd ParallelStructure::jr_adapted(const Eigen::VectorXd& x) const {
  return value_at(x).jr;
}

Eigen::MatrixXd ParallelStructure::jr_coord(const Eigen::VectorXd& x) const {
  PointValue v = value_at(x);
  int n = spec_->dim();
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n + 1, n + 1);
  B.topLeftCorner(n, n) = v.frame;
  return B * v.jr * B.inverse();
}

Eigen::VectorXd ParallelStructure::Z(const Eigen::VectorXd& x) const {
  PointValue v = value_at(x);
  int n = spec_->dim();
  return v.frame * v.jr.col(n).head(n);
}

Eigen::MatrixXd ParallelStructure::J(const Eigen::VectorXd& x) const {
  PointValue v = value_at(x);
  int n = spec_->dim();
  return v.frame * v.jr.topLeftCorner(n, n) * v.frame.inverse();
}

Eigen::VectorXd ParallelStructure::alpha(const Eigen::VectorXd& x) const {
  PointValue v = value_at(x);
  int n = spec_->dim();
  Eigen::RowVectorXd beta = v.jr.row(n).head(n) * v.frame.inverse();
  return -beta.transpose();
}

double ParallelStructure::scalar_defect(const Eigen::VectorXd& x) const {
  PointValue v = value_at(x);
  int n = spec_->dim();
  return std::abs(v.jr(n, n));
}

double ParallelStructure::path_independence_residual(const Eigen::VectorXd& x) const {
  std::vector<int> reverse_order;
  for (int i = spec_->dim() - 1; i >= 0; --i) reverse_order.push_back(i);
  CurvePath alt = CurvePath::axis_polyline(base_, x, steps_, reverse_order);
  Eigen::MatrixXd P2 = rolling_transport(*spec_, 1.0, alt).matrix;
  Eigen::MatrixXd via_alt = P2 * J0_ * P2.inverse();
  return (jr_adapted(x) - via_alt).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// field extraction

TensorFields extract_sasaki(const ParallelStructure& ps) {
  if (ps.scalar_defect(ps.base()) > 1e-6)
    throw NumericError("extract_sasaki: J^R(0,1) has nonzero scalar component (" +
                       std::to_string(ps.scalar_defect(ps.base())) +
                       "); structure is not of unitary type");
  TensorFields S;
  const ParallelStructure* p = &ps;
  S.Z = [p](const Eigen::VectorXd& x) { return p->Z(x); };
  S.J = [p](const Eigen::VectorXd& x) { return p->J(x); };
  S.alpha = [p](const Eigen::VectorXd& x) { return p->alpha(x); };
  return S;
}

TensorFields fields_from_exprs(const ManifoldSpec& spec, std::vector<Expr> Z,
                               std::vector<std::vector<Expr>> J) {
  int n = spec.dim();
  auto zp = std::make_shared<std::vector<Prog>>();
  for (const Expr& e : Z) zp->push_back(compile_expr(e, spec.vars()));
  auto jp = std::make_shared<std::vector<Prog>>();
  for (const auto& row : J)
    for (const Expr& e : row) jp->push_back(compile_expr(e, spec.vars()));
  if (static_cast<int>(zp->size()) != n ||
      static_cast<int>(jp->size()) != n * n)
    throw InputError("fields_from_exprs: Z needs n components and J an n x n array");

  const ManifoldSpec* sp = &spec;
  TensorFields S;
  S.Z = [zp, n](const Eigen::VectorXd& x) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = (*zp)[static_cast<std::size_t>(i)].eval(x.data(), n);
    return v;
  };
  S.J = [jp, n](const Eigen::VectorXd& x) {
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        M(i, j) = (*jp)[static_cast<std::size_t>(i * n + j)].eval(x.data(), n);
    return M;
  };
  S.alpha = [sp, zp, n](const Eigen::VectorXd& x) {
    Eigen::MatrixXd g;
    sp->metric_at(x.data(), g);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = (*zp)[static_cast<std::size_t>(i)].eval(x.data(), n);
    return Eigen::VectorXd(g * v);
  };
  return S;
}

// ---------------------------------------------------------------------------
// verification

namespace {

Eigen::VectorXd alpha_of(const ManifoldSpec& spec, const TensorFields& S,
                         const Eigen::VectorXd& x) {
  if (S.alpha) return S.alpha(x);
  Eigen::MatrixXd g;
  spec.metric_at(x.data(), g);
  return g * S.Z(x);
}

struct FieldDerivatives {
  Eigen::MatrixXd dZ;              // col i = d_i Z
  std::vector<Eigen::MatrixXd> dJ; // dJ[i] = d_i J
  Eigen::MatrixXd dAlpha;          // col i = d_i alpha
};

FieldDerivatives field_derivatives(const ManifoldSpec& spec, const TensorFields& S,
                                   const Eigen::VectorXd& x, double h) {
  int n = spec.dim();
  FieldDerivatives d;
  d.dZ.resize(n, n);
  d.dAlpha.resize(n, n);
  d.dJ.assign(static_cast<std::size_t>(n), Eigen::MatrixXd());
  Eigen::VectorXd xp = x;
  for (int i = 0; i < n; ++i) {
    double hi = h * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + hi;
    Eigen::VectorXd Zp = S.Z(xp), Ap = alpha_of(spec, S, xp);
    Eigen::MatrixXd Jp = S.J(xp);
    xp(i) = x(i) - hi;
    Eigen::VectorXd Zm = S.Z(xp), Am = alpha_of(spec, S, xp);
    Eigen::MatrixXd Jm = S.J(xp);
    xp(i) = x(i);
    d.dZ.col(i) = (Zp - Zm) / (2.0 * hi);
    d.dAlpha.col(i) = (Ap - Am) / (2.0 * hi);
    d.dJ[static_cast<std::size_t>(i)] = (Jp - Jm) / (2.0 * hi);
  }
  return d;
}

// residuals that depend on the differencing step
struct DiffResiduals {
  double nablaZ_vs_J = 0.0, nablaJ = 0.0, killing = 0.0;
  double dalpha_2omega = 0.0, dalpha_of_Z = 0.0;
};

DiffResiduals diff_residuals(const ManifoldSpec& spec, const TensorFields& S,
                             const Eigen::VectorXd& x, double h) {
  int n = spec.dim();
  Eigen::MatrixXd g;
  spec.metric_at(x.data(), g);
  auto Gamma = christoffel(spec, x);
  Eigen::VectorXd Zx = S.Z(x);
  Eigen::MatrixXd Jx = S.J(x);
  Eigen::VectorXd ax = alpha_of(spec, S, x);
  Eigen::VectorXd gZ = g * Zx;
  Eigen::MatrixXd omega = Jx.transpose() * g;

  FieldDerivatives d = field_derivatives(spec, S, x, h);

  // Gi(k,m) = Gamma^k_{im}
  std::vector<Eigen::MatrixXd> Gi(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd M(n, n);
    for (int k = 0; k < n; ++k)
      for (int m = 0; m < n; ++m) M(k, m) = Gamma[static_cast<std::size_t>(k)](i, m);
    Gi[static_cast<std::size_t>(i)] = std::move(M);
  }

  DiffResiduals r;

  // nabla Z as a matrix: col i = d_i Z + Gi Z
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    A.col(i) = d.dZ.col(i) + Gi[static_cast<std::size_t>(i)] * Zx;
  r.nablaZ_vs_J = (Jx - A).cwiseAbs().maxCoeff();

  Eigen::MatrixXd GA = g * A;
  r.killing = (GA + GA.transpose()).cwiseAbs().maxCoeff();

  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd T = d.dJ[static_cast<std::size_t>(i)] +
                        Gi[static_cast<std::size_t>(i)] * Jx -
                        Jx * Gi[static_cast<std::size_t>(i)];
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        double want = gZ(l) * (k == i ? 1.0 : 0.0) - gZ(i) * (k == l ? 1.0 : 0.0);
        r.nablaJ = std::max(r.nablaJ, std::abs(T(k, l) - want));
      }
  }

  Eigen::MatrixXd dalpha(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) dalpha(i, j) = d.dAlpha(j, i) - d.dAlpha(i, j);
  r.dalpha_2omega = (dalpha - 2.0 * omega).cwiseAbs().maxCoeff();
  r.dalpha_of_Z = (Zx.transpose() * dalpha).cwiseAbs().maxCoeff();
  return r;
}

}  // namespace

double SasakiResiduals::max_identity_residual() const {
  double m = 0.0;
  for (double v : {reeb_unit, alpha_of_Z, J_of_Z, J_squared, compat, nablaZ_vs_J,
                   nablaJ_identity, killing, dalpha_2omega, omega_skew, dalpha_of_Z,
                   curvature_identity})
    m = std::max(m, v);
  return m;
}

SasakiResiduals verify_sasaki(const ManifoldSpec& spec, const TensorFields& S,
                              const std::vector<Eigen::VectorXd>& points,
                              double fd_step, double tolerance) {
  int n = spec.dim();
  SasakiResiduals out;
  double coarse_max = 0.0, fine_max = 0.0;

  for (const Eigen::VectorXd& x : points) {
    Eigen::MatrixXd g;
    spec.metric_at(x.data(), g);
    Eigen::VectorXd Zx = S.Z(x);
    Eigen::MatrixXd Jx = S.J(x);
    Eigen::VectorXd ax = alpha_of(spec, S, x);
    Eigen::VectorXd gZ = g * Zx;
    Eigen::MatrixXd omega = Jx.transpose() * g;
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

    out.reeb_unit = std::max(out.reeb_unit, std::abs(std::sqrt(Zx.dot(gZ)) - 1.0));
    out.alpha_of_Z = std::max(out.alpha_of_Z, std::abs(ax.dot(Zx) - 1.0));
    out.J_of_Z = std::max(out.J_of_Z, (Jx * Zx).cwiseAbs().maxCoeff());
    out.J_squared = std::max(
        out.J_squared,
        (Jx * Jx + I - Zx * ax.transpose()).cwiseAbs().maxCoeff());
    out.compat = std::max(out.compat, (Jx.transpose() * g * Jx - g +
                                       ax * ax.transpose()).cwiseAbs().maxCoeff());
    out.omega_skew =
        std::max(out.omega_skew, (omega + omega.transpose()).cwiseAbs().maxCoeff());

    DiffResiduals coarse = diff_residuals(spec, S, x, fd_step);
    DiffResiduals fine = diff_residuals(spec, S, x, 0.5 * fd_step);
    out.nablaZ_vs_J = std::max(out.nablaZ_vs_J, fine.nablaZ_vs_J);
    out.nablaJ_identity = std::max(out.nablaJ_identity, fine.nablaJ);
    out.killing = std::max(out.killing, fine.killing);
    out.dalpha_2omega = std::max(out.dalpha_2omega, fine.dalpha_2omega);
    out.dalpha_of_Z = std::max(out.dalpha_of_Z, fine.dalpha_of_Z);
    coarse_max = std::max(coarse_max,
                          std::max({coarse.nablaZ_vs_J, coarse.killing, coarse.nablaJ,
                                    coarse.dalpha_2omega}));
    fine_max = std::max(fine_max, std::max({fine.nablaZ_vs_J, fine.killing, fine.nablaJ,
                                            fine.dalpha_2omega}));

    // curvature identity R(e_i, Z)Y = g(Z,Y) e_i - g(e_i,Z) Y
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd ei = Eigen::VectorXd::Unit(n, i);
      Eigen::MatrixXd R = riemann_endomorphism(spec, x, ei, Zx);
      for (int l = 0; l < n; ++l) {
        Eigen::VectorXd want = gZ(l) * ei - gZ(i) * Eigen::VectorXd::Unit(n, l);
        out.curvature_identity = std::max(
            out.curvature_identity, (R.col(l) - want).cwiseAbs().maxCoeff());
      }
    }

    // omega restricted to D = ker alpha
    int drop = 0;
    Zx.cwiseAbs().maxCoeff(&drop);
    std::vector<Eigen::VectorXd> dbasis;
    double zz = Zx.dot(gZ);
    for (int i = 0; i < n; ++i) {
      if (i == drop) continue;
      Eigen::VectorXd v = Eigen::VectorXd::Unit(n, i);
      v -= (v.dot(gZ) / zz) * Zx;
      for (const auto& w : dbasis) v -= (w.transpose() * g * v)(0) * w;
      double norm = std::sqrt((v.transpose() * g * v)(0));
      if (norm < 1e-8) continue;
      dbasis.push_back(v / norm);
    }
    Eigen::MatrixXd D(n, static_cast<int>(dbasis.size()));
    for (std::size_t c = 0; c < dbasis.size(); ++c) D.col(static_cast<int>(c)) = dbasis[c];
    Eigen::MatrixXd W = D.transpose() * omega * D;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(W);
    double msv = svd.singularValues().size()
                     ? svd.singularValues()(svd.singularValues().size() - 1)
                     : 0.0;
    if (out.omega_min_singular_value == 0.0)
      out.omega_min_singular_value = msv;
    else
      out.omega_min_singular_value = std::min(out.omega_min_singular_value, msv);
  }

  // differencing-error diagnostic: residuals above tolerance should not be
  // produced by the step itself
  out.fd_converged = (fine_max <= tolerance) || (fine_max <= 0.75 * coarse_max) ||
                     (fine_max <= coarse_max * 1.5 && coarse_max <= tolerance);
  return out;
}

// ---------------------------------------------------------------------------
// converse construction

namespace {

Eigen::MatrixXd jr_coord_from_fields(const ManifoldSpec& spec, const TensorFields& S,
                                     const Eigen::VectorXd& x) {
  int n = spec.dim();
  Eigen::MatrixXd g;
  spec.metric_at(x.data(), g);
  Eigen::VectorXd Zx = S.Z(x);
  Eigen::MatrixXd JR = Eigen::MatrixXd::Zero(n + 1, n + 1);
  JR.topLeftCorner(n, n) = S.J(x);
  JR.col(n).head(n) = Zx;
  JR.row(n).head(n) = -(g * Zx).transpose();
  return JR;
}

Eigen::MatrixXd coord_to_adapted(const ManifoldSpec& spec, const Eigen::VectorXd& x,
                                 const Eigen::MatrixXd& M_coord) {
  int n = spec.dim();
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n + 1, n + 1);
  B.topLeftCorner(n, n) = orthonormal_frame(spec, x);
  return B.inverse() * M_coord * B;
}

// worst hypothesis violation for one candidate structure
JRBuildReport check_hypotheses(const ManifoldSpec& spec, const TensorFields& S,
                               const std::vector<Eigen::VectorXd>& points,
                               double fd_step) {
  JRBuildReport rep;
  int n = spec.dim();
  for (const Eigen::VectorXd& x : points) {
    Eigen::MatrixXd g;
    spec.metric_at(x.data(), g);
    Eigen::VectorXd Zx = S.Z(x);
    Eigen::MatrixXd Jx = S.J(x);
    Eigen::VectorXd gZ = g * Zx;
    double zz = Zx.dot(gZ);
    rep.hypothesis_unit = std::max(rep.hypothesis_unit, std::abs(std::sqrt(zz) - 1.0));
    rep.hypothesis_JZ = std::max(rep.hypothesis_JZ, (Jx * Zx).cwiseAbs().maxCoeff());

    DiffResiduals d = diff_residuals(spec, S, x, fd_step);
    rep.hypothesis_killing = std::max(rep.hypothesis_killing, d.killing);

    // J restricted to D: isometric almost complex structure
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd v = Eigen::VectorXd::Unit(n, i);
      v -= (v.dot(gZ) / zz) * Zx;  // project to D
      double vnorm = std::sqrt((v.transpose() * g * v)(0));
      if (vnorm < 1e-10) continue;
      v /= vnorm;
      rep.hypothesis_acs = std::max(
          rep.hypothesis_acs, (Jx * (Jx * v) + v).cwiseAbs().maxCoeff());
      double iso = std::abs(((Jx * v).transpose() * g * (Jx * v))(0) - 1.0);
      rep.hypothesis_acs = std::max(rep.hypothesis_acs, iso);
    }
  }
  return rep;
}

}  // namespace

BuiltJR build_JR_from_structure(const ManifoldSpec& spec, const TensorFields& S,
                                const Eigen::VectorXd& base,
                                const std::vector<CurvePath>& loops,
                                const std::vector<Eigen::VectorXd>& check_points,
                                int steps, double fd_step) {
  JRBuildReport rep = check_hypotheses(spec, S, check_points, fd_step);
  double hyp = std::max({rep.hypothesis_unit, rep.hypothesis_killing, rep.hypothesis_JZ,
                         rep.hypothesis_acs});
  if (hyp > 1e-4)
    throw NumericError("build_JR_from_structure: hypothesis check failed (residual " +
                       std::to_string(hyp) + ")");

  int n = spec.dim();
  for (const Eigen::VectorXd& x : check_points) {
    Eigen::MatrixXd ad = coord_to_adapted(spec, x, jr_coord_from_fields(spec, S, x));
    rep.isometry_residual = std::max(
        rep.isometry_residual,
        (ad.transpose() * ad - Eigen::MatrixXd::Identity(n + 1, n + 1))
            .cwiseAbs()
            .maxCoeff());
  }

  Eigen::MatrixXd JR0 = coord_to_adapted(spec, base, jr_coord_from_fields(spec, S, base));
  for (const CurvePath& loop : loops) {
    Eigen::MatrixXd P = rolling_transport(spec, 1.0, loop, steps).matrix;
    rep.loop_commutator_residual = std::max(
        rep.loop_commutator_residual, (P * JR0 - JR0 * P).cwiseAbs().maxCoeff());
  }

  const ManifoldSpec* sp = &spec;
  TensorFields copy = S;
  BuiltJR out;
  out.jr_coord = [sp, copy](const Eigen::VectorXd& x) {
    return jr_coord_from_fields(*sp, copy, x);
  };
  out.jr_adapted = [sp, copy](const Eigen::VectorXd& x) {
    return coord_to_adapted(*sp, x, jr_coord_from_fields(*sp, copy, x));
  };
  out.report = rep;
  return out;
}

// ---------------------------------------------------------------------------
// three structures

ThreeSasakiResiduals extract_3sasaki(const ManifoldSpec& spec,
                                     const std::array<const ParallelStructure*, 3>& ps,
                                     const std::vector<Eigen::VectorXd>& points,
                                     double fd_step) {
  int n = spec.dim();
  ThreeSasakiResiduals out;
  std::array<TensorFields, 3> S;
  for (int i = 0; i < 3; ++i) {
    S[static_cast<std::size_t>(i)] = extract_sasaki(*ps[static_cast<std::size_t>(i)]);
    out.each[static_cast<std::size_t>(i)] =
        verify_sasaki(spec, S[static_cast<std::size_t>(i)], points, fd_step);
  }

  for (const Eigen::VectorXd& x : points) {
    Eigen::MatrixXd g;
    spec.metric_at(x.data(), g);
    std::array<Eigen::VectorXd, 3> Z;
    std::array<Eigen::MatrixXd, 3> J, dZ;
    for (int i = 0; i < 3; ++i) {
      Z[static_cast<std::size_t>(i)] = S[static_cast<std::size_t>(i)].Z(x);
      J[static_cast<std::size_t>(i)] = S[static_cast<std::size_t>(i)].J(x);
    }
    // coordinate partials of each Z field
    Eigen::VectorXd xp = x;
    for (int i = 0; i < 3; ++i) {
      Eigen::MatrixXd d(n, n);
      for (int a = 0; a < n; ++a) {
        double h = fd_step * std::max(1.0, std::abs(x(a)));
        xp(a) = x(a) + h;
        Eigen::VectorXd Zp = S[static_cast<std::size_t>(i)].Z(xp);
        xp(a) = x(a) - h;
        Eigen::VectorXd Zm = S[static_cast<std::size_t>(i)].Z(xp);
        xp(a) = x(a);
        d.col(a) = (Zp - Zm) / (2.0 * h);
      }
      dZ[static_cast<std::size_t>(i)] = std::move(d);
    }

    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double want = (i == j) ? 1.0 : 0.0;
        out.Z_orthonormal = std::max(
            out.Z_orthonormal,
            std::abs((Z[static_cast<std::size_t>(i)].transpose() * g *
                      Z[static_cast<std::size_t>(j)])(0) -
                     want));
        if (i == j) continue;
        int k = 3 - i - j;
        double eps = epsilon3(i + 1, j + 1, k + 1);
        // [Z_i, Z_j]^a = Z_i^b d_b Z_j^a - Z_j^b d_b Z_i^a
        Eigen::VectorXd bracket =
            dZ[static_cast<std::size_t>(j)] * Z[static_cast<std::size_t>(i)] -
            dZ[static_cast<std::size_t>(i)] * Z[static_cast<std::size_t>(j)];
        out.bracket = std::max(
            out.bracket, (bracket - 2.0 * eps * Z[static_cast<std::size_t>(k)])
                             .cwiseAbs()
                             .maxCoeff());
        out.JiZj = std::max(
            out.JiZj,
            (J[static_cast<std::size_t>(i)] * Z[static_cast<std::size_t>(j)] +
             eps * Z[static_cast<std::size_t>(k)])
                .cwiseAbs()
                .maxCoeff());
      }
  }
  return out;
}

TripleBuildReport build_JR_triple(const ManifoldSpec& spec,
                                  const std::array<TensorFields, 3>& S,
                                  const std::vector<Eigen::VectorXd>& points,
                                  double fd_step) {
  int n = spec.dim();
  TripleBuildReport rep;

  for (int i = 0; i < 3; ++i) {
    JRBuildReport h = check_hypotheses(spec, S[static_cast<std::size_t>(i)], points, fd_step);
    rep.hypothesis_residual =
        std::max({rep.hypothesis_residual, h.hypothesis_unit, h.hypothesis_killing,
                  h.hypothesis_JZ, h.hypothesis_acs});
  }

  auto hnorm = [&](const Eigen::MatrixXd& g, const Eigen::VectorXd& v) {
    double t = (v.head(n).transpose() * g * v.head(n))(0);
    return std::sqrt(std::max(0.0, t) + v(n) * v(n));
  };

  for (const Eigen::VectorXd& x : points) {
    Eigen::MatrixXd g;
    spec.metric_at(x.data(), g);
    std::array<Eigen::VectorXd, 3> Z;
    std::array<Eigen::MatrixXd, 3> JR;
    for (int i = 0; i < 3; ++i) {
      Z[static_cast<std::size_t>(i)] = S[static_cast<std::size_t>(i)].Z(x);
      JR[static_cast<std::size_t>(i)] =
          jr_coord_from_fields(spec, S[static_cast<std::size_t>(i)], x);
    }

    // bracket hypothesis via coordinate partials
    Eigen::VectorXd xp = x;
    std::array<Eigen::MatrixXd, 3> dZ;
    for (int i = 0; i < 3; ++i) {
      Eigen::MatrixXd d(n, n);
      for (int a = 0; a < n; ++a) {
        double h = fd_step * std::max(1.0, std::abs(x(a)));
        xp(a) = x(a) + h;
        Eigen::VectorXd Zp = S[static_cast<std::size_t>(i)].Z(xp);
        xp(a) = x(a) - h;
        Eigen::VectorXd Zm = S[static_cast<std::size_t>(i)].Z(xp);
        xp(a) = x(a);
        d.col(a) = (Zp - Zm) / (2.0 * h);
      }
      dZ[static_cast<std::size_t>(i)] = std::move(d);
    }

    // basis of D: coordinate frame projected off span{Z_1,Z_2,Z_3}
    std::vector<Eigen::VectorXd> dbasis;
    for (int a = 0; a < n && static_cast<int>(dbasis.size()) < n - 3; ++a) {
      Eigen::VectorXd v = Eigen::VectorXd::Unit(n, a);
      for (int i = 0; i < 3; ++i)
        v -= (Z[static_cast<std::size_t>(i)].transpose() * g * v)(0) *
             Z[static_cast<std::size_t>(i)];
      for (const auto& w : dbasis) v -= (w.transpose() * g * v)(0) * w;
      double norm = std::sqrt((v.transpose() * g * v)(0));
      if (norm < 1e-6) continue;
      dbasis.push_back(v / norm);
    }

    Eigen::VectorXd cone = Eigen::VectorXd::Zero(n + 1);
    cone(n) = 1.0;

    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        if (i == j) continue;
        int k = 3 - i - j;
        double eps = epsilon3(i + 1, j + 1, k + 1);
        const Eigen::MatrixXd& Ji = JR[static_cast<std::size_t>(i)];
        const Eigen::MatrixXd& Jj = JR[static_cast<std::size_t>(j)];
        const Eigen::MatrixXd& Jk = JR[static_cast<std::size_t>(k)];

        rep.cone_case = std::max(rep.cone_case,
                                 hnorm(g, Ji * (Jj * cone) + eps * (Jk * cone)));

        for (const auto& d : dbasis) {
          Eigen::VectorXd v = Eigen::VectorXd::Zero(n + 1);
          v.head(n) = d;
          rep.d_case = std::max(rep.d_case, hnorm(g, Ji * (Jj * v) + eps * (Jk * v)));
        }

        for (int a = 0; a < 3; ++a) {
          Eigen::VectorXd v = Eigen::VectorXd::Zero(n + 1);
          v.head(n) = Z[static_cast<std::size_t>(a)];
          Eigen::VectorXd res = Ji * (Jj * v) + eps * (Jk * v);
          rep.z_case = std::max(rep.z_case, hnorm(g, res));
          if (a == k) {
            // second component of J_i^R J_j^R (Z_k, 0) equals eps_ijk
            double second = (Ji * (Jj * v))(n);
            rep.z_case = std::max(rep.z_case, std::abs(second - eps));
          }
        }

        // bracket and antisymmetry hypotheses
        Eigen::VectorXd bracket =
            dZ[static_cast<std::size_t>(j)] * Z[static_cast<std::size_t>(i)] -
            dZ[static_cast<std::size_t>(i)] * Z[static_cast<std::size_t>(j)];
        rep.bracket_hypothesis = std::max(
            rep.bracket_hypothesis,
            (bracket - 2.0 * eps * Z[static_cast<std::size_t>(k)]).cwiseAbs().maxCoeff());
        rep.JiZj_antisym = std::max(
            rep.JiZj_antisym,
            (S[static_cast<std::size_t>(i)].J(x) * Z[static_cast<std::size_t>(j)] +
             S[static_cast<std::size_t>(j)].J(x) * Z[static_cast<std::size_t>(i)])
                .cwiseAbs()
                .maxCoeff());
      }
  }
  if (rep.hypothesis_residual > 1e-4)
    throw NumericError("build_JR_triple: hypothesis check failed (residual " +
                       std::to_string(rep.hypothesis_residual) + ")");
  return rep;
}

}  // namespace rollhol
