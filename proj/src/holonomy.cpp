#include "rollhol/holonomy.hpp"

#include <cmath>
#include <random>

#include "rollhol/linalg.hpp"
#include "rollhol/parallel.hpp"

namespace rollhol {

// ---------------------------------------------------------------------------
// loop generation

namespace {

// uniform in [-1, 1]; raw bit scaling keeps the stream portable
double unit_draw(std::mt19937_64& rng) {
  return 2.0 * (static_cast<double>(rng() >> 11) * 0x1p-53) - 1.0;
}

}  // namespace

std::vector<CurvePath> generate_loops(const ManifoldSpec& spec,
                                      const Eigen::VectorXd& base, int count,
                                      unsigned seed, const LoopOptions& opts) {
  spec.require_in_domain(base);
  int n = spec.dim();
  std::vector<CurvePath> loops;

  // (a) coordinate rectangles in every plane
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (double delta : opts.rect_deltas) {
        Eigen::VectorXd corner = base;
        corner(i) += delta;
        corner(j) += delta;
        if (!spec.in_domain(corner, 0.05 * delta))
          throw DomainError("chart domain too small for a rectangle of side " +
                            std::to_string(delta));
        loops.push_back(
            CurvePath::rectangle(base, i, j, delta, opts.steps_per_segment));
      }

  // (b) seeded smooth loops
  std::mt19937_64 rng(seed);
  for (int k = 0; k < count; ++k) {
    Eigen::MatrixXd cos_coef(n, opts.trig_modes), sin_coef(n, opts.trig_modes);
    for (int i = 0; i < n; ++i) {
      double amp = std::min(0.35, 0.4 * spec.boundary_distance(base, i));
      double raw = 0.0;
      for (int m = 0; m < opts.trig_modes; ++m) {
        cos_coef(i, m) = unit_draw(rng) / (m + 1);
        sin_coef(i, m) = unit_draw(rng) / (m + 1);
        raw += 2.0 * std::abs(cos_coef(i, m)) + std::abs(sin_coef(i, m));
      }
      double scale = raw > 0 ? amp / raw : 0.0;
      cos_coef.row(i) *= scale;
      sin_coef.row(i) *= scale;
    }
    loops.push_back(CurvePath({Segment::trig_loop(base, cos_coef, sin_coef)},
                              opts.steps_per_segment, true));
  }
  return loops;
}

// ---------------------------------------------------------------------------
// algebra estimation

HolonomyAlgebra estimate_algebra(const ManifoldSpec& spec, const Eigen::VectorXd& base,
                                 const std::vector<CurvePath>& loops,
                                 const EstimateOptions& opts) {
  int n = spec.dim();
  int N = n + 1;

  struct PerLoop {
    std::vector<Eigen::MatrixXd> samples;
    int discarded = 0;
    std::string note;
  };
  std::vector<PerLoop> results(loops.size());

  parallel_for(static_cast<int>(loops.size()), opts.threads, [&](int li) {
    const CurvePath& loop = loops[static_cast<std::size_t>(li)];
    PerLoop& out = results[static_cast<std::size_t>(li)];

    std::vector<RollingCheckpoint> cps;
    TransportOperator op =
        rolling_transport(spec, 1.0, loop, opts.steps, &opts.checkpoint_fracs, &cps);

    Eigen::MatrixXd R = project_to_rotation(op.matrix);
    Eigen::MatrixXd L;
    if (rotation_log(R, L)) {
      out.samples.push_back(L);
    } else {
      out.discarded = 1;
      out.note = "loop " + std::to_string(li) +
                 ": holonomy log near branch cut (eigenvalue -1), sample discarded";
    }

    for (const RollingCheckpoint& cp : cps) {
      auto planes = rolling_curvature_planes(spec, 1.0, cp.x);
      Eigen::MatrixXd Pinv = cp.adapted.inverse();
      for (const Eigen::MatrixXd& F : planes)
        out.samples.push_back(Pinv * F * cp.adapted);
    }
  });

  std::vector<Eigen::MatrixXd> samples;
  int discarded = 0;
  std::vector<std::string> notes;
  for (const PerLoop& r : results) {
    discarded += r.discarded;
    if (!r.note.empty()) notes.push_back(r.note);
    for (const auto& s : r.samples) samples.push_back(s);
  }

  if (opts.base_frame_rotation.size() > 0) {
    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(N, N);
    Q.topLeftCorner(n, n) = opts.base_frame_rotation;
    for (auto& s : samples) s = Q.transpose() * s * Q;
  }

  SpanResult span = matrix_span(samples, opts.rank_tolerance, opts.rank_floor);

  HolonomyAlgebra alg;
  alg.base = base;
  alg.basis = std::move(span.basis);
  alg.rank = span.rank;
  alg.singular_values = std::move(span.singular_values);
  alg.rank_tolerance = opts.rank_tolerance;
  alg.rank_floor = opts.rank_floor;
  alg.discarded_logs = discarded;
  alg.notes = std::move(notes);

  // bracket closure of the returned basis
  double worst = 0.0;
  for (std::size_t i = 0; i < alg.basis.size(); ++i)
    for (std::size_t j = i + 1; j < alg.basis.size(); ++j) {
      Eigen::MatrixXd br = alg.basis[i] * alg.basis[j] - alg.basis[j] * alg.basis[i];
      double norm = br.norm();
      if (norm < 1e-12) continue;
      Eigen::MatrixXd proj = Eigen::MatrixXd::Zero(N, N);
      for (const auto& b : alg.basis) proj += frobenius_dot(br, b) * b;
      worst = std::max(worst, (br - proj).norm() / norm);
    }
  alg.bracket_closure_residual = worst;
  return alg;
}

// ---------------------------------------------------------------------------
// commutant

std::vector<Eigen::MatrixXd> commutant_skew(const std::vector<Eigen::MatrixXd>& basis,
                                            int fiber_dim) {
  auto pairs = skew_pair_basis(fiber_dim);
  int npairs = static_cast<int>(pairs.size());
  if (basis.empty()) return pairs;

  // rows: commutator pair-coordinates of [E_p, b_i] for every algebra element
  Eigen::MatrixXd C(npairs * static_cast<int>(basis.size()), npairs);
  for (std::size_t bi = 0; bi < basis.size(); ++bi)
    for (int p = 0; p < npairs; ++p) {
      Eigen::MatrixXd br = pairs[static_cast<std::size_t>(p)] * basis[bi] -
                           basis[bi] * pairs[static_cast<std::size_t>(p)];
      for (int q = 0; q < npairs; ++q)
        C(static_cast<int>(bi) * npairs + q, p) =
            frobenius_dot(br, pairs[static_cast<std::size_t>(q)]);
    }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double cutoff = (sv.size() ? sv(0) : 0.0) * 1e-5;

  std::vector<Eigen::MatrixXd> out;
  for (int k = 0; k < sv.size(); ++k) {
    if (sv(k) >= cutoff && sv(k) > 1e-12) continue;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(fiber_dim, fiber_dim);
    for (int p = 0; p < npairs; ++p)
      J += svd.matrixV()(p, k) * pairs[static_cast<std::size_t>(p)];
    out.push_back(std::move(J));
  }
  return out;
}

// ---------------------------------------------------------------------------
// classification

namespace {

GroupVerdict undetermined(int n, int dim, int comm, std::vector<std::string> notes) {
  GroupVerdict v;
  v.label = GroupLabel::Undetermined;
  v.label_string = "UNDETERMINED";
  v.controllable = false;
  v.algebra_dim = dim;
  v.commutant_skew_dim = comm;
  v.n = n;
  v.notes = std::move(notes);
  v.notes.push_back("no candidate matches algebra_dim=" + std::to_string(dim) +
                    ", commutant_skew_dim=" + std::to_string(comm) +
                    ", n=" + std::to_string(n));
  return v;
}

}  // namespace

GroupVerdict classify_dims(int dim, int comm, int n, bool su_trace_ok) {
  int N = n + 1;
  int so_dim = N * (N - 1) / 2;
  if (comm > so_dim)
    throw NumericError("commutant dimension exceeds the skew-matrix bound");

  GroupVerdict v;
  v.algebra_dim = dim;
  v.commutant_skew_dim = comm;
  v.n = n;

  if (dim == 0) {
    v.label = GroupLabel::Trivial;
    v.label_string = "TRIVIAL";
    v.controllable = false;
    return v;
  }
  if (dim == so_dim) {
    v.label = GroupLabel::SO;
    v.label_string = "SO(" + std::to_string(N) + ")";
    v.controllable = true;
    return v;
  }

  if (n % 2 == 0)
    return undetermined(n, dim, comm,
                        {"even-dimensional case: only full or trivial holonomy "
                         "is classified"});

  int m = (n - 1) / 2;  // N = 2(m+1)
  if (dim == (m + 1) * (m + 1) && comm == 1) {
    v.label = GroupLabel::U;
    v.label_string = "U(" + std::to_string(m + 1) + ")";
    v.controllable = false;
    return v;
  }
  if (dim == (m + 1) * (m + 1) - 1 && comm == 1) {
    if (su_trace_ok) {
      v.label = GroupLabel::SU;
      v.label_string = "SU(" + std::to_string(m + 1) + ")";
      v.controllable = false;
      return v;
    }
    return undetermined(n, dim, comm,
                        {"dimension matches SU(" + std::to_string(m + 1) +
                         ") but the complex-trace check failed"});
  }
  if (n % 4 == 3) {
    int k = (n - 3) / 4;
    int sp_dim = (k + 1) * (2 * k + 3);
    if (dim == sp_dim && comm == 3) {
      v.label = GroupLabel::Sp;
      v.label_string = "Sp(" + std::to_string(k + 1) + ")";
      v.controllable = false;
      if (n == 3)
        v.notes.push_back(
            "dimension three: SU(2) rolling holonomy cannot occur "
            "(a simply connected Sasaki-Einstein 3-manifold is the round "
            "sphere); commutant dimension 3 selects Sp(1)");
      return v;
    }
    if (dim == sp_dim + 3 && comm == 0) {
      v.label = GroupLabel::SpSp1;
      v.label_string = "SpSp1(" + std::to_string(k + 1) + ")";
      v.controllable = false;
      return v;
    }
  }
  if (n == 7 && dim == 21 && comm == 0) {
    v.label = GroupLabel::Spin7;
    v.label_string = "Spin7";
    v.controllable = false;
    v.notes.push_back("recognized by dimension 21 and trivial commutant only");
    return v;
  }
  return undetermined(n, dim, comm, {});
}

GroupVerdict classify(const HolonomyAlgebra& algebra, int n) {
  int N = n + 1;
  auto commutant = commutant_skew(algebra.basis, N);
  int comm = static_cast<int>(commutant.size());

  // complex-trace check feeding the SU decision: every algebra element must
  // be Frobenius-orthogonal to the invariant structure
  bool su_trace_ok = true;
  if (comm == 1) {
    const Eigen::MatrixXd& J = commutant.front();
    double jnorm = J.norm();
    for (const auto& b : algebra.basis)
      if (std::abs(frobenius_dot(b, J)) / (jnorm * b.norm()) >= 1e-5)
        su_trace_ok = false;
  }
  return classify_dims(algebra.rank, comm, n, su_trace_ok);
}

std::pair<bool, std::string> controllability(const GroupVerdict& v) {
  switch (v.label) {
    case GroupLabel::SO:
      return {true, "full rolling holonomy " + v.label_string +
                        ": the rolling system is controllable"};
    case GroupLabel::U:
      return {false, "not controllable: unitary rolling holonomy " + v.label_string +
                         ", the manifold carries a Sasakian structure"};
    case GroupLabel::SU:
      return {false, "not controllable: special unitary rolling holonomy " +
                         v.label_string + ", the manifold is Sasaki-Einstein"};
    case GroupLabel::Sp:
      return {false, "not controllable: symplectic rolling holonomy " + v.label_string +
                         ", the manifold carries a 3-Sasakian structure"};
    case GroupLabel::SpSp1:
      return {false, "not controllable: holonomy " + v.label_string +
                         " (quaternionic type without a standard structure name)"};
    case GroupLabel::Spin7:
      return {false, "not controllable: holonomy Spin(7) (no standard structure name)"};
    case GroupLabel::Trivial:
      return {false, "not controllable: trivial rolling holonomy (flat rolling "
                     "connection, constant curvature 1)"};
    case GroupLabel::Undetermined:
    default:
      return {false, "classification undetermined; see diagnostics"};
  }
}

}  // namespace rollhol
