#include "rollhol/manifold.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace rollhol {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// construction

ManifoldSpec ManifoldSpec::from_metric(std::string name, int dim,
                                       std::vector<Expr> metric,
                                       std::vector<Interval> domain,
                                       std::vector<std::vector<Expr>> frame) {
  if (dim <= 0) throw InputError("dimension must be positive");
  if (metric.size() != static_cast<std::size_t>(dim * dim))
    throw InputError("metric must be a " + std::to_string(dim) + "x" +
                     std::to_string(dim) + " array");
  if (!frame.empty() && frame.size() != static_cast<std::size_t>(dim))
    throw InputError("frame must supply exactly dim vector fields");
  for (const auto& f : frame)
    if (f.size() != static_cast<std::size_t>(dim))
      throw InputError("each frame field needs dim components");
  if (domain.empty()) domain.assign(static_cast<std::size_t>(dim), Interval{});
  if (domain.size() != static_cast<std::size_t>(dim))
    throw InputError("domain must supply one interval per coordinate");

  ManifoldSpec s;
  s.name_ = std::move(name);
  s.dim_ = dim;
  s.metric_ = std::move(metric);
  s.frame_ = std::move(frame);
  s.domain_ = std::move(domain);
  s.vars_ = VarTable::chart(dim);
  s.compile();
  return s;
}

void ManifoldSpec::compile() {
  metric_prog_.assign(static_cast<std::size_t>(dim_ * dim_), Prog{});
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j)
      metric_prog_[static_cast<std::size_t>(i * dim_ + j)] =
          compile_expr(metric_[static_cast<std::size_t>(i * dim_ + j)], vars_);
  frame_prog_.clear();
  for (const auto& field : frame_) {
    std::vector<Prog> comps;
    comps.reserve(field.size());
    for (const Expr& e : field) comps.push_back(compile_expr(e, vars_));
    frame_prog_.push_back(std::move(comps));
  }
}

void ManifoldSpec::metric_at(const double* x, Eigen::MatrixXd& g) const {
  g.resize(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j) {
      double v = metric_prog_[static_cast<std::size_t>(i * dim_ + j)].eval(x, dim_);
      g(i, j) = v;
      g(j, i) = v;
    }
}

Eigen::MatrixXd ManifoldSpec::metric_at(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd g;
  metric_at(x.data(), g);
  return g;
}

Eigen::VectorXd ManifoldSpec::frame_field(int i, const Eigen::VectorXd& x) const {
  Eigen::VectorXd v(dim_);
  const auto& comps = frame_prog_.at(static_cast<std::size_t>(i));
  for (int k = 0; k < dim_; ++k) v(k) = comps[static_cast<std::size_t>(k)].eval(x.data(), dim_);
  return v;
}

bool ManifoldSpec::in_domain(const Eigen::VectorXd& x, double margin) const {
  if (x.size() != dim_) return false;
  for (int i = 0; i < dim_; ++i)
    if (!domain_[static_cast<std::size_t>(i)].contains(x(i), margin)) return false;
  return true;
}

void ManifoldSpec::require_in_domain(const Eigen::VectorXd& x, double margin) const {
  if (!in_domain(x, margin)) {
    std::ostringstream os;
    os << "point [" << x.transpose() << "] outside chart domain of " << name_;
    throw DomainError(os.str());
  }
}

double ManifoldSpec::boundary_distance(const Eigen::VectorXd& x, int i) const {
  const Interval& iv = domain_[static_cast<std::size_t>(i)];
  double d = std::numeric_limits<double>::infinity();
  if (std::isfinite(iv.lo)) d = std::min(d, x(i) - iv.lo);
  if (std::isfinite(iv.hi)) d = std::min(d, iv.hi - x(i));
  return d;
}

const ManifoldSpec& ManifoldSpec::cone_base() const {
  if (!cone_base_) throw InputError("spec '" + name_ + "' is not a cone");
  return *cone_base_;
}

// ---------------------------------------------------------------------------
// builtins

namespace {

Expr num(double v) { return Expr::number(v); }
Expr var(int i) { return Expr::var("x" + std::to_string(i + 1)); }

ManifoldSpec make_euclidean(int n) {
  std::vector<Expr> g(static_cast<std::size_t>(n * n), num(0.0));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i * n + i)] = num(1.0);
  return ManifoldSpec::from_metric("euclidean:" + std::to_string(n), n, std::move(g));
}

// Conformal factor 4R^4 / (R^2 + |u|^2)^2 of the stereographic chart.
ManifoldSpec make_sphere(int n, double radius) {
  Expr r2 = num(radius * radius);
  Expr usq = num(0.0);
  for (int i = 0; i < n; ++i) usq = usq + var(i) * var(i);
  Expr denom = (r2 + usq) * (r2 + usq);
  Expr factor = num(4.0 * radius * radius * radius * radius) / denom;
  std::vector<Expr> g(static_cast<std::size_t>(n * n), num(0.0));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i * n + i)] = factor;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "sphere:%d:radius=%g", n, radius);
  return ManifoldSpec::from_metric(buf, n, std::move(g));
}

// Upper half-space model: g_ij = delta_ij / x_n^2 on {x_n > 0}.
ManifoldSpec make_hyperbolic(int n) {
  Expr f = num(1.0) / (var(n - 1) * var(n - 1));
  std::vector<Expr> g(static_cast<std::size_t>(n * n), num(0.0));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i * n + i)] = f;
  std::vector<Interval> dom(static_cast<std::size_t>(n), Interval{});
  dom.back() = Interval{0.0, std::numeric_limits<double>::infinity()};
  return ManifoldSpec::from_metric("hyperbolic:" + std::to_string(n), n, std::move(g),
                                   std::move(dom));
}

// Coordinates (x_1, y_1, .., x_m, y_m, z); the left-invariant metric is the
// one making X_i = d/dx_i - y_i d/dz, Y_i = d/dy_i + x_i d/dz, Z = d/dz
// orthonormal, i.e. g = sum(dx_i^2 + dy_i^2) + theta^2 with
// theta = dz + sum(y_i dx_i - x_i dy_i).
ManifoldSpec make_heisenberg(int m) {
  int n = 2 * m + 1;
  auto X = [&](int i) { return var(2 * i); };      // x_i slot
  auto Y = [&](int i) { return var(2 * i + 1); };  // y_i slot
  int zi = n - 1;

  // theta components: theta_(x_i) = y_i, theta_(y_i) = -x_i, theta_z = 1
  std::vector<Expr> theta(static_cast<std::size_t>(n), num(0.0));
  for (int i = 0; i < m; ++i) {
    theta[static_cast<std::size_t>(2 * i)] = Y(i);
    theta[static_cast<std::size_t>(2 * i + 1)] = -X(i);
  }
  theta[static_cast<std::size_t>(zi)] = num(1.0);

  std::vector<Expr> g(static_cast<std::size_t>(n * n), num(0.0));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Expr e = theta[static_cast<std::size_t>(a)] * theta[static_cast<std::size_t>(b)];
      if (a == b && a != zi) e = e + num(1.0);
      g[static_cast<std::size_t>(a * n + b)] = e;
    }

  // declared orthonormal frame X_1, Y_1, .., X_m, Y_m, Z
  std::vector<std::vector<Expr>> frame;
  for (int i = 0; i < m; ++i) {
    std::vector<Expr> Xi(static_cast<std::size_t>(n), num(0.0));
    Xi[static_cast<std::size_t>(2 * i)] = num(1.0);
    Xi[static_cast<std::size_t>(zi)] = -Y(i);
    frame.push_back(std::move(Xi));
    std::vector<Expr> Yi(static_cast<std::size_t>(n), num(0.0));
    Yi[static_cast<std::size_t>(2 * i + 1)] = num(1.0);
    Yi[static_cast<std::size_t>(zi)] = X(i);
    frame.push_back(std::move(Yi));
  }
  std::vector<Expr> Zf(static_cast<std::size_t>(n), num(0.0));
  Zf[static_cast<std::size_t>(zi)] = num(1.0);
  frame.push_back(std::move(Zf));

  ManifoldSpec s = ManifoldSpec::from_metric("heisenberg:m=" + std::to_string(m), n,
                                             std::move(g), {}, std::move(frame));
  return s;
}

}  // namespace

ManifoldSpec make_cone(const ManifoldSpec& base, Interval s_range) {
  if (!(s_range.lo >= 0.0) || !(s_range.hi > s_range.lo))
    throw InputError("cone s_range must lie inside (0, inf)");
  int n = base.dim();
  int N = n + 1;
  Expr s = Expr::var("x" + std::to_string(N));
  Expr s2 = s * s;

  std::vector<Expr> g(static_cast<std::size_t>(N * N), Expr::number(0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g[static_cast<std::size_t>(i * N + j)] = s2 * base.metric_expr(i, j);
  g[static_cast<std::size_t>(n * N + n)] = Expr::number(1.0);

  std::vector<Interval> dom(base.domain());
  dom.push_back(s_range);

  ManifoldSpec c = ManifoldSpec::from_metric("cone:" + base.name(), N, std::move(g),
                                             std::move(dom));
  c.kind_ = BuiltinKind::Cone;
  c.cone_base_ = std::make_shared<ManifoldSpec>(base);
  c.vars_.add_alias("s", n);
  return c;
}

ManifoldSpec make_builtin(const std::string& tag) {
  auto fail = [&]() -> ManifoldSpec {
    throw InputError("unknown builtin spec '" + tag + "'");
  };
  auto starts_with = [&](const char* p) {
    return tag.rfind(p, 0) == 0;
  };

  if (starts_with("euclidean:")) {
    int n = std::atoi(tag.c_str() + 10);
    if (n <= 0) return fail();
    ManifoldSpec s = make_euclidean(n);
    s.kind_ = BuiltinKind::Euclidean;
    return s;
  }
  if (starts_with("sphere:")) {
    int n = 0;
    double radius = 1.0;
    if (std::sscanf(tag.c_str(), "sphere:%d:radius=%lf", &n, &radius) < 1) return fail();
    if (n <= 0 || radius <= 0.0) return fail();
    ManifoldSpec s = make_sphere(n, radius);
    s.kind_ = BuiltinKind::Sphere;
    s.sphere_radius_ = radius;
    return s;
  }
  if (starts_with("hyperbolic:")) {
    int n = std::atoi(tag.c_str() + 11);
    if (n <= 0) return fail();
    ManifoldSpec s = make_hyperbolic(n);
    s.kind_ = BuiltinKind::Hyperbolic;
    return s;
  }
  if (starts_with("heisenberg:")) {
    int m = 0;
    if (std::sscanf(tag.c_str(), "heisenberg:m=%d", &m) != 1 || m <= 0) return fail();
    ManifoldSpec s = make_heisenberg(m);
    s.kind_ = BuiltinKind::Heisenberg;
    s.heisenberg_m_ = m;
    return s;
  }
  if (starts_with("cone:")) {
    ManifoldSpec base = make_builtin(tag.substr(5));
    return make_cone(base);
  }
  return fail();
}

// ---------------------------------------------------------------------------
// JSON loading

namespace {

Interval interval_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw InputError("domain entries must be [lo, hi] pairs");
  Interval iv;
  auto side = [](const json& v, double inf_sign) -> double {
    if (v.is_null()) return inf_sign * std::numeric_limits<double>::infinity();
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
      if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw InputError("domain bound must be a number, null, or \"[+-]inf\"");
  };
  iv.lo = side(j[0], -1.0);
  iv.hi = side(j[1], +1.0);
  if (!(iv.lo < iv.hi)) throw InputError("domain interval is empty");
  return iv;
}

ManifoldSpec spec_from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("manifold document must be a JSON object");
  if (doc.contains("builtin")) return make_builtin(doc["builtin"].get<std::string>());

  if (!doc.contains("dim") || !doc.contains("metric"))
    throw InputError("manifold document needs 'dim' and 'metric' (or 'builtin')");
  int dim = doc["dim"].get<int>();
  std::string name = doc.value("name", std::string("manifold"));

  const json& m = doc["metric"];
  if (!m.is_array() || m.size() != static_cast<std::size_t>(dim))
    throw InputError("metric must be a dim x dim array of expression strings");
  std::vector<Expr> metric;
  metric.reserve(static_cast<std::size_t>(dim * dim));
  for (const auto& row : m) {
    if (!row.is_array() || row.size() != static_cast<std::size_t>(dim))
      throw InputError("metric must be a dim x dim array of expression strings");
    for (const auto& cell : row) metric.push_back(parse_expr(cell.get<std::string>()));
  }

  std::vector<std::vector<Expr>> frame;
  if (doc.contains("frame")) {
    for (const auto& row : doc["frame"]) {
      std::vector<Expr> field;
      for (const auto& cell : row) field.push_back(parse_expr(cell.get<std::string>()));
      frame.push_back(std::move(field));
    }
  }

  std::vector<Interval> domain;
  if (doc.contains("domain"))
    for (const auto& j : doc["domain"]) domain.push_back(interval_from_json(j));

  return ManifoldSpec::from_metric(std::move(name), dim, std::move(metric),
                                   std::move(domain), std::move(frame));
}

}  // namespace

ManifoldSpec manifold_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid manifold JSON: ") + e.what());
  }
  ManifoldSpec s = spec_from_json(doc);
  validate_spec(s);
  return s;
}

ManifoldSpec load_manifold(const std::string& path_or_name) {
  std::ifstream in(path_or_name);
  if (!in.good()) {
    // not a file: try builtin name
    ManifoldSpec s = make_builtin(path_or_name);
    validate_spec(s);
    return s;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return manifold_from_json_text(ss.str());
}

// ---------------------------------------------------------------------------
// validation

std::vector<Eigen::VectorXd> random_domain_points(const ManifoldSpec& spec, int count,
                                                  unsigned seed, double scale) {
  std::mt19937_64 rng(seed);
  auto unit = [&]() {  // uniform in [-1, 1], portable across standard libraries
    return 2.0 * (static_cast<double>(rng() >> 11) * 0x1p-53) - 1.0;
  };
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd x(spec.dim());
    for (int i = 0; i < spec.dim(); ++i) {
      const Interval& iv = spec.domain()[static_cast<std::size_t>(i)];
      if (std::isfinite(iv.lo) && std::isfinite(iv.hi)) {
        double c = 0.5 * (iv.lo + iv.hi), w = 0.5 * iv.width();
        x(i) = c + 0.8 * w * unit() * scale;
      } else if (std::isfinite(iv.lo)) {
        x(i) = iv.lo + (0.3 + 0.7 * std::abs(unit())) * scale + 0.7 * scale * std::abs(unit());
      } else if (std::isfinite(iv.hi)) {
        x(i) = iv.hi - (0.3 + 1.4 * std::abs(unit())) * scale;
      } else {
        x(i) = unit() * scale;
      }
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

void validate_spec(const ManifoldSpec& spec, int samples, unsigned seed) {
  // symmetry fast path: identical canonical text
  bool text_symmetric = true;
  for (int i = 0; i < spec.dim() && text_symmetric; ++i)
    for (int j = i + 1; j < spec.dim(); ++j)
      if (spec.metric_expr(i, j).to_string() != spec.metric_expr(j, i).to_string()) {
        text_symmetric = false;
        break;
      }

  std::vector<Prog> lower;
  if (!text_symmetric) {
    for (int i = 0; i < spec.dim(); ++i)
      for (int j = 0; j < spec.dim(); ++j)
        lower.push_back(compile_expr(spec.metric_expr(j, i), spec.vars()));
  }

  auto pts = random_domain_points(spec, samples, seed);
  Eigen::MatrixXd g;
  for (const auto& x : pts) {
    spec.metric_at(x.data(), g);  // uses the upper triangle
    if (!text_symmetric) {
      for (int i = 0; i < spec.dim(); ++i)
        for (int j = i + 1; j < spec.dim(); ++j) {
          double other =
              lower[static_cast<std::size_t>(i * spec.dim() + j)].eval(x.data(), spec.dim());
          if (std::abs(other - g(i, j)) > 1e-12 * std::max(1.0, std::abs(g(i, j))))
            throw InputError("metric is not symmetric: g[" + std::to_string(i) + "][" +
                             std::to_string(j) + "] != g[" + std::to_string(j) + "][" +
                             std::to_string(i) + "]");
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw NumericError("metric of '" + spec.name() + "' is not positive definite");
  }

  if (spec.has_frame()) {
    for (int k = 0; k < std::min(samples, 64); ++k) {
      const Eigen::VectorXd& x = pts[static_cast<std::size_t>(k)];
      spec.metric_at(x.data(), g);
      Eigen::MatrixXd F(spec.dim(), spec.dim());
      for (int i = 0; i < spec.dim(); ++i) F.col(i) = spec.frame_field(i, x);
      Eigen::MatrixXd gram = F.transpose() * g * F;
      if ((gram - Eigen::MatrixXd::Identity(spec.dim(), spec.dim())).cwiseAbs().maxCoeff() >
          1e-10)
        throw InputError("declared frame of '" + spec.name() + "' is not orthonormal");
    }
  }
}

// ---------------------------------------------------------------------------
// digest

std::string spec_digest(const ManifoldSpec& spec) {
  std::string blob = spec.name() + "|" + std::to_string(spec.dim());
  for (const Expr& e : spec.metric_exprs()) blob += "|" + e.to_string();
  for (const Interval& iv : spec.domain()) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "|[%.17g,%.17g]", iv.lo, iv.hi);
    blob += buf;
  }
  if (spec.has_frame())
    for (int i = 0; i < spec.dim(); ++i)
      for (const Expr& e : spec.frame_exprs(i)) blob += "|" + e.to_string();

  // FNV-1a 64
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : blob) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char out[32];
  std::snprintf(out, sizeof(out), "fnv1a:%016llx", static_cast<unsigned long long>(h));
  return out;
}

// ---------------------------------------------------------------------------
// sphere embedding oracle

Eigen::VectorXd sphere_embed(double R, const Eigen::VectorXd& u) {
  int n = static_cast<int>(u.size());
  double q = u.squaredNorm() + R * R;
  Eigen::VectorXd p(n + 1);
  p.head(n) = (2.0 * R * R / q) * u;
  p(n) = R * (u.squaredNorm() - R * R) / q;
  return p;
}

Eigen::VectorXd sphere_unembed(double R, const Eigen::VectorXd& p) {
  int n = static_cast<int>(p.size()) - 1;
  double denom = R - p(n);
  if (std::abs(denom) < 1e-14)
    throw DomainError("north pole is outside the stereographic chart");
  return (R / denom) * p.head(n);
}

Eigen::MatrixXd sphere_embed_jacobian(double R, const Eigen::VectorXd& u) {
  int n = static_cast<int>(u.size());
  double q = u.squaredNorm() + R * R;
  Eigen::MatrixXd J(n + 1, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i)
      J(i, j) = 2.0 * R * R * ((i == j ? 1.0 : 0.0) / q - 2.0 * u(i) * u(j) / (q * q));
    J(n, j) = R * (2.0 * u(j) / q - (u.squaredNorm() - R * R) * 2.0 * u(j) / (q * q));
  }
  return J;
}

}  // namespace rollhol
