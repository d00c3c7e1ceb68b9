#include "rollhol/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rollhol/connection.hpp"
#include "rollhol/geometry.hpp"
#include "rollhol/holonomy.hpp"
#include "rollhol/manifold.hpp"
#include "rollhol/parallel.hpp"
#include "rollhol/rolling.hpp"
#include "rollhol/structures.hpp"

namespace rollhol {

namespace {

using json = nlohmann::ordered_json;

std::string timestamp_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json base_report(const ManifoldSpec& spec, unsigned seed, int steps) {
  json r;
  r["tool_version"] = kToolVersion;
  r["timestamp"] = timestamp_now();
  r["spec_digest"] = spec_digest(spec);
  r["spec"] = {{"name", spec.name()}, {"dim", spec.dim()}};
  r["seed"] = seed;
  r["steps"] = steps;
  return r;
}

void write_report(const json& r, const std::string& out_path, std::ostream& out) {
  std::string text = r.dump(2);
  text += "\n";
  if (out_path == "-" || out_path.empty()) {
    out << text;
  } else {
    std::ofstream f(out_path);
    if (!f.good()) throw InputError("cannot write report to '" + out_path + "'");
    f << text;
  }
}

Eigen::VectorXd parse_base(const std::string& text, int dim) {
  if (text.empty()) return Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd x(dim);
  std::stringstream ss(text);
  std::string cell;
  int i = 0;
  while (std::getline(ss, cell, ',')) {
    if (i >= dim) throw InputError("--base has more than dim entries");
    x(i++) = std::stod(cell);
  }
  if (i != dim) throw InputError("--base needs exactly dim entries");
  return x;
}

Eigen::VectorXd default_base(const ManifoldSpec& spec) {
  // center of the domain box, zero for unbounded coordinates
  Eigen::VectorXd x = Eigen::VectorXd::Zero(spec.dim());
  for (int i = 0; i < spec.dim(); ++i) {
    const Interval& iv = spec.domain()[static_cast<std::size_t>(i)];
    if (std::isfinite(iv.lo) && std::isfinite(iv.hi))
      x(i) = 0.5 * (iv.lo + iv.hi);
    else if (std::isfinite(iv.lo))
      x(i) = iv.lo + 1.0;
    else if (std::isfinite(iv.hi))
      x(i) = iv.hi - 1.0;
  }
  return x;
}

json holonomy_section(const HolonomyAlgebra& alg,
                      const GroupVerdict& verdict) {
  auto [controllable, why] = controllability(verdict);
  json h;
  h["algebra_dim"] = alg.rank;
  h["commutant_skew_dim"] = verdict.commutant_skew_dim;
  h["label"] = verdict.label_string;
  h["controllable"] = controllable;
  h["singular_values"] = alg.singular_values;
  h["rank_tolerance"] = alg.rank_tolerance;
  h["rank_floor"] = alg.rank_floor;
  h["bracket_closure_residual"] = alg.bracket_closure_residual;
  h["discarded_logs"] = alg.discarded_logs;
  h["explanation"] = why;
  json notes = json::array();
  for (const auto& s : alg.notes) notes.push_back(s);
  for (const auto& s : verdict.notes) notes.push_back(s);
  h["notes"] = notes;
  json base = json::array();
  for (int i = 0; i < alg.base.size(); ++i) base.push_back(alg.base(i));
  h["base"] = base;
  return h;
}

CurvePath load_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw InputError("cannot read curve file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return CurvePath::from_json_text(ss.str());
}

struct CommonOpts {
  unsigned seed = 7;
  int steps = 512;
  int loops = 64;
  double rank_tol = 1e-6;
  std::string base_text;
  std::string out_path = "-";
};

// runs the estimate/classify pipeline
struct HolonomyRun {
  HolonomyAlgebra algebra;
  GroupVerdict verdict;
  Eigen::VectorXd base;
};

HolonomyRun run_holonomy(const ManifoldSpec& spec, const CommonOpts& o) {
  HolonomyRun r;
  r.base = parse_base(o.base_text, spec.dim());
  if (o.base_text.empty()) r.base = default_base(spec);
  LoopOptions lo;
  lo.steps_per_segment = o.steps;
  auto loops = generate_loops(spec, r.base, o.loops, o.seed, lo);
  EstimateOptions eo;
  eo.rank_tolerance = o.rank_tol;
  eo.steps = o.steps;
  r.algebra = estimate_algebra(spec, r.base, loops, eo);
  r.verdict = classify(r.algebra, spec.dim());
  return r;
}

int cmd_describe(const std::string& spec_name, const CommonOpts& o, std::ostream& out) {
  ManifoldSpec spec = load_manifold(spec_name);
  json r = base_report(spec, o.seed, o.steps);
  json dom = json::array();
  for (const Interval& iv : spec.domain()) {
    json pair = json::array();
    pair.push_back(std::isfinite(iv.lo) ? json(iv.lo) : json(nullptr));
    pair.push_back(std::isfinite(iv.hi) ? json(iv.hi) : json(nullptr));
    dom.push_back(pair);
  }
  json d;
  d["domain"] = dom;
  d["has_frame"] = spec.has_frame();
  json metric = json::array();
  for (int i = 0; i < spec.dim(); ++i) {
    json row = json::array();
    for (int j = 0; j < spec.dim(); ++j) row.push_back(spec.metric_expr(i, j).to_string());
    metric.push_back(row);
  }
  d["metric"] = metric;
  r["describe"] = d;
  write_report(r, o.out_path, out);
  return 0;
}

int cmd_holonomy(const std::string& spec_name, const CommonOpts& o, std::ostream& out) {
  ManifoldSpec spec = load_manifold(spec_name);
  HolonomyRun run = run_holonomy(spec, o);
  json r = base_report(spec, o.seed, o.steps);
  r["holonomy"] = holonomy_section(run.algebra, run.verdict);
  write_report(r, o.out_path, out);
  return run.algebra.bracket_closure_residual > 1e-5 ? 2 : 0;
}

int cmd_classify(const std::string& arg, const CommonOpts& o, std::ostream& out) {
  // a readable file is treated as a stored report, otherwise a spec name
  std::ifstream in(arg);
  if (in.good()) {
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw InputError(std::string("invalid report JSON: ") + e.what());
    }
    if (!doc.contains("holonomy") || !doc.contains("spec"))
      throw InputError("report file lacks a holonomy section");
    int n = doc["spec"]["dim"].get<int>();
    GroupVerdict v = classify_dims(doc["holonomy"]["algebra_dim"].get<int>(),
                                   doc["holonomy"]["commutant_skew_dim"].get<int>(), n);
    auto [controllable, why] = controllability(v);
    json r;
    r["tool_version"] = kToolVersion;
    r["timestamp"] = timestamp_now();
    r["spec_digest"] = doc.value("spec_digest", std::string("unknown"));
    r["spec"] = doc["spec"];
    r["seed"] = doc.value("seed", 0u);
    r["steps"] = doc.value("steps", 0);
    json h = doc["holonomy"];
    h["label"] = v.label_string;
    h["controllable"] = controllable;
    h["explanation"] = why;
    r["holonomy"] = h;
    write_report(r, o.out_path, out);
    return 0;
  }
  return cmd_holonomy(arg, o, out);
}

int cmd_sasaki(const std::string& spec_name, bool do_verify, int lattice,
               const CommonOpts& o, std::ostream& out) {
  ManifoldSpec spec = load_manifold(spec_name);
  HolonomyRun run = run_holonomy(spec, o);

  json r = base_report(spec, o.seed, o.steps);
  r["holonomy"] = holonomy_section(run.algebra, run.verdict);

  Eigen::MatrixXd J0 = invariant_complex_structure(run.algebra);
  ParallelStructure ps(spec, run.base, J0, o.steps);
  TensorFields S = extract_sasaki(ps);

  auto points = random_domain_points(spec, lattice, o.seed + 1, 0.4);
  points.push_back(run.base);

  json sec;
  {
    json j0 = json::array();
    int N = spec.dim() + 1;
    for (int i = 0; i < N; ++i) {
      json row = json::array();
      for (int j = 0; j < N; ++j) row.push_back(J0(i, j));
      j0.push_back(row);
    }
    sec["J0_adapted"] = j0;
  }
  {
    Eigen::VectorXd Zb = S.Z(run.base);
    json z = json::array();
    for (int i = 0; i < Zb.size(); ++i) z.push_back(Zb(i));
    sec["Z_at_base"] = z;
  }
  sec["scalar_defect"] = ps.scalar_defect(run.base);
  sec["path_independence_residual"] = ps.path_independence_residual(points.front());
  sec["lattice_points"] = static_cast<int>(points.size());

  int exit_code = 0;
  if (do_verify) {
    SasakiResiduals res = verify_sasaki(spec, S, points);
    json rr;
    rr["reeb_unit"] = res.reeb_unit;
    rr["alpha_of_Z"] = res.alpha_of_Z;
    rr["J_of_Z"] = res.J_of_Z;
    rr["J_squared"] = res.J_squared;
    rr["compat"] = res.compat;
    rr["nablaZ_vs_J"] = res.nablaZ_vs_J;
    rr["nablaJ_identity"] = res.nablaJ_identity;
    rr["killing"] = res.killing;
    rr["dalpha_2omega"] = res.dalpha_2omega;
    rr["omega_skew"] = res.omega_skew;
    rr["dalpha_of_Z"] = res.dalpha_of_Z;
    rr["curvature_identity"] = res.curvature_identity;
    rr["omega_min_singular_value"] = res.omega_min_singular_value;
    rr["fd_converged"] = res.fd_converged;
    sec["residuals"] = rr;
    if (res.max_identity_residual() > 1e-4) exit_code = 2;
    if (res.omega_min_singular_value < 0.1) exit_code = 2;
  }
  r["sasaki"] = sec;
  write_report(r, o.out_path, out);
  return exit_code;
}

int cmd_cone_verify(const std::string& spec_name, double s0, const CommonOpts& o,
                    std::ostream& out) {
  ManifoldSpec base_spec = load_manifold(spec_name);
  ManifoldSpec cone = cone_spec(base_spec);

  Eigen::VectorXd cone_base(cone.dim());
  cone_base.head(base_spec.dim()) = default_base(base_spec);
  cone_base(base_spec.dim()) = s0;

  LoopOptions lo;
  lo.steps_per_segment = o.steps;
  auto loops = generate_loops(cone, cone_base, o.loops, o.seed, lo);

  std::vector<double> residuals(loops.size(), 0.0);
  std::vector<double> refined(loops.size(), 0.0);
  parallel_for(static_cast<int>(loops.size()), 0, [&](int i) {
    residuals[static_cast<std::size_t>(i)] =
        verify_cone_isomorphism(base_spec, loops[static_cast<std::size_t>(i)], s0, o.steps)
            .residual;
    if (i < 4)
      refined[static_cast<std::size_t>(i)] =
          verify_cone_isomorphism(base_spec, loops[static_cast<std::size_t>(i)], s0,
                                  2 * o.steps)
              .residual;
  });

  double max_res = 0.0, mean = 0.0;
  for (double v : residuals) {
    max_res = std::max(max_res, v);
    mean += v;
  }
  mean /= static_cast<double>(residuals.size());
  double ratio = 0.0;
  for (int i = 0; i < 4 && i < static_cast<int>(loops.size()); ++i)
    if (refined[static_cast<std::size_t>(i)] > 0.0)
      ratio = std::max(ratio, residuals[static_cast<std::size_t>(i)] /
                                  refined[static_cast<std::size_t>(i)]);

  json r = base_report(base_spec, o.seed, o.steps);
  json sec;
  sec["s0"] = s0;
  sec["loops"] = static_cast<int>(loops.size());
  sec["residual_max"] = max_res;
  sec["residual_mean"] = mean;
  sec["refinement_ratio"] = ratio;
  r["cone"] = sec;
  write_report(r, o.out_path, out);
  return max_res > 1e-5 ? 2 : 0;
}

int cmd_roll_develop(const std::string& spec_name, const std::string& curve_path,
                     const CommonOpts& o, std::ostream& out) {
  ManifoldSpec spec = load_manifold(spec_name);
  CurvePath curve = load_curve(curve_path);
  RollingState q0 = standard_contact(spec, curve.start());
  RollingTrajectory traj = develop(spec, curve, q0, o.steps);
  RollingResiduals res = rolling_residuals(spec, traj);

  json r = base_report(spec, o.seed, o.steps);
  json sec;
  sec["ns_residual"] = res.ns;
  sec["nt_residual"] = res.nt;
  sec["state_defect"] = res.state_defect;
  sec["reorthonormalizations"] = traj.reorthonormalizations;
  json states = json::array();
  std::size_t stride = std::max<std::size_t>(1, traj.states.size() / 256);
  for (std::size_t k = 0; k < traj.states.size(); k += stride) {
    const RollingState& st = traj.states[k];
    json s;
    s["t"] = traj.t[k];
    json x = json::array(), xh = json::array(), fr = json::array();
    for (int i = 0; i < st.x.size(); ++i) x.push_back(st.x(i));
    for (int i = 0; i < st.xhat.size(); ++i) xh.push_back(st.xhat(i));
    for (int c = 0; c < st.A_frame.cols(); ++c) {
      json col = json::array();
      for (int i = 0; i < st.A_frame.rows(); ++i) col.push_back(st.A_frame(i, c));
      fr.push_back(col);
    }
    s["x"] = x;
    s["xhat"] = xh;
    s["frame"] = fr;
    states.push_back(s);
  }
  sec["trajectory"] = states;
  r["rolling"] = sec;
  write_report(r, o.out_path, out);
  return (res.ns > 1e-5 || res.nt > 1e-5) ? 2 : 0;
}

int cmd_roll_crosscheck(const std::string& spec_name, const std::string& loop_path,
                        const CommonOpts& o, std::ostream& out) {
  ManifoldSpec spec = load_manifold(spec_name);
  CurvePath loop = load_curve(loop_path);
  RollingState q0 = standard_contact(spec, loop.start());
  double residual = holonomy_crosscheck(spec, loop, q0, o.steps);

  json r = base_report(spec, o.seed, o.steps);
  json sec;
  sec["crosscheck_residual"] = residual;
  r["rolling"] = sec;
  write_report(r, o.out_path, out);
  return residual > 1e-4 ? 2 : 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rolling-holonomy engine"};
  app.require_subcommand(1);

  CommonOpts o;
  std::string spec_name, curve_path, arg;
  int lattice = 12;
  double s0 = 1.0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", o.seed, "seed for loop generation");
    cmd->add_option("--steps", o.steps, "integration steps per segment");
    cmd->add_option("--out", o.out_path, "report path, '-' for stdout");
  };

  CLI::App* describe = app.add_subcommand("describe", "summarize a manifold spec");
  describe->add_option("spec", spec_name)->required();
  add_common(describe);

  CLI::App* holonomy = app.add_subcommand("holonomy", "estimate the rolling holonomy");
  holonomy->add_option("spec", spec_name)->required();
  holonomy->add_option("--loops", o.loops, "number of seeded loops");
  holonomy->add_option("--rank-tol", o.rank_tol, "relative singular-value cutoff");
  holonomy->add_option("--base", o.base_text, "base point \"x1,x2,...\"");
  add_common(holonomy);

  CLI::App* classify_cmd = app.add_subcommand("classify", "classify a spec or report");
  classify_cmd->add_option("target", arg)->required();
  classify_cmd->add_option("--loops", o.loops);
  classify_cmd->add_option("--rank-tol", o.rank_tol);
  classify_cmd->add_option("--base", o.base_text);
  add_common(classify_cmd);

  CLI::App* sasaki = app.add_subcommand("sasaki", "extract / verify a Sasakian structure");
  sasaki->require_subcommand(1);
  CLI::App* sasaki_extract = sasaki->add_subcommand("extract");
  CLI::App* sasaki_verify = sasaki->add_subcommand("verify");
  for (CLI::App* cmd : {sasaki_extract, sasaki_verify}) {
    cmd->add_option("spec", spec_name)->required();
    cmd->add_option("--lattice", lattice, "verification sample count");
    cmd->add_option("--loops", o.loops);
    cmd->add_option("--base", o.base_text);
    add_common(cmd);
  }

  CLI::App* cone = app.add_subcommand("cone", "cone holonomy checks");
  cone->require_subcommand(1);
  CLI::App* cone_verify = cone->add_subcommand("verify");
  cone_verify->add_option("spec", spec_name)->required();
  cone_verify->add_option("--s0", s0, "base radial coordinate");
  cone_verify->add_option("--loops", o.loops);
  add_common(cone_verify);

  CLI::App* roll = app.add_subcommand("roll", "kinematic development");
  roll->require_subcommand(1);
  CLI::App* roll_develop = roll->add_subcommand("develop");
  roll_develop->add_option("spec", spec_name)->required();
  roll_develop->add_option("--curve", curve_path, "curve JSON file")->required();
  add_common(roll_develop);
  CLI::App* roll_cross = roll->add_subcommand("crosscheck");
  roll_cross->add_option("spec", spec_name)->required();
  roll_cross->add_option("--loop", curve_path, "loop JSON file")->required();
  add_common(roll_cross);

  std::vector<std::string> argv(args);
  try {
    std::vector<const char*> cargv;
    cargv.push_back("rollhol");
    for (const auto& a : argv) cargv.push_back(a.c_str());
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (describe->parsed()) return cmd_describe(spec_name, o, out);
    if (holonomy->parsed()) return cmd_holonomy(spec_name, o, out);
    if (classify_cmd->parsed()) return cmd_classify(arg, o, out);
    if (sasaki->parsed())
      return cmd_sasaki(spec_name, sasaki_verify->parsed(), lattice, o, out);
    if (cone->parsed()) return cmd_cone_verify(spec_name, s0, o, out);
    if (roll->parsed()) {
      if (roll_develop->parsed()) return cmd_roll_develop(spec_name, curve_path, o, out);
      return cmd_roll_crosscheck(spec_name, curve_path, o, out);
    }
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  err << "error: no subcommand\n";
  return 1;
}

}  // namespace rollhol
