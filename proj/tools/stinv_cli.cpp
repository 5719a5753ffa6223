// stinv: batch front end for the space-time inverse source solver.
//
//   stinv <command> --config FILE [--set key=value ...] [command options]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "stinv/config.hpp"
#include "stinv/experiments.hpp"

namespace fs = std::filesystem;
using namespace stinv;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  bool reproducible = false;
};

struct Outputs {
  fs::path dir;

  explicit Outputs(const RunConfig& c) : dir(c.out_dir) { fs::create_directories(dir); }

  std::ofstream open(const std::string& name) const {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error(ErrorCode::ValidationError, "cannot write " + (dir / name).string());
    f.precision(17);
    return f;
  }
};

RunConfig load(const Common& c, const std::vector<std::string>& cli_echo) {
  RunConfig cfg = parse_config(c.config, c.sets);
  Outputs out(cfg);
  auto f = out.open("resolved_config");
  f << "# resolved from " << c.config << '\n';
  for (std::size_t k = 0; k < c.sets.size(); ++k) f << "# --set " << c.sets[k] << '\n';
  for (const auto& e : cli_echo) f << "# " << e << '\n';
  write_resolved_config(cfg, f);
  return cfg;
}

void zero_timings(StudyReport& rep, bool reproducible) {
  if (!reproducible) return;
  for (auto& r : rep.rows) r.seconds = 0.0;
}

/// Oracle member of the config's mesh family: factor 8 * 2^(levels-1) + 1 in
/// every count, so it is finer than every study level by at least 8 and never
/// nested in them.
MeshParams oracle_params(const RunConfig& cfg) {
  MeshParams p = cfg.mesh_params();
  p.right_counts = resolve_right_counts(p);
  const int f = 8 * (1 << (cfg.levels - 1)) + 1;
  p.n_time *= f;
  p.n_left *= f;
  p.n_right *= f;
  for (auto& c : p.right_counts) c *= f;
  return p;
}

SyntheticDataset make_dataset(const RunConfig& cfg) {
  auto oracle = make_problem(oracle_params(cfg), cfg.problem_data());
  return synthesize_inverse_dataset(oracle, cfg.zeta(), cfg.eps, cfg.seed);
}

int cmd_mesh_info(const Common& c) {
  const RunConfig cfg = load(c, {"mesh-info"});
  const SpaceTimeMesh mesh = build_fitted_mesh(cfg.mesh_params());
  const MismatchReport m = mismatch_diagnostics(mesh, cfg.motion());
  std::cout.precision(10);
  std::cout << "nodes " << mesh.num_nodes() << '\n'
            << "elements " << mesh.num_elements() << '\n'
            << "h " << mesh.h() << '\n'
            << "quasi_uniformity " << mesh.quasi_uniformity() << '\n'
            << "interface_elements " << m.interface_count << '\n'
            << "mismatch_max " << m.max_overlap << '\n'
            << "mismatch_total " << m.mismatch_area << '\n'
            << "strip_area " << m.strip_area << '\n';
  Outputs out(cfg);
  auto f = out.open("mesh.txt");
  write_mesh_listing(mesh, f);
  return 0;
}

int cmd_forward(const Common& c, const std::string& case_id, const std::string& source) {
  const RunConfig cfg = load(c, {"forward --case " + (case_id.empty() ? "none" : case_id) + " --source " + source});
  Outputs out(cfg);
  std::cout.precision(10);
  if (!case_id.empty()) {
    const ManufacturedCase mc = build_manufactured_case(case_id, cfg.kappa1, cfg.kappa2, cfg.domain);
    MeshParams mp = cfg.mesh_params();
    mp.motion = mc.motion;
    auto P = make_problem(mp, mc.problem_data());
    const FeFunction uh = solve_manufactured(*P, mc);
    std::cout << "case " << mc.id << '\n'
              << "dofs " << P->space(SpaceKind::VH0)->size() << '\n'
              << "err_l2 " << l2_error(P->mesh(), P->geometry(), mc.U.value, uh) << '\n'
              << "err_h0 " << norm_h0_error(*P, mc.U, uh) << '\n';
    auto f = out.open("forward.csv");
    f << "x,t,u\n";
    const Vector u = uh.nodal();
    for (std::size_t i = 0; i < P->mesh().num_nodes(); ++i)
      f << P->mesh().node(static_cast<int>(i)).x << ',' << P->mesh().node(static_cast<int>(i)).t << ',' << u[i] << '\n';
    return 0;
  }
  auto P = make_problem(cfg.mesh_params(), cfg.problem_data());
  const Field fsrc = Expression::parse(source).field();
  const Vector u = P->solve_state(fsrc).nodal() + P->solve_offset().nodal();
  const FeFunction U{P->space(SpaceKind::P1Free), u};
  std::cout << "dofs " << P->space(SpaceKind::VH0)->size() << '\n'
            << "norm_l2 " << l2_norm(P->mesh(), P->geometry(), U) << '\n'
            << "norm_l2_omega " << l2_norm(P->mesh(), P->geometry(), U, NormRegion::OmegaT) << '\n';
  auto f = out.open("forward.csv");
  f << "x,t,u\n";
  for (std::size_t i = 0; i < P->mesh().num_nodes(); ++i)
    f << P->mesh().node(static_cast<int>(i)).x << ',' << P->mesh().node(static_cast<int>(i)).t << ',' << u[i] << '\n';
  return 0;
}

int cmd_invert(const Common& c) {
  const RunConfig cfg = load(c, {"invert"});
  Outputs out(cfg);
  const SyntheticDataset ds = make_dataset(cfg);
  auto P = make_problem(cfg.mesh_params(), cfg.problem_data());
  const double lam = cfg.lambda_for(P->mesh().h(), cfg.eps);
  const InverseProblemSetup setup(lam, ds.data_on(P->mesh()));
  const InverseResult res = solve_inverse(*P, setup, cfg.strategy);
  const auto fq = res.f.qp_values(P->geometry());
  double fn = 0.0;
  for (std::size_t k = 0; k < fq.size(); ++k) {
    const auto e = k / P->geometry().rule.size(), q = k % P->geometry().rule.size();
    fn += P->geometry().area[e] * P->geometry().rule.weights[q] * fq[k] * fq[k];
  }
  const auto& cert = res.certificate;
  std::cout.precision(10);
  std::cout << "strategy " << to_string(cfg.strategy) << '\n'
            << "lambda " << lam << '\n'
            << "norm_f " << std::sqrt(fn) << '\n'
            << "J " << cert.J << '\n'
            << "fixed_point_residual " << cert.fixed_point_residual << '\n'
            << "vi_margin " << cert.vi_margin << '\n'
            << "iterations " << cert.iterations << '\n'
            << "converged " << (cert.converged ? "yes" : "no") << '\n';
  auto f = out.open("f_samples.csv");
  f << "element,x,t,f\n";
  for (std::size_t e = 0; e < P->mesh().num_elements(); ++e) {
    const Point b = P->mesh().barycenter(static_cast<int>(e));
    f << e << ',' << b.x << ',' << b.t << ',' << res.f(b.x, b.t) << '\n';
  }
  auto g = out.open("certificate.txt");
  g << "J " << cert.J << "\nfixed_point_residual " << cert.fixed_point_residual << "\nvi_margin " << cert.vi_margin
    << "\niterations " << cert.iterations << "\nconverged " << (cert.converged ? 1 : 0) << '\n';
  if (res.status) {
    std::cerr << "error code=" << to_string(*res.status) << " message=\"optimizer stopped at max_iter\"\n";
    return 3;
  }
  return 0;
}

int cmd_study(const Common& c, const std::string& kind, const std::string& case_id) {
  const RunConfig cfg = load(c, {"study --kind " + kind + " --case " + case_id});
  Outputs out(cfg);
  StudyReport rep;
  if (kind == "forward") {
    const ManufacturedCase mc = build_manufactured_case(case_id, cfg.kappa1, cfg.kappa2, cfg.domain);
    rep = forward_study(mc, cfg.mesh_params(), cfg.levels);
  } else if (kind == "mismatch") {
    rep = mismatch_study(cfg.mesh_params(), cfg.levels);
  } else if (kind == "adjoint") {
    const Field r = cfg.zeta();
    rep = adjoint_study(cfg.problem_data(), cfg.mesh_params(), cfg.levels, r);
  } else if (kind == "inverse") {
    InverseStudySpec spec;
    spec.base = cfg.mesh_params();
    spec.data = cfg.problem_data();
    spec.levels = cfg.levels;
    if (!cfg.lambda) throw ConfigError(ErrorCode::ValidationError, "inverse.lambda", "inverse study needs a fixed lambda");
    spec.lambda = *cfg.lambda;
    rep = inverse_study(make_dataset(cfg), spec);
  } else if (kind == "lambda") {
    if (!cfg.lambda_rule) throw ConfigError(ErrorCode::ValidationError, "inverse.lambda_rule", "lambda study needs a rule");
    RunConfig exact = cfg;
    exact.eps = 0.0;
    LambdaRuleStudySpec spec;
    spec.base = cfg.mesh_params();
    spec.data = cfg.problem_data();
    spec.levels = cfg.levels;
    spec.rule = *cfg.lambda_rule;
    spec.c = cfg.lambda_c;
    spec.seed = cfg.seed;
    spec.strategy = cfg.strategy;
    rep = lambda_rule_study(make_dataset(exact), spec);
  } else {
    throw ConfigError(ErrorCode::ValidationError, "--kind", "expected forward, adjoint, inverse, lambda or mismatch");
  }
  zero_timings(rep, c.reproducible);
  const std::string name = "study_" + kind + ".csv";
  {
    auto f = out.open(name);
    rep.write_csv(f);
  }
  rep.write_csv(std::cout);
  for (const auto& [k, v] : rep.metadata) std::cout << "# " << k << ' ' << v << '\n';
  for (const auto& fl : rep.flags) std::cout << "flag " << fl << '\n';
  if (rep.incomplete) {
    std::cerr << "error code=INCOMPLETE message=\"at least one level did not converge\"\n";
    return 3;
  }
  return 0;
}

int cmd_gradcheck(const Common& c, int probes, double step) {
  const RunConfig cfg = load(c, {"gradcheck --probes " + std::to_string(probes)});
  const SyntheticDataset ds = make_dataset(cfg);
  std::cout.precision(6);
  std::cout << "level,h,max_rel_error,max_rel_error_vht_adjoint\n";
  double worst = 0.0;
  for (int L = 0; L < cfg.levels; ++L) {
    auto P = make_problem(family_member(cfg.mesh_params(), L), cfg.problem_data());
    const InverseProblemSetup setup(cfg.lambda_for(P->mesh().h(), cfg.eps), ds.data_on(P->mesh()));
    const GradientCheck g = gradient_check(*P, setup, cfg.strategy != Strategy::Variational, probes, step);
    worst = std::max(worst, g.max_rel_error);
    std::cout << L << ',' << P->mesh().h() << ',' << g.max_rel_error << ',' << g.max_rel_error_paper << '\n';
  }
  return worst <= 1e-6 ? 0 : 3;
}

std::string bare(const Error& e) {
  std::string m = e.what();
  std::string pre = std::string(to_string(e.code())) + ": ";
  if (m.rfind(pre, 0) == 0) m.erase(0, pre.size());
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    pre = ce->where() + ": ";
    if (m.rfind(pre, 0) == 0) m.erase(0, pre.size());
  }
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time FEM inverse source solver"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--set", common.sets, "override key=value (repeatable, applied in order)");
    sub->add_flag("--reproducible", common.reproducible, "write 0 for wall-clock columns");
  };
  auto* mesh = app.add_subcommand("mesh-info", "mesh statistics and listing");
  add_common(mesh);
  std::string case_id, study_case = "M1", source = "0", kind = "forward";
  auto* fwd = app.add_subcommand("forward", "state solve or manufactured case");
  add_common(fwd);
  fwd->add_option("--case", case_id, "manufactured case (M1, M2)");
  fwd->add_option("--source", source, "source f as an expression in x, t");
  auto* inv = app.add_subcommand("invert", "Tikhonov inversion on synthetic data");
  add_common(inv);
  auto* study = app.add_subcommand("study", "mesh-refinement study to CSV");
  add_common(study);
  study->add_option("--kind", kind, "forward, adjoint, inverse, lambda or mismatch");
  study->add_option("--case", study_case, "manufactured case for --kind forward");
  int probes = 20;
  double step = 1e-5;
  auto* grad = app.add_subcommand("gradcheck", "central differences against the adjoint gradient");
  add_common(grad);
  grad->add_option("--probes", probes, "random directions per level");
  grad->add_option("--step", step, "difference step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*mesh) return cmd_mesh_info(common);
    if (*fwd) return cmd_forward(common, case_id, source);
    if (*inv) return cmd_invert(common);
    if (*study) return cmd_study(common, kind, study_case);
    if (*grad) return cmd_gradcheck(common, probes, step);
  } catch (const ConfigError& e) {
    std::cerr << "error code=" << to_string(e.code()) << " where=\"" << e.where() << "\" message=\"" << bare(e)
              << "\"\n";
    return 2;
  } catch (const Error& e) {
    const bool config = e.code() == ErrorCode::ParseError || e.code() == ErrorCode::ValidationError ||
                        e.code() == ErrorCode::UnknownCase || e.code() == ErrorCode::DomainViolation;
    std::cerr << "error code=" << to_string(e.code()) << " message=\"" << bare(e) << "\"\n";
    return config ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error code=INTERNAL message=\"" << e.what() << "\"\n";
    return 3;
  }
  return 0;
}
