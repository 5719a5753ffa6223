#pragma once

#include <cmath>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stinv/solve.hpp"

namespace stinv {

enum class Strategy { Variational, Elemwise, Postprocess };
enum class LambdaRule { Var45, Const12, Post310 };

/// Which adjoint drives the gradient.
///  Paper:    p_h in V_HT from a'_h (the discrete optimality system).
///  Discrete: transpose of the state operator, the exact gradient of the
///            discrete objective (used for finite-difference checks).
enum class AdjointKind { Paper, Discrete };

inline double proj_Fplus(double v) { return v > 0.0 ? v : 0.0; }

inline std::vector<double> proj_Fplus(std::vector<double> v) {
  for (double& x : v) x = proj_Fplus(x);
  return v;
}

inline Field proj_Fplus(Field f) {
  return [f = std::move(f)](double x, double t) { return proj_Fplus(f(x, t)); };
}

inline std::pair<double, double> lambda_exponents(LambdaRule rule) {
  switch (rule) {
    case LambdaRule::Var45: return {0.8, 0.8};
    case LambdaRule::Const12: return {0.5, 2.0 / 3.0};
    case LambdaRule::Post310: return {0.3, 0.4};
  }
  return {0.0, 0.0};
}

inline double lambda_rule(LambdaRule rule, double h, double eps, double c) {
  if (h < 0.0 || eps < 0.0 || !(c > 0.0))
    throw Error(ErrorCode::NonpositiveInput, "lambda rule needs h >= 0, eps >= 0 and c > 0");
  const auto [alpha, beta] = lambda_exponents(rule);
  return c * (std::pow(h, alpha) + std::pow(eps, beta));
}

/// Element means by the degree-5 rule.
inline std::vector<double> Pi_d(const SpaceTimeMesh& mesh, const MeshGeometry& geo, const Field& f) {
  std::vector<double> out(mesh.num_elements(), 0.0);
  for (std::size_t e = 0; e < out.size(); ++e)
    for (int q = 0; q < geo.nq(); ++q) {
      const Point& p = geo.point(static_cast<int>(e), q);
      out[e] += geo.rule.weights[q] * f(p.x, p.t);
    }
  return out;
}

/// Element means of quadrature-point samples.
inline std::vector<double> Pi_d_qp(const MeshGeometry& geo, const std::vector<double>& qp_values) {
  const int nq = geo.nq();
  std::vector<double> out(geo.area.size(), 0.0);
  for (std::size_t e = 0; e < out.size(); ++e)
    for (int q = 0; q < nq; ++q) out[e] += geo.rule.weights[q] * qp_values[e * nq + q];
  return out;
}

/// Barycentric interpolant.
inline std::vector<double> pi_d(const SpaceTimeMesh& mesh, const Field& f) {
  std::vector<double> out(mesh.num_elements());
  for (std::size_t e = 0; e < out.size(); ++e) {
    const Point c = mesh.barycenter(static_cast<int>(e));
    out[e] = f(c.x, c.t);
  }
  return out;
}

class SourceField {
 public:
  enum class Kind { Variational, ElemwiseConst, Postprocessed };

  SourceField() = default;

  static SourceField closure(Kind kind, const DiscreteProblem& P, const FeFunction& p, double lambda) {
    SourceField s;
    s.kind_ = kind;
    s.mesh_ = P.mesh_ptr();
    s.ell_ = P.data().ell;
    s.p_nodal_ = p.nodal();
    s.lambda_ = lambda;
    return s;
  }

  static SourceField elemwise(std::shared_ptr<const SpaceTimeMesh> mesh, std::vector<double> values) {
    SourceField s;
    s.kind_ = Kind::ElemwiseConst;
    s.mesh_ = std::move(mesh);
    for (double& v : values) v = proj_Fplus(v);
    s.values_ = std::move(values);
    return s;
  }

  Kind kind() const { return kind_; }
  const SpaceTimeMesh& mesh() const { return *mesh_; }
  const std::vector<double>& element_values() const { return values_; }
  double lambda() const { return lambda_; }

  double value(int e, const std::array<double, 3>& bary, const Point& p) const {
    if (kind_ == Kind::ElemwiseConst) return values_[e];
    return proj_Fplus(-ell_(p.x, p.t) * eval_nodal(*mesh_, p_nodal_, e, bary) / lambda_);
  }

  double operator()(double x, double t) const {
    const Location loc = mesh_->locate(x, t);
    return value(loc.element, loc.bary, {x, t});
  }

  std::vector<double> qp_values(const MeshGeometry& geo) const {
    const int nq = geo.nq();
    std::vector<double> out(geo.qp.size());
    for (std::size_t e = 0; e < mesh_->num_elements(); ++e)
      for (int q = 0; q < nq; ++q)
        out[e * nq + q] = value(static_cast<int>(e), geo.rule.bary[q], geo.point(static_cast<int>(e), q));
    return out;
  }

 private:
  Kind kind_ = Kind::ElemwiseConst;
  std::shared_ptr<const SpaceTimeMesh> mesh_;
  Field ell_;
  Vector p_nodal_;
  double lambda_ = 1.0;
  std::vector<double> values_;
};

struct OptimizerControls {
  int max_iter = 2000;
  /// Stop once the fixed-point residual is below tol * (||f|| + 1).
  double tol = 1e-8;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 30;
  /// Window of the non-monotone reference value; 1 gives plain Armijo.
  int nonmonotone_window = 10;
  double step_min = 1e-12;
  double step_max = 1e12;
  AdjointKind adjoint = AdjointKind::Paper;
};

struct InverseProblemSetup {
  double lambda = 1.0;
  /// Observation data z_{d,h} as nodal values on the unconstrained space
  /// (only window nodes matter).
  Vector z_nodal;
  OptimizerControls controls;

  InverseProblemSetup(double lam, Vector z, OptimizerControls c = {}) : lambda(lam), z_nodal(std::move(z)), controls(c) {
    if (!(lambda > 0.0)) throw Error(ErrorCode::NonpositiveInput, "lambda must be > 0");
    if (!(controls.tol > 0.0)) throw Error(ErrorCode::NonpositiveInput, "tolerance must be > 0");
    if (controls.max_iter < 1) throw Error(ErrorCode::NonpositiveInput, "max_iter must be >= 1");
  }
};

struct OptimalityCertificate {
  double J = 0.0;
  double fixed_point_residual = 0.0;
  double vi_margin = 0.0;
  int iterations = 0;
  int evaluations = 0;
  /// Accepted steps that increased J (the non-monotone line search allows them).
  int ascent_steps = 0;
  bool converged = false;
};

/// Discrete control: qp samples (variational) or element values (element-wise).
struct ControlSpace {
  const DiscreteProblem* P = nullptr;
  bool elementwise = false;

  std::size_t size() const {
    return elementwise ? P->mesh().num_elements() : P->geometry().qp.size();
  }
  double weight(std::size_t k) const {
    const auto& geo = P->geometry();
    if (elementwise) return geo.area[k];
    const std::size_t nq = geo.rule.size();
    return geo.area[k / nq] * geo.rule.weights[k % nq];
  }
  double dot(const std::vector<double>& a, const std::vector<double>& b) const {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += weight(k) * a[k] * b[k];
    return s;
  }
  double norm(const std::vector<double>& a) const { return std::sqrt(dot(a, a)); }
  std::vector<double> to_qp(const std::vector<double>& x) const {
    if (!elementwise) return x;
    const int nq = P->geometry().nq();
    std::vector<double> out(x.size() * nq);
    for (std::size_t e = 0; e < x.size(); ++e)
      for (int q = 0; q < nq; ++q) out[e * nq + q] = x[e];
    return out;
  }
  /// L2-metric representative of the linear functional phi -> (ell w, phi).
  std::vector<double> from_ell_times(const std::vector<double>& w_qp) const {
    const auto& ell = P->ell_qp();
    std::vector<double> v(w_qp.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = ell[k] * w_qp[k];
    return elementwise ? Pi_d_qp(P->geometry(), v) : v;
  }
};

struct Evaluation {
  double J = 0.0;
  std::vector<double> grad;
  std::vector<double> ell_p;  // data term of the gradient
  FeFunction u;
  FeFunction p;
};

/// J and its gradient ell p_h + lambda f in the representation of x.
inline Evaluation evaluate_objective(const ControlSpace& cs, const InverseProblemSetup& setup,
                                     const std::vector<double>& x, AdjointKind kind) {
  const DiscreteProblem& P = *cs.P;
  Evaluation ev;
  ev.u = P.solve_state_qp(cs.to_qp(x));
  const Vector r = ev.u.nodal() - setup.z_nodal;
  const double misfit = 0.5 * r.dot(P.mass_omega() * r);
  ev.p = kind == AdjointKind::Paper ? P.solve_adjoint_nodal(r) : P.solve_discrete_adjoint_nodal(r);
  ev.ell_p = cs.from_ell_times(sample_qp_nodal(P.mesh(), P.geometry(), ev.p.nodal()));
  ev.grad.resize(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) ev.grad[k] = ev.ell_p[k] + setup.lambda * x[k];
  ev.J = misfit + 0.5 * setup.lambda * cs.dot(x, x);
  return ev;
}

inline std::vector<double> fixed_point_map(const std::vector<double>& ell_p, double lambda) {
  std::vector<double> out(ell_p.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = proj_Fplus(-ell_p[k] / lambda);
  return out;
}

inline double fixed_point_residual(const ControlSpace& cs, const std::vector<double>& x,
                                   const std::vector<double>& ell_p, double lambda) {
  const auto y = fixed_point_map(ell_p, lambda);
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += cs.weight(k) * (x[k] - y[k]) * (x[k] - y[k]);
  return std::sqrt(s);
}

/// min over random nonnegative unit probes g of (grad, g - f).
inline double vi_margin(const ControlSpace& cs, const std::vector<double>& x, const std::vector<double>& grad,
                        int probes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double gf = cs.dot(grad, x);
  double margin = std::numeric_limits<double>::infinity();
  std::vector<double> g(x.size());
  for (int k = 0; k < probes; ++k) {
    for (double& v : g) v = u(rng);
    const double n = cs.norm(g);
    margin = std::min(margin, cs.dot(grad, g) / n - gf);
  }
  return probes > 0 ? margin : 0.0;
}

struct InverseResult {
  Strategy strategy = Strategy::Variational;
  SourceField f;
  std::vector<double> coefficients;  // qp samples or element values
  FeFunction u;
  FeFunction p;
  OptimalityCertificate certificate;
  std::optional<ErrorCode> status;
};

namespace detail {

/// Projected gradient with Barzilai-Borwein steps, seeded with 1/lambda, and a
/// non-monotone Armijo test. When the gradient comes from the V_HT adjoint
/// (not the exact gradient of J) the test can become unsatisfiable close to
/// the fixed point; a trial that still reduces the fixed-point residual is then
/// accepted.
inline InverseResult projected_gradient(const ControlSpace& cs, const InverseProblemSetup& setup,
                                        std::vector<double> x) {
  const auto& ctl = setup.controls;
  const double lam = setup.lambda;
  InverseResult res;
  auto& cert = res.certificate;
  for (double& v : x) v = proj_Fplus(v);
  Evaluation cur = evaluate_objective(cs, setup, x, ctl.adjoint);
  cert.evaluations = 1;
  double R = fixed_point_residual(cs, x, cur.ell_p, lam);
  std::deque<double> history{cur.J};
  double step = 1.0 / lam;
  std::vector<double> trial(x.size());
  while (cert.iterations < ctl.max_iter && !(R < ctl.tol * (cs.norm(x) + 1.0))) {
    const double Jref = *std::max_element(history.begin(), history.end());
    double s = step;
    Evaluation next;
    double Rn = 0.0;
    for (int bt = 0;; ++bt) {
      for (std::size_t k = 0; k < x.size(); ++k) trial[k] = proj_Fplus(x[k] - s * cur.grad[k]);
      double gd = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) gd += cs.weight(k) * cur.grad[k] * (trial[k] - x[k]);
      next = evaluate_objective(cs, setup, trial, ctl.adjoint);
      ++cert.evaluations;
      Rn = fixed_point_residual(cs, trial, next.ell_p, lam);
      const bool armijo = next.J <= Jref + ctl.armijo_c * gd;
      const bool progress = ctl.adjoint == AdjointKind::Paper && bt >= 2 && Rn < R;
      if (armijo || progress || bt >= ctl.max_backtracks || s * ctl.backtrack < ctl.step_min) break;
      s *= ctl.backtrack;
    }
    std::vector<double> dx(x.size()), dg(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      dx[k] = trial[k] - x[k];
      dg[k] = next.grad[k] - cur.grad[k];
    }
    const double sy = cs.dot(dx, dg), ss = cs.dot(dx, dx);
    step = sy > 0.0 ? std::clamp(ss / sy, ctl.step_min, ctl.step_max) : 1.0 / lam;
    if (next.J > cur.J) ++cert.ascent_steps;
    x.swap(trial);
    cur = std::move(next);
    R = Rn;
    history.push_back(cur.J);
    while (static_cast<int>(history.size()) > std::max(1, ctl.nonmonotone_window)) history.pop_front();
    ++cert.iterations;
  }
  cert.J = cur.J;
  cert.fixed_point_residual = R;
  cert.converged = R < ctl.tol * (cs.norm(x) + 1.0);
  cert.vi_margin = vi_margin(cs, x, cur.grad, 100, 20240611);
  if (!cert.converged) res.status = ErrorCode::MaxIterExceeded;
  res.coefficients = std::move(x);
  res.u = std::move(cur.u);
  res.p = std::move(cur.p);
  return res;
}

}  // namespace detail

inline Evaluation objective_and_gradient(const DiscreteProblem& P, const InverseProblemSetup& setup,
                                         const std::vector<double>& x, bool elementwise) {
  ControlSpace cs{&P, elementwise};
  if (x.size() != cs.size()) throw Error(ErrorCode::ValidationError, "control vector has the wrong length");
  return evaluate_objective(cs, setup, x, setup.controls.adjoint);
}

inline InverseResult solve_variational(const DiscreteProblem& P, const InverseProblemSetup& setup,
                                       std::vector<double> x0 = {}) {
  ControlSpace cs{&P, false};
  if (x0.empty()) x0.assign(cs.size(), 0.0);
  InverseResult res = detail::projected_gradient(cs, setup, std::move(x0));
  res.strategy = Strategy::Variational;
  res.f = SourceField::closure(SourceField::Kind::Variational, P, res.p, setup.lambda);
  return res;
}

inline InverseResult solve_elemwise(const DiscreteProblem& P, const InverseProblemSetup& setup,
                                    std::vector<double> x0 = {}) {
  ControlSpace cs{&P, true};
  if (x0.empty()) x0.assign(cs.size(), 0.0);
  InverseResult res = detail::projected_gradient(cs, setup, std::move(x0));
  res.strategy = Strategy::Elemwise;
  res.f = SourceField::elemwise(P.mesh_ptr(), res.coefficients);
  return res;
}

/// f = max(0, -ell p_h / lambda) around the element-wise run's final adjoint.
inline SourceField postprocess(const DiscreteProblem& P, const InverseProblemSetup& setup,
                               const InverseResult& elemwise) {
  if (elemwise.strategy != Strategy::Elemwise)
    throw Error(ErrorCode::ValidationError, "post-processing needs an element-wise run");
  return SourceField::closure(SourceField::Kind::Postprocessed, P, elemwise.p, setup.lambda);
}

inline InverseResult solve_inverse(const DiscreteProblem& P, const InverseProblemSetup& setup, Strategy s) {
  if (s == Strategy::Variational) return solve_variational(P, setup);
  InverseResult res = solve_elemwise(P, setup);
  if (s == Strategy::Postprocess) {
    res.f = postprocess(P, setup, res);
    res.strategy = Strategy::Postprocess;
  }
  return res;
}

struct ElementKkt {
  /// Lowest gradient value over inactive elements (f_K = 0); should be >= 0.
  double min_inactive = std::numeric_limits<double>::infinity();
  /// Largest |gradient| over active elements (f_K > 0); should be ~0.
  double max_active = 0.0;
};

inline ElementKkt elementwise_kkt(const DiscreteProblem& P, const InverseProblemSetup& setup,
                                  const InverseResult& res) {
  ControlSpace cs{&P, true};
  const auto ev = evaluate_objective(cs, setup, res.coefficients, AdjointKind::Paper);
  ElementKkt k;
  for (std::size_t e = 0; e < res.coefficients.size(); ++e) {
    if (res.coefficients[e] > 0.0) k.max_active = std::max(k.max_active, std::abs(ev.grad[e]));
    else k.min_inactive = std::min(k.min_inactive, ev.grad[e]);
  }
  return k;
}

/// Total area of elements on which the quadrature samples of f are partly zero
/// and partly positive.
inline double free_boundary_measure(const DiscreteProblem& P, const std::vector<double>& f_qp) {
  const auto& geo = P.geometry();
  const int nq = geo.nq();
  double area = 0.0;
  for (std::size_t e = 0; e < geo.area.size(); ++e) {
    int pos = 0;
    for (int q = 0; q < nq; ++q) pos += f_qp[e * nq + q] > 0.0;
    if (pos > 0 && pos < nq) area += geo.area[e];
  }
  return area;
}

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Variational: return "variational";
    case Strategy::Elemwise: return "elemwise";
    case Strategy::Postprocess: return "postprocess";
  }
  return "?";
}

inline const char* to_string(LambdaRule r) {
  switch (r) {
    case LambdaRule::Var45: return "var45";
    case LambdaRule::Const12: return "const12";
    case LambdaRule::Post310: return "post310";
  }
  return "?";
}

}  // namespace stinv
