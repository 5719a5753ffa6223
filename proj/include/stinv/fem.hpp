#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "stinv/error.hpp"
#include "stinv/mesh.hpp"
#include "stinv/quadrature.hpp"

namespace stinv {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Field = std::function<double(double x, double t)>;

inline Field constant_field(double c) {
  return [c](double, double) { return c; };
}

enum class SpaceKind { VH0, VHT, P1Free };

inline const char* to_string(SpaceKind k) {
  switch (k) {
    case SpaceKind::VH0: return "V_H0";
    case SpaceKind::VHT: return "V_HT";
    case SpaceKind::P1Free: return "P1_FREE";
  }
  return "?";
}

class DofMap {
 public:
  static constexpr int kConstrained = -1;

  DofMap(const SpaceTimeMesh& mesh, SpaceKind kind) : kind_(kind) {
    std::uint8_t mask = 0;
    if (kind == SpaceKind::VH0) mask = boundary::Lateral | boundary::Initial;
    if (kind == SpaceKind::VHT) mask = boundary::Lateral | boundary::Final;
    node_to_dof_.assign(mesh.num_nodes(), kConstrained);
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
      if (mesh.boundary_tag(static_cast<int>(i)) & mask) continue;
      node_to_dof_[i] = static_cast<int>(dof_to_node_.size());
      dof_to_node_.push_back(static_cast<int>(i));
    }
  }

  SpaceKind kind() const { return kind_; }
  int size() const { return static_cast<int>(dof_to_node_.size()); }
  int num_nodes() const { return static_cast<int>(node_to_dof_.size()); }
  int dof(int node) const { return node_to_dof_[node]; }
  int node(int dof) const { return dof_to_node_[dof]; }

  /// Full nodal vector with zeros at constrained nodes.
  Vector expand(const Vector& coeffs) const {
    Vector out = Vector::Zero(num_nodes());
    for (int d = 0; d < size(); ++d) out[dof_to_node_[d]] = coeffs[d];
    return out;
  }

  /// Restriction of a nodal (or nodal-indexed load) vector to the dofs.
  Vector restrict(const Vector& nodal) const {
    Vector out(size());
    for (int d = 0; d < size(); ++d) out[d] = nodal[dof_to_node_[d]];
    return out;
  }

 private:
  SpaceKind kind_;
  std::vector<int> node_to_dof_;
  std::vector<int> dof_to_node_;
};

class FeFunction {
 public:
  FeFunction() = default;
  FeFunction(std::shared_ptr<const DofMap> map, Vector coeffs) : map_(std::move(map)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != map_->size()) throw Error(ErrorCode::ValidationError, "coefficient length does not match dof count");
  }
  static FeFunction zero(std::shared_ptr<const DofMap> map) {
    const int n = map->size();
    return {std::move(map), Vector::Zero(n)};
  }

  const DofMap& dofmap() const { return *map_; }
  std::shared_ptr<const DofMap> dofmap_ptr() const { return map_; }
  const Vector& coeffs() const { return coeffs_; }
  Vector& coeffs() { return coeffs_; }
  Vector nodal() const { return map_->expand(coeffs_); }

  double node_value(int node) const {
    const int d = map_->dof(node);
    return d == DofMap::kConstrained ? 0.0 : coeffs_[d];
  }

  double value(const SpaceTimeMesh& mesh, int e, const std::array<double, 3>& bary) const {
    const auto& el = mesh.element(e);
    return bary[0] * node_value(el[0]) + bary[1] * node_value(el[1]) + bary[2] * node_value(el[2]);
  }

  double operator()(const SpaceTimeMesh& mesh, double x, double t) const {
    const Location loc = mesh.locate(x, t);
    return value(mesh, loc.element, loc.bary);
  }

 private:
  std::shared_ptr<const DofMap> map_;
  Vector coeffs_;
};

/// Evaluates a nodal P1 vector at (element, barycentric) or at a point.
inline double eval_nodal(const SpaceTimeMesh& mesh, const Vector& nodal, int e, const std::array<double, 3>& bary) {
  const auto& el = mesh.element(e);
  return bary[0] * nodal[el[0]] + bary[1] * nodal[el[1]] + bary[2] * nodal[el[2]];
}

inline double eval_nodal(const SpaceTimeMesh& mesh, const Vector& nodal, double x, double t) {
  const Location loc = mesh.locate(x, t);
  return eval_nodal(mesh, nodal, loc.element, loc.bary);
}

struct ProblemData {
  double kappa1 = 1.0;
  double kappa2 = 1.0;
  Field ell = constant_field(1.0);
  Field g = constant_field(0.0);
  InterfaceMotion motion;

  double kappa(int subdomain) const { return subdomain == 1 ? kappa1 : kappa2; }

  /// Sampling checks on a regular grid over the domain.
  void validate(const Domain& d, int samples = 41) const {
    if (!(kappa1 > 0.0) || !(kappa2 > 0.0)) throw Error(ErrorCode::ValidationError, "kappa.1 and kappa.2 must be > 0");
    for (int i = 0; i <= samples; ++i) {
      for (int k = 0; k <= samples; ++k) {
        const double x = d.a + (d.b - d.a) * i / samples;
        const double t = d.T * k / samples;
        const double lv = ell(x, t), gv = g(x, t);
        if (!(lv > 0.0) || !std::isfinite(lv))
          throw Error(ErrorCode::ValidationError, "ell must be positive on the domain");
        if (!(gv >= 0.0) || !std::isfinite(gv))
          throw Error(ErrorCode::ValidationError, "g must be nonnegative on the domain");
      }
    }
  }
};

/// Per-element affine data plus the physical points of the default rule.
struct MeshGeometry {
  std::vector<double> area;
  /// grad[e][i] = (d/dx, d/dt) of the i-th barycentric function on element e.
  std::vector<std::array<std::array<double, 2>, 3>> grad;
  TriangleRule rule;
  std::vector<Point> qp;  // element-major, rule.size() per element

  int nq() const { return static_cast<int>(rule.size()); }
  const Point& point(int e, int q) const { return qp[static_cast<std::size_t>(e) * rule.size() + q]; }
  double weight(int e, int q) const { return area[e] * rule.weights[q]; }
};

inline MeshGeometry compute_geometry(const SpaceTimeMesh& mesh, int degree = 5) {
  MeshGeometry g;
  g.rule = triangle_rule(degree);
  const std::size_t ne = mesh.num_elements();
  g.area.resize(ne);
  g.grad.resize(ne);
  g.qp.resize(ne * g.rule.size());
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& el = mesh.element(static_cast<int>(e));
    const Point &a = mesh.node(el[0]), &b = mesh.node(el[1]), &c = mesh.node(el[2]);
    const double d1x = b.x - a.x, d1t = b.t - a.t, d2x = c.x - a.x, d2t = c.t - a.t;
    const double det = d1x * d2t - d1t * d2x;
    g.area[e] = 0.5 * det;
    const std::array<double, 2> g1{d2t / det, -d2x / det};
    const std::array<double, 2> g2{-d1t / det, d1x / det};
    g.grad[e] = {std::array<double, 2>{-g1[0] - g2[0], -g1[1] - g2[1]}, g1, g2};
    for (std::size_t q = 0; q < g.rule.size(); ++q) {
      const auto& l = g.rule.bary[q];
      g.qp[e * g.rule.size() + q] = {l[0] * a.x + l[1] * b.x + l[2] * c.x, l[0] * a.t + l[1] * b.t + l[2] * c.t};
    }
  }
  return g;
}

/// Coefficients of a generic first-order space-time form
///   c_t (d_t u) phi + c_adv v (d_x u) phi + c_diff kappa_h (d_x u)(d_x phi) + c_mass u phi,
/// optionally restricted to the observation window.
struct FormSpec {
  double c_t = 0.0;
  double c_adv = 0.0;
  double c_diff = 0.0;
  double c_mass = 0.0;
  bool unit_kappa = false;
  bool omega_only = false;
};

inline FormSpec form_a_h() { return {1.0, 1.0, 1.0, 0.0}; }
inline FormSpec form_a_h_prime() { return {-1.0, -1.0, 1.0, 0.0}; }
inline FormSpec form_advection() { return {0.0, 1.0, 0.0, 0.0}; }
inline FormSpec form_kappa_stiffness() { return {0.0, 0.0, 1.0, 0.0}; }
inline FormSpec form_mass() { return {0.0, 0.0, 0.0, 1.0}; }
inline FormSpec form_mass_omega() {
  FormSpec f = form_mass();
  f.omega_only = true;
  return f;
}

/// Rows follow the test space, columns the trial space. Constrained dofs are
/// eliminated. Element contributions are summed in element order, so repeated
/// calls are bit-identical.
inline SparseMatrix assemble_bilinear(const SpaceTimeMesh& mesh, const MeshGeometry& geo, const ProblemData& data,
                                      const FormSpec& form, const DofMap& trial, const DofMap& test) {
  const TriangleRule rule = triangle_rule(std::max(5, 2 * data.motion.velocity_degree() + 2));
  const TriangleRule& mrule = triangle_rule_deg5();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.num_elements() * 9);
  for (std::size_t ei = 0; ei < mesh.num_elements(); ++ei) {
    const int e = static_cast<int>(ei);
    if (form.omega_only && !mesh.in_omega(e)) continue;
    const auto& el = mesh.element(e);
    const double area = geo.area[e];
    const auto& gr = geo.grad[e];
    const double kap = form.unit_kappa ? 1.0 : data.kappa(mesh.subdomain(e));
    std::array<double, 3> iv{0.0, 0.0, 0.0};  // int v phi_i
    if (form.c_adv != 0.0 && !data.motion.is_stationary()) {
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const auto& l = rule.bary[q];
        const double t = l[0] * mesh.node(el[0]).t + l[1] * mesh.node(el[1]).t + l[2] * mesh.node(el[2]).t;
        const double w = area * rule.weights[q] * data.motion.velocity(t);
        for (int i = 0; i < 3; ++i) iv[i] += w * l[i];
      }
    }
    std::array<std::array<double, 3>, 3> mloc{};
    if (form.c_mass != 0.0) {
      for (std::size_t q = 0; q < mrule.size(); ++q) {
        const auto& l = mrule.bary[q];
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) mloc[i][j] += area * mrule.weights[q] * l[i] * l[j];
      }
    }
    for (int i = 0; i < 3; ++i) {
      const int row = test.dof(el[i]);
      if (row == DofMap::kConstrained) continue;
      for (int j = 0; j < 3; ++j) {
        const int col = trial.dof(el[j]);
        if (col == DofMap::kConstrained) continue;
        double val = 0.0;
        if (form.c_t != 0.0) val += form.c_t * gr[j][1] * area / 3.0;
        if (form.c_adv != 0.0) val += form.c_adv * gr[j][0] * iv[i];
        if (form.c_diff != 0.0) val += form.c_diff * kap * area * gr[j][0] * gr[i][0];
        if (form.c_mass != 0.0) val += form.c_mass * mloc[i][j];
        trip.emplace_back(row, col, val);
      }
    }
  }
  SparseMatrix A(test.size(), trial.size());
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

/// Load vector over `test` from integrand samples at the default-rule points
/// (element-major, geo.nq() per element).
inline Vector assemble_load_qp(const SpaceTimeMesh& mesh, const MeshGeometry& geo, const DofMap& test,
                               const std::vector<double>& values) {
  Vector b = Vector::Zero(test.size());
  const int nq = geo.nq();
  for (std::size_t ei = 0; ei < mesh.num_elements(); ++ei) {
    const int e = static_cast<int>(ei);
    const auto& el = mesh.element(e);
    std::array<double, 3> loc{0.0, 0.0, 0.0};
    for (int q = 0; q < nq; ++q) {
      const double w = geo.weight(e, q) * values[ei * nq + q];
      for (int i = 0; i < 3; ++i) loc[i] += w * geo.rule.bary[q][i];
    }
    for (int i = 0; i < 3; ++i) {
      const int d = test.dof(el[i]);
      if (d != DofMap::kConstrained) b[d] += loc[i];
    }
  }
  return b;
}

inline std::vector<double> sample_qp(const MeshGeometry& geo, const Field& f) {
  std::vector<double> out(geo.qp.size());
  for (std::size_t k = 0; k < geo.qp.size(); ++k) out[k] = f(geo.qp[k].x, geo.qp[k].t);
  return out;
}

inline std::vector<double> sample_qp_nodal(const SpaceTimeMesh& mesh, const MeshGeometry& geo, const Vector& nodal) {
  const int nq = geo.nq();
  std::vector<double> out(geo.qp.size());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e)
    for (int q = 0; q < nq; ++q) out[e * nq + q] = eval_nodal(mesh, nodal, static_cast<int>(e), geo.rule.bary[q]);
  return out;
}

inline Vector assemble_load(const SpaceTimeMesh& mesh, const MeshGeometry& geo, const DofMap& test,
                            const Field& integrand) {
  return assemble_load_qp(mesh, geo, test, sample_qp(geo, integrand));
}

/// Integrand restricted to the snapped observation window.
inline Field restrict_to_omega(const Window& w, Field f) {
  return [w, f = std::move(f)](double x, double t) { return (x >= w.left && x <= w.right) ? f(x, t) : 0.0; };
}

/// Load of chi_omega * integrand, integrating only over window elements so the
/// window edges never fall inside a quadrature cell.
inline Vector assemble_load_omega(const SpaceTimeMesh& mesh, const MeshGeometry& geo, const DofMap& test,
                                  const Field& integrand) {
  std::vector<double> v(geo.qp.size(), 0.0);
  const int nq = geo.nq();
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    if (!mesh.in_omega(static_cast<int>(e))) continue;
    for (int q = 0; q < nq; ++q) {
      const Point& p = geo.point(static_cast<int>(e), q);
      v[e * nq + q] = integrand(p.x, p.t);
    }
  }
  return assemble_load_qp(mesh, geo, test, v);
}

/// Subdivides element e into s*s congruent triangles and applies `rule` on each;
/// calls fn(bary within e, physical point, weight).
template <class Fn>
void integrate_subdivided(const SpaceTimeMesh& mesh, const MeshGeometry& geo, int e, int s, const TriangleRule& rule,
                          Fn&& fn) {
  const auto& el = mesh.element(e);
  const Point &A = mesh.node(el[0]), &B = mesh.node(el[1]), &C = mesh.node(el[2]);
  const double sub_area = geo.area[e] / (s * s);
  auto emit = [&](std::array<double, 2> p0, std::array<double, 2> p1, std::array<double, 2> p2) {
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto& l = rule.bary[q];
      // (u, w) are coordinates along B-A and C-A.
      const double u = (l[0] * p0[0] + l[1] * p1[0] + l[2] * p2[0]) / s;
      const double w = (l[0] * p0[1] + l[1] * p1[1] + l[2] * p2[1]) / s;
      const std::array<double, 3> bary{1.0 - u - w, u, w};
      const Point p{bary[0] * A.x + bary[1] * B.x + bary[2] * C.x, bary[0] * A.t + bary[1] * B.t + bary[2] * C.t};
      fn(bary, p, sub_area * rule.weights[q]);
    }
  };
  for (int i = 0; i < s; ++i) {
    for (int j = 0; i + j < s; ++j) {
      const double di = i, dj = j;
      emit({di, dj}, {di + 1, dj}, {di, dj + 1});
      if (i + j + 1 < s) emit({di + 1, dj}, {di + 1, dj + 1}, {di, dj + 1});
    }
  }
}

enum class NormRegion { QT, OmegaT };

/// L2 norm of a callable g(e, bary, point) over Q_T or the window.
template <class Fn>
double l2_norm_of(const SpaceTimeMesh& mesh, const MeshGeometry& geo, NormRegion region, Fn&& g, int subdiv = 1) {
  const TriangleRule& rule = triangle_rule_deg5();
  double acc = 0.0;
  for (std::size_t ei = 0; ei < mesh.num_elements(); ++ei) {
    const int e = static_cast<int>(ei);
    if (region == NormRegion::OmegaT && !mesh.in_omega(e)) continue;
    integrate_subdivided(mesh, geo, e, subdiv, rule, [&](const std::array<double, 3>& bary, const Point& p, double w) {
      const double v = g(e, bary, p);
      acc += w * v * v;
    });
  }
  return std::sqrt(acc);
}

inline double l2_norm(const SpaceTimeMesh& mesh, const MeshGeometry& geo, const Field& f,
                      NormRegion region = NormRegion::QT) {
  return l2_norm_of(mesh, geo, region, [&](int, const std::array<double, 3>&, const Point& p) { return f(p.x, p.t); });
}

inline double l2_norm(const SpaceTimeMesh& mesh, const MeshGeometry& geo, const FeFunction& u,
                      NormRegion region = NormRegion::QT) {
  return l2_norm_of(mesh, geo, region,
                    [&](int e, const std::array<double, 3>& b, const Point&) { return u.value(mesh, e, b); });
}

inline double l2_error(const SpaceTimeMesh& mesh, const MeshGeometry& geo, const Field& exact, const FeFunction& u,
                       NormRegion region = NormRegion::QT, int subdiv = 1) {
  return l2_norm_of(
      mesh, geo, region,
      [&](int e, const std::array<double, 3>& b, const Point& p) { return exact(p.x, p.t) - u.value(mesh, e, b); },
      subdiv);
}

/// Exact field with its first derivatives, for error norms.
struct ExactField {
  Field value;
  Field dx;
  Field dt;
};

}  // namespace stinv
