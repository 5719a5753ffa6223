#pragma once

#include "stinv/solve.hpp"

namespace stinv {

/// ||v||_h^2 = int kappa_h |d_x v|^2.
inline double norm_h(const DiscreteProblem& P, const FeFunction& v) {
  const SpaceKind k = v.dofmap().kind();
  if (k == SpaceKind::P1Free) {
    const auto& mesh = P.mesh();
    const auto& geo = P.geometry();
    double acc = 0.0;
    for (std::size_t ei = 0; ei < mesh.num_elements(); ++ei) {
      const int e = static_cast<int>(ei);
      const auto& el = mesh.element(e);
      double dx = 0.0;
      for (int i = 0; i < 3; ++i) dx += v.node_value(el[i]) * geo.grad[e][i][0];
      acc += P.data().kappa(mesh.subdomain(e)) * geo.area[e] * dx * dx;
    }
    return std::sqrt(acc);
  }
  const Vector& c = v.coeffs();
  return std::sqrt(std::max(0.0, c.dot(P.stiffness(k) * c)));
}

namespace detail {

/// Element gradient (d/dx, d/dt) of a nodal P1 function.
inline std::array<double, 2> element_gradient(const SpaceTimeMesh& mesh, const MeshGeometry& geo, const Vector& nodal,
                                              int e) {
  const auto& el = mesh.element(e);
  std::array<double, 2> g{0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    g[0] += nodal[el[i]] * geo.grad[e][i][0];
    g[1] += nodal[el[i]] * geo.grad[e][i][1];
  }
  return g;
}

/// ||e||_h and the xi-part of ||e||_{h,0} (or ||e||_{h,T}) for e = exact - u_h.
/// Interface elements are integrated on a 4x4 subdivision since the exact
/// gradient may kink inside them.
inline std::pair<double, double> error_parts(const DiscreteProblem& P, const ExactField* exact, const Vector& uh_nodal,
                                             SpaceKind xi_space) {
  const auto& mesh = P.mesh();
  const auto& geo = P.geometry();
  const auto xi_map = P.space(xi_space);
  const TriangleRule& rule = triangle_rule_deg5();
  Vector rhs = Vector::Zero(xi_map->size());
  double eh2 = 0.0;
  for (std::size_t ei = 0; ei < mesh.num_elements(); ++ei) {
    const int e = static_cast<int>(ei);
    const auto gh = element_gradient(mesh, geo, uh_nodal, e);
    const double kap = P.data().kappa(mesh.subdomain(e));
    const int s = (exact && mesh.element_class(e) == ElementClass::Interface) ? 4 : 1;
    std::array<double, 3> loc{0.0, 0.0, 0.0};
    integrate_subdivided(mesh, geo, e, s, rule, [&](const std::array<double, 3>& b, const Point& p, double w) {
      const double ex = (exact ? exact->dx(p.x, p.t) : 0.0) - gh[0];
      const double et = (exact ? exact->dt(p.x, p.t) : 0.0) - gh[1];
      eh2 += w * kap * ex * ex;
      for (int i = 0; i < 3; ++i) loc[i] += w * et * b[i];
    });
    const auto& el = mesh.element(e);
    for (int i = 0; i < 3; ++i) {
      const int d = xi_map->dof(el[i]);
      if (d != DofMap::kConstrained) rhs[d] += loc[i];
    }
  }
  const FeFunction xi = P.solve_xi(rhs, xi_space);
  return {std::sqrt(eh2), norm_h(P, xi)};
}

}  // namespace detail

/// ||u - u_h||_{h,0} with xi_h in V_H0.
inline double norm_h0_error(const DiscreteProblem& P, const ExactField& exact, const FeFunction& uh) {
  const auto [a, b] = detail::error_parts(P, &exact, uh.nodal(), SpaceKind::VH0);
  return std::hypot(a, b);
}

/// ||p - p_h||_{h,T} with xi'_h in V_HT.
inline double norm_hT_error(const DiscreteProblem& P, const ExactField& exact, const FeFunction& ph) {
  const auto [a, b] = detail::error_parts(P, &exact, ph.nodal(), SpaceKind::VHT);
  return std::hypot(a, b);
}

inline double norm_h0(const DiscreteProblem& P, const FeFunction& v) {
  const auto [a, b] = detail::error_parts(P, nullptr, v.nodal(), SpaceKind::VH0);
  return std::hypot(a, b);
}

inline double norm_hT(const DiscreteProblem& P, const FeFunction& v) {
  const auto [a, b] = detail::error_parts(P, nullptr, v.nodal(), SpaceKind::VHT);
  return std::hypot(a, b);
}

}  // namespace stinv
