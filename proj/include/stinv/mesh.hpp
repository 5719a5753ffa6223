#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "stinv/error.hpp"
#include "stinv/motion.hpp"

namespace stinv {

struct Point {
  double x = 0.0;
  double t = 0.0;
};

struct Domain {
  double a = 0.0;
  double b = 1.0;
  double T = 1.0;

  double area() const { return (b - a) * T; }
};

struct Window {
  double left = 0.0;
  double right = 0.0;
};

enum class ElementClass : std::uint8_t { Q1H, Q2H, Interface };
enum class Region : std::uint8_t { Q1H, Q2H, OnPolyline };

inline const char* to_string(ElementClass c) {
  switch (c) {
    case ElementClass::Q1H: return "Q1H";
    case ElementClass::Q2H: return "Q2H";
    case ElementClass::Interface: return "INTERFACE";
  }
  return "?";
}

inline const char* to_string(Region r) {
  switch (r) {
    case Region::Q1H: return "Q1H";
    case Region::Q2H: return "Q2H";
    case Region::OnPolyline: return "ON_POLYLINE";
  }
  return "?";
}

/// Bit flags; corner nodes carry several.
namespace boundary {
inline constexpr std::uint8_t Interior = 0;
inline constexpr std::uint8_t Lateral = 1;
inline constexpr std::uint8_t Initial = 2;
inline constexpr std::uint8_t Final = 4;

inline std::string to_string(std::uint8_t tag) {
  if (tag == Interior) return "INTERIOR";
  std::string s;
  auto add = [&](const char* name) {
    if (!s.empty()) s += '|';
    s += name;
  };
  if (tag & Lateral) add("LATERAL");
  if (tag & Initial) add("INITIAL");
  if (tag & Final) add("FINAL");
  return s;
}
}  // namespace boundary

/// Everything needed to rebuild (or refine) a fitted mesh.
struct MeshParams {
  InterfaceMotion motion;
  Domain domain;
  Window omega;
  int n_time = 2;
  int n_left = 2;
  int n_right = 3;
  /// Cells in [gamma, omega_l], [omega_l, omega_r], [omega_r, b]. Resolved
  /// from n_right on first build; refinement doubles them exactly.
  std::array<int, 3> right_counts{0, 0, 0};
  int level = 0;
};

/// Point location result: containing element plus barycentric coordinates.
struct Location {
  int element = -1;
  std::array<double, 3> bary{0.0, 0.0, 0.0};
};

/// Structured, interface-fitted triangulation of (a,b) x (0,T).
///
/// Nodes are arranged in columns that persist across time levels. Column
/// n_left tracks the interface, the omega columns stay fixed in x. Each
/// cell between two levels is split along its (j,n)-(j+1,n+1) diagonal,
/// which yields exactly two interface elements per slab.
class SpaceTimeMesh {
 public:
  const MeshParams& params() const { return params_; }
  const Domain& domain() const { return params_.domain; }
  const InterfaceMotion& motion() const { return params_.motion; }
  int level() const { return params_.level; }

  int n_time() const { return params_.n_time; }
  int n_cells_x() const { return n_cells_x_; }
  int nodes_per_level() const { return n_cells_x_ + 1; }
  int interface_column() const { return params_.n_left; }
  int omega_left_column() const { return params_.n_left + params_.right_counts[0]; }
  int omega_right_column() const { return omega_left_column() + params_.right_counts[1]; }

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_elements() const { return elements_.size(); }

  const std::vector<Point>& nodes() const { return nodes_; }
  const Point& node(int i) const { return nodes_[i]; }
  int node_index(int column, int time_level) const { return time_level * nodes_per_level() + column; }

  const std::vector<std::array<int, 3>>& elements() const { return elements_; }
  const std::array<int, 3>& element(int e) const { return elements_[e]; }
  ElementClass element_class(int e) const { return elem_class_[e]; }
  /// 1 or 2: which discrete subdomain Q_{i,h} the element belongs to.
  int subdomain(int e) const { return subdomain_[e]; }
  bool in_omega(int e) const { return in_omega_[e] != 0; }
  std::uint8_t boundary_tag(int node) const { return tags_[node]; }
  double time_level(int n) const { return n * params_.domain.T / params_.n_time; }

  /// Node indices on the discrete interface, ordered in time.
  const std::vector<int>& interface_polyline() const { return interface_nodes_; }
  /// The two interface elements of slab n: {left (Q1,h side), right (Q2,h side)}.
  std::array<int, 2> interface_elements(int slab) const {
    const int base = 2 * slab * n_cells_x_;
    return {base + 2 * (params_.n_left - 1), base + 2 * params_.n_left + 1};
  }

  double area(int e) const { return area_[e]; }
  double h() const { return h_; }
  double min_inradius() const { return min_inradius_; }
  double quasi_uniformity() const { return h_ / min_inradius_; }

  double diameter(int e) const {
    const auto& el = elements_[e];
    double d = 0.0;
    for (int i = 0; i < 3; ++i) d = std::max(d, dist(nodes_[el[i]], nodes_[el[(i + 1) % 3]]));
    return d;
  }

  Point barycenter(int e) const {
    const auto& el = elements_[e];
    return {(nodes_[el[0]].x + nodes_[el[1]].x + nodes_[el[2]].x) / 3.0,
            (nodes_[el[0]].t + nodes_[el[1]].t + nodes_[el[2]].t) / 3.0};
  }

  Point map(int e, const std::array<double, 3>& bary) const {
    const auto& el = elements_[e];
    Point p;
    for (int i = 0; i < 3; ++i) {
      p.x += bary[i] * nodes_[el[i]].x;
      p.t += bary[i] * nodes_[el[i]].t;
    }
    return p;
  }

  /// x-coordinate of column j at level n.
  double column_x(int column, int time_level) const { return nodes_[node_index(column, time_level)].x; }

  /// Slab containing t (the lower one on a shared level).
  int slab_of(double t) const {
    const double T = params_.domain.T;
    int n = static_cast<int>(std::floor(t / T * params_.n_time));
    n = std::clamp(n, 0, params_.n_time - 1);
    return n;
  }

  /// Linear interpolant of the interface polyline at time t.
  double polyline_x(double t) const {
    const int n = slab_of(t);
    const double t0 = time_level(n), t1 = time_level(n + 1);
    const double th = (t - t0) / (t1 - t0);
    return (1.0 - th) * column_x(interface_column(), n) + th * column_x(interface_column(), n + 1);
  }

  bool contains(double x, double t) const {
    const auto& d = params_.domain;
    return x >= d.a && x <= d.b && t >= 0.0 && t <= d.T;
  }

  /// Side of the discrete interface.
  Region classify_point(double x, double t) const {
    if (!contains(x, t)) {
      std::ostringstream os;
      os << "point (" << x << ", " << t << ") outside the space-time domain";
      throw Error(ErrorCode::OutOfDomain, os.str());
    }
    const auto& d = params_.domain;
    const double gap = x - polyline_x(t);
    if (std::abs(gap) < 1e-14 * (d.b - d.a)) return Region::OnPolyline;
    return gap < 0.0 ? Region::Q1H : Region::Q2H;
  }

  /// Containing element and barycentric coordinates for a point in the closure.
  Location locate(double x, double t) const {
    if (!contains(x, t)) {
      std::ostringstream os;
      os << "cannot locate (" << x << ", " << t << ")";
      throw Error(ErrorCode::OutOfDomain, os.str());
    }
    const int n = slab_of(t);
    const double t0 = time_level(n), t1 = time_level(n + 1);
    const double th = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
    auto col_at = [&](int j) { return (1.0 - th) * column_x(j, n) + th * column_x(j, n + 1); };
    int lo = 0, hi = n_cells_x_;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      if (col_at(mid) <= x) lo = mid; else hi = mid;
    }
    const int j = lo;
    const Point p00 = nodes_[node_index(j, n)];
    const Point p11 = nodes_[node_index(j + 1, n + 1)];
    const double side = orient(p00, p11, {x, t});
    const int cell = n * n_cells_x_ + j;
    Location loc;
    loc.element = 2 * cell + (side <= 0.0 ? 0 : 1);
    loc.bary = barycentric(loc.element, {x, t});
    return loc;
  }

  std::array<double, 3> barycentric(int e, Point p) const {
    const auto& el = elements_[e];
    const Point& a = nodes_[el[0]];
    const Point& b = nodes_[el[1]];
    const Point& c = nodes_[el[2]];
    const double det = (b.x - a.x) * (c.t - a.t) - (c.x - a.x) * (b.t - a.t);
    const double l1 = ((p.x - a.x) * (c.t - a.t) - (c.x - a.x) * (p.t - a.t)) / det;
    const double l2 = ((b.x - a.x) * (p.t - a.t) - (p.x - a.x) * (b.t - a.t)) / det;
    return {1.0 - l1 - l2, l1, l2};
  }

  friend SpaceTimeMesh build_fitted_mesh(const MeshParams& params);

 private:
  static double dist(const Point& p, const Point& q) { return std::hypot(p.x - q.x, p.t - q.t); }
  static double orient(const Point& a, const Point& b, const Point& c) {
    return (b.x - a.x) * (c.t - a.t) - (b.t - a.t) * (c.x - a.x);
  }

  MeshParams params_;
  int n_cells_x_ = 0;
  std::vector<Point> nodes_;
  std::vector<std::uint8_t> tags_;
  std::vector<std::array<int, 3>> elements_;
  std::vector<ElementClass> elem_class_;
  std::vector<std::uint8_t> subdomain_;
  std::vector<std::uint8_t> in_omega_;
  std::vector<double> area_;
  std::vector<int> interface_nodes_;
  double h_ = 0.0;
  double min_inradius_ = 0.0;
};

/// Resolves the right-hand column counts from n_right in proportion to the
/// t = 0 lengths of [gamma0, omega_l], [omega_l, omega_r], [omega_r, b].
inline std::array<int, 3> resolve_right_counts(const MeshParams& p) {
  const double g0 = p.motion.gamma0();
  const std::array<double, 3> len{p.omega.left - g0, p.omega.right - p.omega.left, p.domain.b - p.omega.right};
  const double total = len[0] + len[1] + len[2];
  std::array<int, 3> counts{};
  for (int i = 0; i < 3; ++i)
    counts[i] = std::max(1, static_cast<int>(std::lround(p.n_right * len[i] / total)));
  return counts;
}

inline SpaceTimeMesh build_fitted_mesh(const MeshParams& input) {
  MeshParams p = input;
  const Domain& d = p.domain;
  if (p.n_time < 2 || p.n_left < 2 || p.n_right < 2)
    throw Error(ErrorCode::ValidationError, "n_time, n_left and n_right must all be >= 2");
  if (!(d.a < d.b) || !(d.T > 0.0))
    throw Error(ErrorCode::DomainViolation, "domain needs a < b and T > 0");
  if (!(p.omega.left < p.omega.right && p.omega.right < d.b))
    throw Error(ErrorCode::DomainViolation, "observation window needs omega_l < omega_r < b");
  if (!p.motion.stays_within(d.a, p.omega.left, d.T))
    throw Error(ErrorCode::DomainViolation, "interface leaves (a, omega_l) on [0, T]");
  if (p.right_counts[0] <= 0) p.right_counts = resolve_right_counts(p);

  SpaceTimeMesh m;
  m.params_ = p;
  const int nl = p.n_left;
  const auto& rc = p.right_counts;
  const int ncx = nl + rc[0] + rc[1] + rc[2];
  m.n_cells_x_ = ncx;
  const int npl = ncx + 1;
  const int nt = p.n_time;

  m.nodes_.resize(static_cast<std::size_t>(npl) * (nt + 1));
  m.tags_.assign(m.nodes_.size(), boundary::Interior);
  auto fill = [&](int n, int j0, int cells, double x0, double x1, double t) {
    for (int k = 0; k <= cells; ++k) {
      double x = x0 + (x1 - x0) * k / cells;
      if (k == cells) x = x1;
      m.nodes_[m.node_index(j0 + k, n)] = {x, t};
    }
  };
  for (int n = 0; n <= nt; ++n) {
    const double t = m.time_level(n);
    const double g = p.motion.position(t);
    fill(n, 0, nl, d.a, g, t);
    fill(n, nl, rc[0], g, p.omega.left, t);
    fill(n, nl + rc[0], rc[1], p.omega.left, p.omega.right, t);
    fill(n, nl + rc[0] + rc[1], rc[2], p.omega.right, d.b, t);
    for (int j = 0; j < npl; ++j) {
      auto& tag = m.tags_[m.node_index(j, n)];
      if (j == 0 || j == ncx) tag |= boundary::Lateral;
      if (n == 0) tag |= boundary::Initial;
      if (n == nt) tag |= boundary::Final;
    }
    m.interface_nodes_.push_back(m.node_index(nl, n));
  }

  const std::size_t ne = static_cast<std::size_t>(2) * nt * ncx;
  m.elements_.reserve(ne);
  m.elem_class_.reserve(ne);
  m.subdomain_.reserve(ne);
  m.in_omega_.reserve(ne);
  m.area_.reserve(ne);
  const int jwl = m.omega_left_column(), jwr = m.omega_right_column();
  for (int n = 0; n < nt; ++n) {
    for (int j = 0; j < ncx; ++j) {
      const int v00 = m.node_index(j, n), v10 = m.node_index(j + 1, n);
      const int v11 = m.node_index(j + 1, n + 1), v01 = m.node_index(j, n + 1);
      const int side = j < nl ? 1 : 2;
      const std::uint8_t omega = (j >= jwl && j < jwr) ? 1 : 0;
      // lower triangle touches the interface edge when j + 1 == nl,
      // upper triangle when j == nl
      m.elements_.push_back({v00, v10, v11});
      m.elem_class_.push_back(j + 1 == nl ? ElementClass::Interface
                                          : (side == 1 ? ElementClass::Q1H : ElementClass::Q2H));
      m.elements_.push_back({v00, v11, v01});
      m.elem_class_.push_back(j == nl ? ElementClass::Interface
                                      : (side == 1 ? ElementClass::Q1H : ElementClass::Q2H));
      for (int k = 0; k < 2; ++k) {
        m.subdomain_.push_back(static_cast<std::uint8_t>(side));
        m.in_omega_.push_back(omega);
      }
    }
  }

  double hmax = 0.0, rmin = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < m.elements_.size(); ++e) {
    const auto& el = m.elements_[e];
    const Point &a = m.nodes_[el[0]], &b = m.nodes_[el[1]], &c = m.nodes_[el[2]];
    const double ar = 0.5 * SpaceTimeMesh::orient(a, b, c);
    if (!(ar > 0.0)) {
      std::ostringstream os;
      os << "element " << e << " in slab " << e / (2 * ncx)
         << " has non-positive area; increase n_time";
      throw Error(ErrorCode::InvalidGeometry, os.str());
    }
    m.area_.push_back(ar);
    const double la = SpaceTimeMesh::dist(a, b), lb = SpaceTimeMesh::dist(b, c), lc = SpaceTimeMesh::dist(c, a);
    hmax = std::max({hmax, la, lb, lc});
    rmin = std::min(rmin, 2.0 * ar / (la + lb + lc));
  }
  m.h_ = hmax;
  m.min_inradius_ = rmin;
  return m;
}

/// Same family, all counts doubled. Interface nodes are re-evaluated from gamma.
inline SpaceTimeMesh refine(const MeshParams& params) {
  MeshParams p = params;
  if (p.right_counts[0] <= 0) p.right_counts = resolve_right_counts(p);
  p.n_time *= 2;
  p.n_left *= 2;
  p.n_right *= 2;
  for (auto& c : p.right_counts) c *= 2;
  p.level += 1;
  return build_fitted_mesh(p);
}

/// Parameters of the level-`level` member of the family rooted at `base`.
inline MeshParams family_member(const MeshParams& base, int level) {
  MeshParams p = base;
  if (p.right_counts[0] <= 0) p.right_counts = resolve_right_counts(p);
  const int f = 1 << level;
  p.n_time *= f;
  p.n_left *= f;
  p.n_right *= f;
  for (auto& c : p.right_counts) c *= f;
  p.level = base.level + level;
  return p;
}

/// `N x t tag` and `E i j k class` records, one per line.
inline void write_mesh_listing(const SpaceTimeMesh& mesh, std::ostream& os) {
  os.precision(17);
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    const auto& p = mesh.node(static_cast<int>(i));
    os << "N " << p.x << ' ' << p.t << ' ' << boundary::to_string(mesh.boundary_tag(static_cast<int>(i))) << '\n';
  }
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.element(static_cast<int>(e));
    os << "E " << el[0] << ' ' << el[1] << ' ' << el[2] << ' '
       << to_string(mesh.element_class(static_cast<int>(e))) << '\n';
  }
}

}  // namespace stinv
