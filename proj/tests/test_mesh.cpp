#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "common.hpp"
#include "stinv/mismatch.hpp"

using namespace stinv;
using stinv::test::small_params;

namespace {

bool on_interface_node(const SpaceTimeMesh& m, int node) {
  const auto& poly = m.interface_polyline();
  return std::find(poly.begin(), poly.end(), node) != poly.end();
}

int interface_edges(const SpaceTimeMesh& m, int e) {
  const auto& el = m.element(e);
  int n = 0;
  for (int i = 0; i < 3; ++i) n += on_interface_node(m, el[i]);
  return n == 2 ? 1 : (n == 3 ? 3 : 0);
}

}  // namespace

TEST(InterfaceMotion, PositionIsClosedFormIntegral) {
  const InterfaceMotion m(0.3, {0.1, 0.2, -0.3});
  for (double t : {0.0, 0.25, 0.5, 1.0}) {
    EXPECT_NEAR(m.position(t), 0.3 + 0.1 * t + 0.1 * t * t - 0.1 * t * t * t, 1e-15);
    EXPECT_NEAR(m.velocity(t), 0.1 + 0.2 * t - 0.3 * t * t, 1e-15);
    EXPECT_NEAR(m.acceleration(t), 0.2 - 0.6 * t, 1e-15);
  }
  EXPECT_TRUE(InterfaceMotion::stationary(0.4).is_stationary());
  EXPECT_TRUE(m.stays_within(0.0, 0.6, 1.0));
  EXPECT_FALSE(InterfaceMotion(0.3, {1.0}).stays_within(0.0, 0.6, 1.0));
}

TEST(FittedMesh, StationaryExample) {
  const SpaceTimeMesh m = build_fitted_mesh(small_params(InterfaceMotion::stationary(0.4)));
  EXPECT_EQ(m.n_time(), 4);
  for (int n = 0; n <= 4; ++n) EXPECT_EQ(m.column_x(m.interface_column(), n), 0.4);
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    const auto c = m.element_class(static_cast<int>(e));
    if (c == ElementClass::Interface) EXPECT_EQ(interface_edges(m, static_cast<int>(e)), 1);
  }
}

TEST(FittedMesh, MovingInterfaceNodesAndEdges) {
  const InterfaceMotion mot(0.3, {0.1});
  const SpaceTimeMesh m = build_fitted_mesh(small_params(mot));
  const auto& poly = m.interface_polyline();
  ASSERT_EQ(poly.size(), 5u);
  for (int n = 0; n <= 4; ++n) {
    const Point& p = m.node(poly[n]);
    EXPECT_NEAR(p.x, 0.3 + 0.1 * p.t, 1e-15);
    EXPECT_NEAR(p.t, 0.25 * n, 1e-15);
  }
  int count = 0;
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    if (m.element_class(static_cast<int>(e)) != ElementClass::Interface) continue;
    ++count;
    EXPECT_EQ(interface_edges(m, static_cast<int>(e)), 1);
  }
  EXPECT_EQ(count, 2 * m.n_time());
  for (int s = 0; s < m.n_time(); ++s)
    for (int e : m.interface_elements(s)) EXPECT_EQ(m.element_class(e), ElementClass::Interface);
}

TEST(FittedMesh, InvariantsOverRefinementFamily) {
  for (const InterfaceMotion& mot : {InterfaceMotion::stationary(0.4), InterfaceMotion(0.3, {0.1, 0.2})}) {
    const MeshParams base = small_params(mot);
    double h_prev = 0.0;
    std::size_t ne_prev = 0;
    for (int L = 0; L <= 4; ++L) {
      const SpaceTimeMesh m = build_fitted_mesh(family_member(base, L));
      double area = 0.0;
      for (std::size_t e = 0; e < m.num_elements(); ++e) {
        EXPECT_GT(m.area(static_cast<int>(e)), 0.0);
        area += m.area(static_cast<int>(e));
      }
      EXPECT_NEAR(area, 1.0, 1e-12);
      EXPECT_LT(m.quasi_uniformity(), 20.0);
      if (L > 0) {
        EXPECT_GE(m.h(), 0.45 * h_prev);
        EXPECT_LE(m.h(), 0.55 * h_prev);
        EXPECT_EQ(m.num_elements(), 4 * ne_prev);
      }
      h_prev = m.h();
      ne_prev = m.num_elements();

      for (std::size_t i = 0; i < m.num_nodes(); ++i) {
        const auto tag = m.boundary_tag(static_cast<int>(i));
        const Point& p = m.node(static_cast<int>(i));
        if (tag & boundary::Lateral) EXPECT_TRUE(p.x == 0.0 || p.x == 1.0);
        if (tag & boundary::Initial) EXPECT_EQ(p.t, 0.0);
        if (tag & boundary::Final) EXPECT_EQ(p.t, 1.0);
      }
      for (int n = 0; n <= m.n_time(); ++n) {
        EXPECT_DOUBLE_EQ(m.column_x(m.omega_left_column(), n), 0.6);
        EXPECT_DOUBLE_EQ(m.column_x(m.omega_right_column(), n), 0.8);
      }
      for (int node : m.interface_polyline()) {
        const Point& p = m.node(node);
        EXPECT_NEAR(p.x, mot.position(p.t), 1e-14 * std::abs(p.x));
      }
      for (std::size_t ei = 0; ei < m.num_elements(); ++ei) {
        const int e = static_cast<int>(ei);
        const Point b = m.barycenter(e);
        const Region r = m.classify_point(b.x, b.t);
        if (m.subdomain(e) == 1) EXPECT_EQ(r, Region::Q1H);
        else EXPECT_EQ(r, Region::Q2H);
        // every vertex of a Q1H element is left of or on the polyline
        for (int k : m.element(e)) {
          const Point& v = m.node(k);
          if (m.subdomain(e) == 1) EXPECT_LE(v.x, m.polyline_x(v.t) + 1e-15);
          else EXPECT_GE(v.x, m.polyline_x(v.t) - 1e-15);
        }
      }
    }
  }
}

TEST(FittedMesh, DiameterHalvesOverLevels) {
  const MeshParams base = small_params(InterfaceMotion(0.3, {0.1}));
  for (int L = 1; L <= 4; ++L) {
    const double r = build_fitted_mesh(family_member(base, L)).h() / build_fitted_mesh(family_member(base, L - 1)).h();
    EXPECT_NEAR(r, 0.5, 0.05);
  }
}

TEST(FittedMesh, RefineKeepsStationaryColumn) {
  const MeshParams p = small_params(InterfaceMotion::stationary(0.4));
  const SpaceTimeMesh m0 = build_fitted_mesh(p);
  const SpaceTimeMesh m1 = refine(p);
  EXPECT_EQ(m1.level(), 1);
  EXPECT_EQ(m1.num_elements(), 4 * m0.num_elements());
  for (int n = 0; n <= m1.n_time(); ++n) EXPECT_EQ(m1.column_x(m1.interface_column(), n), 0.4);
}

TEST(FittedMesh, RejectsBadInput) {
  MeshParams p = small_params(InterfaceMotion(0.3, {1.0}));
  try {
    build_fitted_mesh(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DomainViolation);
  }
  p = small_params(InterfaceMotion::stationary(0.4));
  p.omega = {0.8, 0.6};
  EXPECT_THROW(build_fitted_mesh(p), Error);
  p = small_params(InterfaceMotion::stationary(0.4), 1);
  EXPECT_THROW(build_fitted_mesh(p), Error);
  // fast but admissible motion: columns stay ordered, so every area is positive
  p = small_params(InterfaceMotion(0.1, {0.45}), 2, 8, 3);
  const SpaceTimeMesh m = build_fitted_mesh(p);
  for (std::size_t e = 0; e < m.num_elements(); ++e) EXPECT_GT(m.area(static_cast<int>(e)), 0.0);
}

TEST(ClassifyPoint, Examples) {
  const SpaceTimeMesh s = build_fitted_mesh(small_params(InterfaceMotion::stationary(0.4)));
  EXPECT_EQ(s.classify_point(0.2, 0.5), Region::Q1H);
  EXPECT_EQ(s.classify_point(0.4, 0.7), Region::OnPolyline);
  EXPECT_EQ(s.classify_point(0.9, 0.1), Region::Q2H);
  const SpaceTimeMesh m = build_fitted_mesh(small_params(InterfaceMotion(0.3, {0.1})));
  EXPECT_NEAR(m.polyline_x(0.5), 0.35, 1e-15);
  EXPECT_EQ(m.classify_point(0.36, 0.5), Region::Q2H);
  try {
    m.classify_point(1.5, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfDomain);
  }
}

TEST(Locate, FindsContainingElement) {
  const SpaceTimeMesh m = build_fitted_mesh(family_member(small_params(InterfaceMotion(0.3, {0.1, 0.2})), 2));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const double x = u(rng), t = u(rng);
    const Location loc = m.locate(x, t);
    for (double b : loc.bary) EXPECT_GE(b, -1e-12);
    const Point p = m.map(loc.element, loc.bary);
    EXPECT_NEAR(p.x, x, 1e-13);
    EXPECT_NEAR(p.t, t, 1e-13);
  }
  EXPECT_THROW(m.locate(0.5, 1.2), Error);
}

TEST(Mismatch, StationaryIsExactlyZero) {
  const SpaceTimeMesh m = build_fitted_mesh(small_params(InterfaceMotion::stationary(0.4)));
  const MismatchReport r = mismatch_diagnostics(m, m.motion());
  EXPECT_EQ(r.max_overlap, 0.0);
  EXPECT_EQ(r.mismatch_area, 0.0);
  EXPECT_EQ(r.interface_count, 8);
  EXPECT_GT(r.strip_area, 0.0);
}

TEST(Mismatch, AffineVelocityAreaMatchesChordFormula) {
  // gamma = 0.3 + 0.1 t + 0.1 t^2 is a parabola: area between it and the chord
  // over a slab of width dt is |gamma''| dt^3 / 12.
  const InterfaceMotion mot(0.3, {0.1, 0.2});
  const SpaceTimeMesh m = build_fitted_mesh(small_params(mot));
  const MismatchReport r = mismatch_diagnostics(m, mot);
  const double dt = 0.25;
  EXPECT_NEAR(r.max_overlap, 0.2 * dt * dt * dt / 12.0, 1e-15);
  EXPECT_NEAR(r.mismatch_area, 4 * 0.2 * dt * dt * dt / 12.0, 1e-15);
  EXPECT_LE(r.strip_area, m.domain().area());
}

TEST(Mismatch, RatesOverFiveLevels) {
  const StudyReport rep = mismatch_study(small_params(InterfaceMotion(0.3, {0.1, 0.2})), 5);
  for (double e : rep.last_eocs("overlap_max", 4)) EXPECT_NEAR(e, 3.0, 0.2);
  for (double e : rep.last_eocs("strip", 4)) EXPECT_NEAR(e, 1.0, 0.1);
}

TEST(MeshListing, RecordsNodesAndElements) {
  const SpaceTimeMesh m = build_fitted_mesh(small_params(InterfaceMotion::stationary(0.4)));
  std::ostringstream os;
  write_mesh_listing(m, os);
  std::istringstream is(os.str());
  std::string line;
  std::size_t nn = 0, ne = 0;
  while (std::getline(is, line)) {
    if (line.rfind("N ", 0) == 0) ++nn;
    if (line.rfind("E ", 0) == 0) ++ne;
  }
  EXPECT_EQ(nn, m.num_nodes());
  EXPECT_EQ(ne, m.num_elements());
  EXPECT_NE(os.str().find("LATERAL|INITIAL"), std::string::npos);
  EXPECT_NE(os.str().find("INTERFACE"), std::string::npos);
}
