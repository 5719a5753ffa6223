#include <gtest/gtest.h>

#include <cmath>

#include "stinv/quadrature.hpp"

using namespace stinv;

namespace {

// int over the reference triangle of x^p t^q = p! q! / (p+q+2)!
double monomial_exact(int p, int q) { return std::tgamma(p + 1) * std::tgamma(q + 1) / std::tgamma(p + q + 3); }

double apply(const TriangleRule& r, int p, int q) {
  double s = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) s += r.weights[k] * std::pow(r.bary[k][1], p) * std::pow(r.bary[k][2], q);
  return 0.5 * s;
}

}  // namespace

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  for (int n = 1; n <= 8; ++n) {
    const LineRule r = gauss_legendre(n);
    for (int d = 0; d <= 2 * n - 1; ++d) {
      double s = 0.0;
      for (std::size_t k = 0; k < r.points.size(); ++k) s += r.weights[k] * std::pow(r.points[k], d);
      EXPECT_NEAR(s, 1.0 / (d + 1), 1e-14) << "n=" << n << " d=" << d;
    }
  }
}

TEST(TriangleRule, SevenPointRuleIsDegreeFive) {
  const TriangleRule& r = triangle_rule_deg5();
  ASSERT_EQ(r.size(), 7u);
  double w = 0.0;
  for (double v : r.weights) w += v;
  EXPECT_NEAR(w, 1.0, 1e-15);
  for (int p = 0; p <= 5; ++p)
    for (int q = 0; p + q <= 5; ++q) EXPECT_NEAR(apply(r, p, q), monomial_exact(p, q), 1e-15) << p << "," << q;
  // degree 6 is not integrated exactly
  EXPECT_GT(std::abs(apply(r, 6, 0) - monomial_exact(6, 0)), 1e-8);
}

TEST(TriangleRule, CollapsedRulesReachRequestedDegree) {
  for (int deg : {6, 8, 11, 14}) {
    const TriangleRule r = triangle_rule(deg);
    EXPECT_GE(r.degree, deg);
    for (int p = 0; p <= deg; ++p)
      for (int q = 0; p + q <= deg; ++q) EXPECT_NEAR(apply(r, p, q), monomial_exact(p, q), 1e-14);
  }
}

TEST(TriangleRule, ReferenceMeanOfXSquared) {
  // mean of x^2 over {(0,0),(1,0),(0,1)} = (1/12) / (1/2)
  const TriangleRule& r = triangle_rule_deg5();
  double s = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) s += r.weights[k] * r.bary[k][1] * r.bary[k][1];
  EXPECT_NEAR(s, 1.0 / 6.0, 1e-15);
}
