#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace stinv {

/// Gauss-Legendre rule on [0, 1]; weights sum to 1.
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
};

inline LineRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  LineRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // map [-1,1] -> [0,1], keep ascending order
    rule.points[n - 1 - i] = 0.5 * (z + 1.0);
    rule.weights[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return rule;
}

/// Rule on a triangle in barycentric coordinates; weights sum to 1 so that
/// sum_q w_q f(q) * |K| approximates the integral over K.
struct TriangleRule {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return weights.size(); }
};

/// Symmetric 7-point rule, exact for degree 5.
inline const TriangleRule& triangle_rule_deg5() {
  static const TriangleRule rule = [] {
    const double s15 = std::sqrt(15.0);
    const double a1 = (6.0 - s15) / 21.0, b1 = (9.0 + 2.0 * s15) / 21.0;
    const double a2 = (6.0 + s15) / 21.0, b2 = (9.0 - 2.0 * s15) / 21.0;
    const double w1 = (155.0 - s15) / 1200.0, w2 = (155.0 + s15) / 1200.0;
    TriangleRule r;
    r.degree = 5;
    r.bary = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
              {b1, a1, a1}, {a1, b1, a1}, {a1, a1, b1},
              {b2, a2, a2}, {a2, b2, a2}, {a2, a2, b2}};
    r.weights = {9.0 / 40.0, w1, w1, w1, w2, w2, w2};
    return r;
  }();
  return rule;
}

/// Collapsed (Duffy) Gauss product rule, exact for polynomials of the given degree.
inline TriangleRule triangle_rule_collapsed(int degree) {
  const int n = std::max(1, (degree + 3) / 2);
  const LineRule g = gauss_legendre(n);
  TriangleRule r;
  r.degree = degree;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = g.points[i];
      const double v = g.points[j] * (1.0 - u);
      r.bary.push_back({1.0 - u - v, u, v});
      // reference area is 1/2; normalise so the weights sum to 1
      r.weights.push_back(2.0 * g.weights[i] * g.weights[j] * (1.0 - u));
    }
  }
  return r;
}

/// Smallest available rule of at least the requested degree.
inline TriangleRule triangle_rule(int degree) {
  if (degree <= 5) return triangle_rule_deg5();
  return triangle_rule_collapsed(degree);
}

}  // namespace stinv
