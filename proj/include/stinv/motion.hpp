#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stinv/error.hpp"

namespace stinv {

/// Interface position gamma(t) = gamma0 + int_0^t v(s) ds with polynomial v.
/// v_coeffs[k] multiplies t^k (constant term first).
class InterfaceMotion {
 public:
  InterfaceMotion() = default;
  InterfaceMotion(double gamma0, std::vector<double> v_coeffs)
      : gamma0_(gamma0), v_(std::move(v_coeffs)) {
    while (!v_.empty() && v_.back() == 0.0) v_.pop_back();
  }

  static InterfaceMotion stationary(double gamma0) { return {gamma0, {}}; }

  double gamma0() const { return gamma0_; }
  const std::vector<double>& v_coeffs() const { return v_; }
  int velocity_degree() const { return v_.empty() ? 0 : static_cast<int>(v_.size()) - 1; }
  bool is_stationary() const { return v_.empty(); }

  double velocity(double t) const {
    double acc = 0.0;
    for (auto it = v_.rbegin(); it != v_.rend(); ++it) acc = acc * t + *it;
    return acc;
  }

  double acceleration(double t) const {
    double acc = 0.0;
    for (std::size_t k = v_.size(); k-- > 1;) acc = acc * t + static_cast<double>(k) * v_[k];
    return acc;
  }

  double position(double t) const {
    // Horner on gamma0 + sum_k v_k t^{k+1}/(k+1)
    double acc = 0.0;
    for (std::size_t k = v_.size(); k-- > 0;) acc = acc * t + v_[k] / static_cast<double>(k + 1);
    return gamma0_ + acc * t;
  }

  /// Upper bound of |v| on [0, T].
  double speed_bound(double T) const {
    double bound = 0.0, tk = 1.0;
    for (double c : v_) {
      bound += std::abs(c) * tk;
      tk *= T;
    }
    return bound;
  }

  /// Certifies lo < gamma(t) < hi on [0, T]. Samples the curve and closes the
  /// gaps with the Lipschitz bound |gamma(t) - gamma(s)| <= max|v| |t - s|,
  /// bisecting intervals that cannot be certified yet.
  bool stays_within(double lo, double hi, double T) const {
    if (!(position(0.0) > lo && position(0.0) < hi)) return false;
    const double lip = speed_bound(T);
    if (lip == 0.0) return true;
    struct Span { double t0, t1; int depth; };
    std::vector<Span> work{{0.0, T, 0}};
    while (!work.empty()) {
      const Span s = work.back();
      work.pop_back();
      const double g0 = position(s.t0), g1 = position(s.t1);
      if (!(g0 > lo && g0 < hi && g1 > lo && g1 < hi)) return false;
      const double slack = 0.5 * lip * (s.t1 - s.t0);
      if (std::min(g0, g1) - slack > lo && std::max(g0, g1) + slack < hi) continue;
      if (s.depth > 60) return false;
      const double tm = 0.5 * (s.t0 + s.t1);
      work.push_back({s.t0, tm, s.depth + 1});
      work.push_back({tm, s.t1, s.depth + 1});
    }
    return true;
  }

 private:
  double gamma0_ = 0.0;
  std::vector<double> v_;
};

}  // namespace stinv
