#pragma once

#include <vector>

#include "stinv/mesh.hpp"
#include "stinv/quadrature.hpp"

namespace stinv {

struct MismatchReport {
  /// |K cap S_h| for every interface element, in interface_elements() order.
  std::vector<int> elements;
  std::vector<double> overlap;
  double max_overlap = 0.0;
  /// Sum of |K| over the interface elements.
  double strip_area = 0.0;
  /// Total area between gamma and its chord polyline.
  double mismatch_area = 0.0;
  int interface_count = 0;
};

/// Area between the exact interface and the discrete polyline, slab by slab.
/// Where gamma lies right of the chord the gap sits inside the right-hand
/// interface element, otherwise inside the left-hand one.
inline MismatchReport mismatch_diagnostics(const SpaceTimeMesh& mesh, const InterfaceMotion& motion) {
  constexpr int kPieces = 4;
  const LineRule gl = gauss_legendre(5);  // degree 9 per piece
  MismatchReport rep;
  for (int n = 0; n < mesh.n_time(); ++n) {
    const double t0 = mesh.time_level(n), t1 = mesh.time_level(n + 1);
    const double x0 = mesh.column_x(mesh.interface_column(), n);
    const double x1 = mesh.column_x(mesh.interface_column(), n + 1);
    double right = 0.0, left = 0.0;
    if (!motion.is_stationary()) {
      const double dt = (t1 - t0) / kPieces;
      for (int p = 0; p < kPieces; ++p) {
        for (std::size_t q = 0; q < gl.points.size(); ++q) {
          const double t = t0 + dt * (p + gl.points[q]);
          const double chord = x0 + (x1 - x0) * (t - t0) / (t1 - t0);
          const double gap = motion.position(t) - chord;
          (gap > 0.0 ? right : left) += dt * gl.weights[q] * std::abs(gap);
        }
      }
    }
    const auto ie = mesh.interface_elements(n);
    rep.elements.push_back(ie[0]);
    rep.overlap.push_back(left);
    rep.elements.push_back(ie[1]);
    rep.overlap.push_back(right);
    rep.mismatch_area += left + right;
    rep.strip_area += mesh.area(ie[0]) + mesh.area(ie[1]);
  }
  rep.interface_count = static_cast<int>(rep.elements.size());
  for (double a : rep.overlap) rep.max_overlap = std::max(rep.max_overlap, a);
  return rep;
}

}  // namespace stinv
