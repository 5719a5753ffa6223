#pragma once

#include <gtest/gtest.h>

#include <memory>
#include <random>

#include "stinv/experiments.hpp"

namespace stinv::test {

inline MeshParams small_params(InterfaceMotion m, int n_time = 4, int n_left = 2, int n_right = 3) {
  MeshParams p;
  p.motion = std::move(m);
  p.domain = {0.0, 1.0, 1.0};
  p.omega = {0.6, 0.8};
  p.n_time = n_time;
  p.n_left = n_left;
  p.n_right = n_right;
  return p;
}

inline ProblemData data_for(InterfaceMotion m, double k1 = 1.0, double k2 = 2.0) {
  ProblemData d;
  d.kappa1 = k1;
  d.kappa2 = k2;
  d.motion = std::move(m);
  return d;
}

inline std::shared_ptr<DiscreteProblem> problem(InterfaceMotion m, int level = 0, double k1 = 1.0, double k2 = 2.0) {
  return make_problem(family_member(default_base_params(m), level), data_for(m, k1, k2));
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

}  // namespace stinv::test
