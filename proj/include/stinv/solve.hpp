#pragma once

#include <Eigen/SparseLU>
#include <memory>
#include <optional>
#include <random>
#include <string>

#ifdef STINV_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include "stinv/fem.hpp"

namespace stinv {

/// Sparse LU of a square system. UMFPACK when available; Eigen's SparseLU otherwise
/// or when UMFPACK reports failure.
class Factorization {
 public:
  using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

  explicit Factorization(const SparseMatrix& A) : a_(A), n_(static_cast<int>(A.rows())) {
    if (A.rows() != A.cols()) throw Error(ErrorCode::SingularSystem, "matrix is not square");
    if (n_ == 0) return;
#ifdef STINV_HAVE_UMFPACK
    umf_ = std::make_unique<Eigen::UmfPackLU<ColMatrix>>();
    umf_->compute(a_);
    if (umf_->info() == Eigen::Success) {
      backend_ = "umfpack";
      return;
    }
    umf_.reset();
#endif
    slu_ = std::make_unique<Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>>>();
    slu_->analyzePattern(a_);
    slu_->factorize(a_);
    if (slu_->info() != Eigen::Success)
      throw Error(ErrorCode::SingularSystem, "sparse LU failed: " + slu_->lastErrorMessage());
    backend_ = "sparselu";
  }

  int size() const { return n_; }
  const std::string& backend() const { return backend_; }
  const ColMatrix& matrix() const { return a_; }

  Vector solve(const Vector& b) const {
    if (b.size() != n_) throw Error(ErrorCode::ValidationError, "right-hand side length does not match system");
    if (n_ == 0) return Vector();
    Vector x;
#ifdef STINV_HAVE_UMFPACK
    if (umf_) x = umf_->solve(b);
#endif
    if (slu_) x = slu_->solve(b);
    if (!x.allFinite()) throw Error(ErrorCode::SingularSystem, "solve produced non-finite values");
    return x;
  }

  double relative_residual(const Vector& x, const Vector& b) const {
    const double nb = b.norm();
    return nb > 0.0 ? (a_ * x - b).norm() / nb : (a_ * x).norm();
  }

  /// Cheap lower bound of the 1-norm condition number from a few solves.
  double condition_estimate(int probes = 4, std::uint64_t seed = 7) const {
    if (n_ == 0) return 1.0;
    double anorm = 0.0;
    for (int j = 0; j < a_.outerSize(); ++j) {
      double s = 0.0;
      for (ColMatrix::InnerIterator it(a_, j); it; ++it) s += std::abs(it.value());
      anorm = std::max(anorm, s);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double inv = 0.0;
    for (int k = 0; k < probes; ++k) {
      Vector b(n_);
      for (int i = 0; i < n_; ++i) b[i] = k == 0 ? 1.0 : u(rng);
      inv = std::max(inv, solve(b).lpNorm<1>() / b.lpNorm<1>());
    }
    return anorm * inv;
  }

 private:
  ColMatrix a_;
  int n_ = 0;
  std::string backend_ = "empty";
#ifdef STINV_HAVE_UMFPACK
  std::unique_ptr<Eigen::UmfPackLU<ColMatrix>> umf_;
#endif
  std::unique_ptr<Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>>> slu_;
};

/// Mesh, data, spaces and cached factorizations for one discretization level.
/// The state and adjoint operators are factorized once on construction; the
/// stiffness and transposed-state factorizations are built on first use.
class DiscreteProblem {
 public:
  DiscreteProblem(std::shared_ptr<const SpaceTimeMesh> mesh, ProblemData data)
      : mesh_(std::move(mesh)), data_(std::move(data)) {
    data_.validate(mesh_->domain());
    geo_ = compute_geometry(*mesh_);
    v0_ = std::make_shared<DofMap>(*mesh_, SpaceKind::VH0);
    vT_ = std::make_shared<DofMap>(*mesh_, SpaceKind::VHT);
    free_ = std::make_shared<DofMap>(*mesh_, SpaceKind::P1Free);
    a0_ = assemble_bilinear(*mesh_, geo_, data_, form_a_h(), *v0_, *v0_);
    aT_ = assemble_bilinear(*mesh_, geo_, data_, form_a_h_prime(), *vT_, *vT_);
    m_omega_ = assemble_bilinear(*mesh_, geo_, data_, form_mass_omega(), *free_, *free_);
    m_omega_vT_ = assemble_bilinear(*mesh_, geo_, data_, form_mass_omega(), *free_, *vT_);
    m_omega_v0_ = assemble_bilinear(*mesh_, geo_, data_, form_mass_omega(), *free_, *v0_);
    state_ = std::make_unique<Factorization>(a0_);
    adjoint_ = std::make_unique<Factorization>(aT_);
    ell_qp_ = sample_qp(geo_, data_.ell);
  }

  const SpaceTimeMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const SpaceTimeMesh> mesh_ptr() const { return mesh_; }
  const ProblemData& data() const { return data_; }
  const MeshGeometry& geometry() const { return geo_; }
  std::shared_ptr<const DofMap> space(SpaceKind k) const {
    return k == SpaceKind::VH0 ? v0_ : (k == SpaceKind::VHT ? vT_ : free_);
  }
  const SparseMatrix& a_h() const { return a0_; }
  const SparseMatrix& a_h_prime() const { return aT_; }
  /// Window mass matrix on the unconstrained space.
  const SparseMatrix& mass_omega() const { return m_omega_; }
  const std::vector<double>& ell_qp() const { return ell_qp_; }
  const Factorization& state_factorization() const { return *state_; }
  const Factorization& adjoint_factorization() const { return *adjoint_; }

  /// a_h(u, phi) = (F, phi) for a general right-hand side field.
  FeFunction solve_state_field(const Field& F) const {
    return {v0_, state_->solve(assemble_load(*mesh_, geo_, *v0_, F))};
  }

  /// a_h(u, phi) = (ell f, phi) with f given at the default quadrature points.
  FeFunction solve_state_qp(const std::vector<double>& f_qp) const {
    std::vector<double> v(f_qp.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = ell_qp_[k] * f_qp[k];
    return {v0_, state_->solve(assemble_load_qp(*mesh_, geo_, *v0_, v))};
  }

  FeFunction solve_state(const Field& f) const { return solve_state_qp(sample_qp(geo_, f)); }

  FeFunction solve_offset() const { return solve_state_field(data_.g); }

  /// a'_h(p, phi) = (chi_omega r, phi) on V_HT, r a nodal P1 vector.
  FeFunction solve_adjoint_nodal(const Vector& r_nodal) const {
    return {vT_, adjoint_->solve(m_omega_vT_ * r_nodal)};
  }

  FeFunction solve_adjoint(const Field& r) const {
    return {vT_, adjoint_->solve(assemble_load_omega(*mesh_, geo_, *vT_, r))};
  }

  /// Transpose of the discrete state operator applied to the window residual:
  /// the exact gradient of the discrete misfit, living in V_H0.
  FeFunction solve_discrete_adjoint_nodal(const Vector& r_nodal) const {
    if (!state_t_) {
      SparseMatrix at = a0_.transpose();
      state_t_ = std::make_unique<Factorization>(at);
    }
    return {v0_, state_t_->solve(m_omega_v0_ * r_nodal)};
  }

  const SparseMatrix& stiffness(SpaceKind k) const {
    ensure_stiffness(k);
    return k == SpaceKind::VH0 ? k0_ : kT_;
  }

  /// kappa_h-weighted Poisson problem on V_H0 or V_HT with an assembled right side.
  FeFunction solve_xi(const Vector& rhs, SpaceKind k) const {
    ensure_stiffness(k);
    const auto& fac = k == SpaceKind::VH0 ? *kfac0_ : *kfacT_;
    return {space(k), fac.solve(rhs)};
  }

  FeFunction solve_xi_field(const Field& dt_field, SpaceKind k) const {
    return solve_xi(assemble_load(*mesh_, geo_, *space(k), dt_field), k);
  }

 private:
  void ensure_stiffness(SpaceKind k) const {
    if (k == SpaceKind::P1Free) throw Error(ErrorCode::SingularSystem, "stiffness is singular on the free space");
    if (k == SpaceKind::VH0 && !kfac0_) {
      k0_ = assemble_bilinear(*mesh_, geo_, data_, form_kappa_stiffness(), *v0_, *v0_);
      kfac0_ = std::make_unique<Factorization>(k0_);
    }
    if (k == SpaceKind::VHT && !kfacT_) {
      kT_ = assemble_bilinear(*mesh_, geo_, data_, form_kappa_stiffness(), *vT_, *vT_);
      kfacT_ = std::make_unique<Factorization>(kT_);
    }
  }

  std::shared_ptr<const SpaceTimeMesh> mesh_;
  ProblemData data_;
  MeshGeometry geo_;
  std::shared_ptr<DofMap> v0_, vT_, free_;
  SparseMatrix a0_, aT_, m_omega_, m_omega_vT_, m_omega_v0_;
  std::unique_ptr<Factorization> state_, adjoint_;
  mutable std::unique_ptr<Factorization> state_t_;
  mutable SparseMatrix k0_, kT_;
  mutable std::unique_ptr<Factorization> kfac0_, kfacT_;
  std::vector<double> ell_qp_;
};

}  // namespace stinv
