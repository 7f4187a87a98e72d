// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SCHWARZEIG_SCHWARZ_HPP
#define SCHWARZEIG_SCHWARZ_HPP

#include <memory>
#include <span>
#include <vector>

#include "schwarzeig/fem.hpp"
#include "schwarzeig/linalg.hpp"
#include "schwarzeig/mesh.hpp"
#include "schwarzeig/types.hpp"

namespace schwarzeig
{

//
// Coarse piece of the preconditioner: the full eigendecomposition of the coarse pencil
// (K_H, M_H) and the coarse-to-fine prolongation. The first `deflation` coarse eigenvectors
// (the low-frequency part up to the end of the targeted cluster) are excluded from the coarse
// solve; it acts only on the span of the remaining ones.
//
struct CoarseSpace
{
  SparseMatrix prolongation;
  Vector values;
  DenseMatrix vectors;
  Index deflation = 0;

  Index size() const { return values.size(); }

  // Smallest retained coarse eigenvalue lambda_{M+1}^H, or +infinity when every coarse
  // eigenvector is deflated.
  double first_retained_value() const;
};

// Assembles the pencil on `coarse`, solves it densely and stores all eigenpairs.
CoarseSpace build_coarse_space(const Mesh &coarse, SparseMatrix prolongation, Index deflation);

// Principal submatrices of the fine pencil on one subdomain.
struct LocalProblem
{
  std::vector<Index> dofs;
  SparseMatrix stiffness;
  SparseMatrix mass;
};

std::vector<LocalProblem> extract_local_problems(const SparsePencil &pencil,
                                                 const Decomposition &decomposition);

// Smallest eigenvalue of (K_l, M_l) by inverse iteration. Used for diagnostics only.
double smallest_local_eigenvalue(const LocalProblem &local, double tol = 1e-10);

//
// Two-level additive Schwarz preconditioner for the shifted operators A - lambda_i. For a
// dual vector rho (coefficients of a functional on the fine space) and the shift lambda of
// slot i,
//
//   t = P_H x_H + sum_l E_l^T (K_l - lambda M_l)^{-1} E_l rho,
//   x_H = sum_{j > M} (u_j^H)^T (P_H^T rho) / (lambda_j^H - lambda) u_j^H,
//
// with the local sum taken in ascending subdomain order. Immutable apart from
// update_shifts(); apply() may be called concurrently.
//
class SchwarzPreconditioner
{
public:
  // Throws ShiftOutOfRange if a shift is not below lambda_{M+1}^H.
  SchwarzPreconditioner(std::shared_ptr<const CoarseSpace> coarse,
                        std::shared_ptr<const std::vector<LocalProblem>> locals,
                        std::vector<double> shifts, int threads = 1);

  Index shift_count() const { return static_cast<Index>(shifts_.size()); }
  double shift(Index slot) const;
  const std::vector<double> &shifts() const { return shifts_; }
  Index subdomain_count() const { return static_cast<Index>(locals_->size()); }
  const CoarseSpace &coarse() const { return *coarse_; }

  // Refactorizes the slots whose shift moved by more than reuse_tol; the other slots keep
  // their previous shift. reuse_tol = 0 refactorizes every changed slot. Returns the number of
  // refactorized slots.
  Index update_shifts(std::span<const double> shifts, double reuse_tol = 0.0);

  Vector apply(const Vector &rho, Index slot) const;
  Vector apply_coarse(const Vector &rho, Index slot) const;
  Vector apply_local(const Vector &rho, Index slot) const;

  // lambda_min of the coarse operator restricted to the retained coarse space:
  // lambda_{M+1}^H - shift.
  double coarse_min_eigenvalue(Index slot) const;

  // Local factorizations that needed the indefinite fallback, over all slots.
  Index indefinite_count() const;

  Index fine_size() const { return coarse_->prolongation.rows(); }

private:
  struct Slot
  {
    double shift;
    std::vector<Factorization> factors;
    Index indefinite = 0;
  };

  Slot prepare_slot(double shift) const;
  void check_slot(Index slot) const;

  std::shared_ptr<const CoarseSpace> coarse_;
  std::shared_ptr<const std::vector<LocalProblem>> locals_;
  std::vector<double> shifts_;
  std::vector<Slot> slots_;
  int threads_;
};

// Builds the local problems and coarse space and prepares every shift.
SchwarzPreconditioner prepare(const SparsePencil &pencil, const Decomposition &decomposition,
                              std::shared_ptr<const CoarseSpace> coarse,
                              std::vector<double> shifts, int threads = 1);

}  // namespace schwarzeig

#endif  // SCHWARZEIG_SCHWARZ_HPP
