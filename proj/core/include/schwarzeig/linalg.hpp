// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SCHWARZEIG_LINALG_HPP
#define SCHWARZEIG_LINALG_HPP

#include <memory>

#include "schwarzeig/types.hpp"

namespace schwarzeig
{

enum class FactorizationKind
{
  Cholesky,
  Indefinite
};

//
// Sparse symmetric factorization of S, reused for repeated solves. Cholesky (LL^T) for SPD
// matrices and pivot-free LDL^T otherwise; both use a fill-reducing AMD ordering. The object
// is immutable after construction and solve() may be called concurrently.
//
class Factorization
{
public:
  // With expect_spd the factorization is LL^T and a non-positive pivot raises
  // IndefiniteMatrix (carrying the pivot position in elimination order). Otherwise LDL^T is
  // used. A (numerically) zero pivot raises SingularMatrix in either mode.
  Factorization(const SparseMatrix &matrix, bool expect_spd);
  ~Factorization();
  Factorization(Factorization &&) noexcept;
  Factorization &operator=(Factorization &&) noexcept;

  FactorizationKind kind() const { return kind_; }
  Index size() const { return size_; }

  Vector solve(const Vector &rhs) const;
  void solve(const Vector &rhs, Vector &x) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  FactorizationKind kind_;
  Index size_ = 0;
};

Factorization factorize(const SparseMatrix &matrix, bool expect_spd);

// Factorization of A - shift B. Tries Cholesky first and refactorizes with LDL^T when the
// shifted matrix turns out indefinite. The optional flag reports whether the fallback ran.
Factorization factorize_shifted(const SparseMatrix &a, const SparseMatrix &b, double shift,
                                bool *fell_back = nullptr);

// Eigenpairs of a dense symmetric-definite pencil, values ascending, vectors B-orthonormal.
struct EigenBasis
{
  Vector values;
  DenseMatrix vectors;
};

// Full spectrum of A x = lambda B x. Throws InvalidArgument if B is not SPD or the sizes
// disagree.
EigenBasis dense_generalized_eig(const DenseMatrix &a, const DenseMatrix &b);

// Full spectrum of a dense symmetric matrix (B = I).
EigenBasis dense_symmetric_eig(const DenseMatrix &a);

// Lowest `count` eigenpairs of a dense symmetric matrix, ascending (LAPACK dsyevr). Only the
// lower triangle of `a` is read.
EigenBasis dense_symmetric_eig_lowest(const DenseMatrix &a, Index count);

// Lowest `count` eigenpairs of (A, B), B-orthonormal, through a Cholesky reduction in LAPACK.
// Same contract as dense_generalized_eig restricted to the first `count` pairs.
EigenBasis dense_generalized_eig_lowest(const DenseMatrix &a, const DenseMatrix &b, Index count);

//
// A growing basis whose columns are orthonormal in the inner product of an SPD sparse matrix
// M. Storage is allocated in chunks so that appending does not copy on every step.
//
class MassOrthonormalBasis
{
public:
  MassOrthonormalBasis(const SparseMatrix &mass, double drop_tol = 1e-8);

  Index rows() const { return mass_->rows(); }
  Index cols() const { return cols_; }
  double drop_tol() const { return drop_tol_; }

  auto matrix() const { return storage_.leftCols(cols_); }
  auto column(Index j) const { return storage_.col(j); }

  // Orthogonalizes each column of `vectors` in turn against the basis (two Gram-Schmidt
  // passes) and appends it if its M-norm after projection is at least drop_tol times its
  // M-norm before. Returns the indices of the input columns that were kept.
  std::vector<Index> append(const DenseMatrix &vectors);

  // Replaces the basis with the given columns, which must already be M-orthonormal.
  void reset(const DenseMatrix &orthonormal_columns);

  const SparseMatrix &mass() const { return *mass_; }

private:
  void reserve(Index cols);

  const SparseMatrix *mass_;
  double drop_tol_;
  DenseMatrix storage_;
  Index cols_ = 0;
};

// One-shot M-orthonormalization of the columns of `vectors`. Throws EmptyBasis if every
// column is dropped.
DenseMatrix b_orthonormalize(const DenseMatrix &vectors, const SparseMatrix &mass,
                             double drop_tol = 1e-8);

}  // namespace schwarzeig

#endif  // SCHWARZEIG_LINALG_HPP
