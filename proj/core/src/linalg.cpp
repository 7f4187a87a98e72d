// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#include "schwarzeig/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <lapacke.h>
#include <spdlog/spdlog.h>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <variant>

#include "schwarzeig/errors.hpp"

namespace schwarzeig
{

namespace
{

using ColMajorSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Llt = Eigen::SimplicialLLT<ColMajorSparse, Eigen::Lower, Eigen::AMDOrdering<int>>;
using Ldlt = Eigen::SimplicialLDLT<ColMajorSparse, Eigen::Lower, Eigen::AMDOrdering<int>>;

// Pivots below this fraction of the largest pivot (scaled by the size) are treated as zero.
double singular_threshold(double max_pivot, Index n)
{
  return max_pivot * static_cast<double>(std::max<Index>(n, 1)) *
         std::numeric_limits<double>::epsilon();
}

}  // namespace

struct Factorization::Impl
{
  std::variant<Llt, Ldlt> solver;
};

Factorization::Factorization(const SparseMatrix &matrix, bool expect_spd)
  : impl_(std::make_unique<Impl>()), size_(matrix.rows())
{
  if (matrix.rows() != matrix.cols())
  {
    throw InvalidArgument("factorize: matrix is not square");
  }
  const ColMajorSparse a = matrix;

  if (expect_spd)
  {
    kind_ = FactorizationKind::Cholesky;
    auto &llt = impl_->solver.emplace<Llt>();
    llt.compute(a);
    if (llt.info() == Eigen::Success)
    {
      const auto &l = llt.matrixL().nestedExpression();
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (int j = 0; j < l.outerSize(); ++j)
      {
        // Inner indices are sorted, so the first stored entry of each column is its diagonal.
        const double d = ColMajorSparse::InnerIterator(l, j).value();
        lo = std::min(lo, d * d);
        hi = std::max(hi, d * d);
      }
      if (lo <= singular_threshold(hi, size_))
      {
        throw SingularMatrix("factorize: matrix is singular to working precision");
      }
      return;
    }
    // Locate the offending pivot: LDL^T with the same ordering eliminates in the same order
    // and its D holds the Cholesky pivots.
    Ldlt ldlt(a);
    Index pivot = 0;
    const Vector d = ldlt.vectorD();
    const double hi = d.size() ? d.cwiseAbs().maxCoeff() : 0.0;
    while (pivot < d.size() && d[pivot] > singular_threshold(hi, size_))
    {
      ++pivot;
    }
    if (pivot < d.size() && std::abs(d[pivot]) <= singular_threshold(hi, size_))
    {
      throw SingularMatrix("factorize: matrix is singular to working precision");
    }
    throw IndefiniteMatrix("factorize: matrix is not positive definite (pivot " +
                             std::to_string(pivot) + ")",
                           pivot);
  }

  kind_ = FactorizationKind::Indefinite;
  auto &ldlt = impl_->solver.emplace<Ldlt>();
  ldlt.compute(a);
  const Vector d = ldlt.vectorD();
  const double hi = d.size() ? d.cwiseAbs().maxCoeff() : 0.0;
  if (ldlt.info() != Eigen::Success ||
      (d.size() && d.cwiseAbs().minCoeff() <= singular_threshold(hi, size_)))
  {
    throw SingularMatrix("factorize: matrix is singular to working precision");
  }
}

Factorization::~Factorization() = default;
Factorization::Factorization(Factorization &&) noexcept = default;
Factorization &Factorization::operator=(Factorization &&) noexcept = default;

void Factorization::solve(const Vector &rhs, Vector &x) const
{
  if (rhs.size() != size_)
  {
    throw InvalidArgument("solve: right-hand side has the wrong size");
  }
  std::visit([&](const auto &s) { x = s.solve(rhs); }, impl_->solver);
}

Vector Factorization::solve(const Vector &rhs) const
{
  Vector x;
  solve(rhs, x);
  return x;
}

Factorization factorize(const SparseMatrix &matrix, bool expect_spd)
{
  return Factorization(matrix, expect_spd);
}

Factorization factorize_shifted(const SparseMatrix &a, const SparseMatrix &b, double shift,
                                bool *fell_back)
{
  const SparseMatrix s = a - shift * b;
  if (fell_back)
  {
    *fell_back = false;
  }
  try
  {
    return Factorization(s, true);
  }
  catch (const IndefiniteMatrix &e)
  {
    spdlog::debug("shifted matrix (n = {}, shift = {}) is indefinite at pivot {}; using LDL^T",
                  s.rows(), shift, e.pivot());
    if (fell_back)
    {
      *fell_back = true;
    }
    return Factorization(s, false);
  }
}

EigenBasis dense_generalized_eig(const DenseMatrix &a, const DenseMatrix &b)
{
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
  {
    throw InvalidArgument("dense_generalized_eig: dimension mismatch");
  }
  if (a.rows() == 0)
  {
    return {};
  }
  Eigen::LLT<DenseMatrix> llt(b);
  if (llt.info() != Eigen::Success)
  {
    throw InvalidArgument("dense_generalized_eig: B is not positive definite");
  }
  // Reduce to the standard problem L^{-1} A L^{-T} y = lambda y, x = L^{-T} y.
  DenseMatrix c = llt.matrixL().solve(a);
  c = llt.matrixL().solve(c.transpose()).transpose();
  c = 0.5 * (c + c.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(c);
  if (es.info() != Eigen::Success)
  {
    throw Error("dense_generalized_eig: eigensolver did not converge");
  }
  EigenBasis out;
  out.values = es.eigenvalues();
  out.vectors = llt.matrixU().solve(es.eigenvectors());
  return out;
}

EigenBasis dense_symmetric_eig(const DenseMatrix &a)
{
  if (a.rows() != a.cols())
  {
    throw InvalidArgument("dense_symmetric_eig: matrix is not square");
  }
  if (a.rows() == 0)
  {
    return {};
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(a);
  if (es.info() != Eigen::Success)
  {
    throw Error("dense_symmetric_eig: eigensolver did not converge");
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

EigenBasis dense_symmetric_eig_lowest(const DenseMatrix &a, Index count)
{
  if (a.rows() != a.cols())
  {
    throw InvalidArgument("dense_symmetric_eig_lowest: matrix is not square");
  }
  if (count < 0 || count > a.rows())
  {
    throw InvalidArgument("dense_symmetric_eig_lowest: requested " + std::to_string(count) +
                          " of " + std::to_string(a.rows()) + " eigenpairs");
  }
  if (count == 0)
  {
    return {};
  }
  const auto n = static_cast<lapack_int>(a.rows());
  DenseMatrix work = a;
  EigenBasis out;
  out.values.resize(n);
  out.vectors.resize(n, count);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(count));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, work.data(), n, 0.0,
                                         0.0, 1, static_cast<lapack_int>(count), 0.0, &found,
                                         out.values.data(), out.vectors.data(), n,
                                         support.data());
  if (info != 0 || found != count)
  {
    throw Error("dense_symmetric_eig_lowest: dsyevr failed (info " + std::to_string(info) + ")");
  }
  out.values.conservativeResize(count);
  return out;
}

EigenBasis dense_generalized_eig_lowest(const DenseMatrix &a, const DenseMatrix &b, Index count)
{
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
  {
    throw InvalidArgument("dense_generalized_eig_lowest: dimension mismatch");
  }
  if (count < 0 || count > a.rows())
  {
    throw InvalidArgument("dense_generalized_eig_lowest: requested " + std::to_string(count) +
                          " of " + std::to_string(a.rows()) + " eigenpairs");
  }
  if (count == 0)
  {
    return {};
  }
  const auto n = static_cast<lapack_int>(a.rows());
  DenseMatrix l = b;
  if (LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', n, l.data(), n) != 0)
  {
    throw InvalidArgument("dense_generalized_eig_lowest: B is not positive definite");
  }
  // C = L^{-1} A L^{-T} in the lower triangle.
  DenseMatrix c = a;
  if (LAPACKE_dsygst(LAPACK_COL_MAJOR, 1, 'L', n, c.data(), n, l.data(), n) != 0)
  {
    throw Error("dense_generalized_eig_lowest: reduction failed");
  }
  EigenBasis out = dense_symmetric_eig_lowest(c, count);
  // x = L^{-T} y
  l.triangularView<Eigen::Lower>().transpose().solveInPlace(out.vectors);
  return out;
}

MassOrthonormalBasis::MassOrthonormalBasis(const SparseMatrix &mass, double drop_tol)
  : mass_(&mass), drop_tol_(drop_tol)
{
  if (!(drop_tol > 0.0 && drop_tol < 1.0))
  {
    throw InvalidArgument("drop tolerance must lie in (0, 1)");
  }
}

void MassOrthonormalBasis::reserve(Index cols)
{
  if (cols <= storage_.cols())
  {
    return;
  }
  const Index grown = std::max(cols, storage_.cols() + storage_.cols() / 2 + 16);
  DenseMatrix next(rows(), grown);
  if (cols_ > 0)
  {
    next.leftCols(cols_) = storage_.leftCols(cols_);
  }
  storage_.swap(next);
}

std::vector<Index> MassOrthonormalBasis::append(const DenseMatrix &vectors)
{
  if (vectors.rows() != rows())
  {
    throw InvalidArgument("append: vector length does not match the mass matrix");
  }
  reserve(cols_ + vectors.cols());

  std::vector<Index> kept;
  Vector v, mv, coeffs;
  for (Index j = 0; j < vectors.cols(); ++j)
  {
    v = vectors.col(j);
    mv = (*mass_) * v;
    const double before = std::sqrt(std::max(v.dot(mv), 0.0));
    if (!(before > 0.0) || !std::isfinite(before))
    {
      continue;
    }
    for (int pass = 0; pass < 2; ++pass)
    {
      if (cols_ > 0)
      {
        coeffs.noalias() = storage_.leftCols(cols_).transpose() * mv;
        v.noalias() -= storage_.leftCols(cols_) * coeffs;
      }
      mv = (*mass_) * v;
    }
    const double after = std::sqrt(std::max(v.dot(mv), 0.0));
    if (after < drop_tol_ * before)
    {
      continue;
    }
    storage_.col(cols_++) = v / after;
    kept.push_back(j);
  }
  return kept;
}

void MassOrthonormalBasis::reset(const DenseMatrix &orthonormal_columns)
{
  if (orthonormal_columns.rows() != rows())
  {
    throw InvalidArgument("reset: vector length does not match the mass matrix");
  }
  cols_ = 0;
  reserve(orthonormal_columns.cols());
  storage_.leftCols(orthonormal_columns.cols()) = orthonormal_columns;
  cols_ = orthonormal_columns.cols();
}

DenseMatrix b_orthonormalize(const DenseMatrix &vectors, const SparseMatrix &mass,
                             double drop_tol)
{
  MassOrthonormalBasis basis(mass, drop_tol);
  basis.append(vectors);
  if (basis.cols() == 0)
  {
    throw EmptyBasis("b_orthonormalize: every vector was dropped");
  }
  return basis.matrix();
}

}  // namespace schwarzeig
