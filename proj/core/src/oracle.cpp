// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#include "schwarzeig/oracle.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <lapacke.h>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "schwarzeig/errors.hpp"

namespace schwarzeig::oracle
{

namespace
{

// Column-major dense copy of the lower triangle; LAPACK only reads that half.
std::vector<double> dense_lower(const SparseMatrix &a)
{
  const Index n = a.rows();
  std::vector<double> out(static_cast<std::size_t>(n * n), 0.0);
  for (Index r = 0; r < a.outerSize(); ++r)
  {
    for (SparseMatrix::InnerIterator it(a, r); it; ++it)
    {
      if (it.col() <= r)
      {
        out[static_cast<std::size_t>(it.col() * n + r)] = it.value();
      }
    }
  }
  return out;
}

void check_size(const SparsePencil &pencil)
{
  if (pencil.size() > kDenseDofLimit)
  {
    throw ProblemTooLarge("dense reference: " + std::to_string(pencil.size()) +
                          " dofs exceed the limit of " + std::to_string(kDenseDofLimit));
  }
}

// dsygvx for indices il..iu (1-based). Vectors are B-normalized by LAPACK.
DiscreteEigenpairs sygvx(const SparsePencil &pencil, Index il, Index iu, bool want_vectors)
{
  check_size(pencil);
  const auto n = static_cast<lapack_int>(pencil.size());
  if (il < 1 || iu < il || iu > n)
  {
    throw InvalidArgument("dense reference: index range " + std::to_string(il) + ".." +
                          std::to_string(iu) + " outside 1.." + std::to_string(n));
  }
  std::vector<double> a = dense_lower(pencil.stiffness);
  std::vector<double> b = dense_lower(pencil.mass);
  const auto count = static_cast<lapack_int>(iu - il + 1);
  lapack_int found = 0;
  std::vector<double> w(static_cast<std::size_t>(n));
  std::vector<double> z(want_vectors ? static_cast<std::size_t>(n) * count : 1);
  std::vector<lapack_int> ifail(static_cast<std::size_t>(n));
  const double abstol = 2.0 * LAPACKE_dlamch('S');

  const lapack_int info = LAPACKE_dsygvx(
    LAPACK_COL_MAJOR, 1, want_vectors ? 'V' : 'N', 'I', 'L', n, a.data(), n, b.data(), n, 0.0,
    0.0, static_cast<lapack_int>(il), static_cast<lapack_int>(iu), abstol, &found, w.data(),
    z.data(), n, ifail.data());
  if (info > n)
  {
    throw InvalidArgument("dense reference: mass matrix is not positive definite");
  }
  if (info != 0 || found != count)
  {
    throw Error("dense reference: dsygvx failed (info " + std::to_string(info) + ")");
  }

  DiscreteEigenpairs out;
  out.values = Eigen::Map<const Vector>(w.data(), count);
  if (want_vectors)
  {
    out.vectors = Eigen::Map<const DenseMatrix>(z.data(), n, count);
  }
  return out;
}

}  // namespace

double SpectrumReference::at(Index i) const
{
  if (i == 0)
  {
    return 0.0;
  }
  if (i < 0 || i > static_cast<Index>(values.size()))
  {
    throw InvalidArgument("reference spectrum has no eigenvalue " + std::to_string(i));
  }
  return values[static_cast<std::size_t>(i - 1)];
}

SpectrumReference exact_square_eigenvalues(Index count)
{
  if (count < 0)
  {
    throw InvalidArgument("exact spectrum: negative count");
  }
  // p^2 + q^2 <= R^2 has about pi R^2 / 4 solutions; grow R until enough are below it.
  for (Index radius = 4;; radius *= 2)
  {
    std::vector<double> values;
    const Index r2 = radius * radius;
    for (Index p = 1; p * p < r2; ++p)
    {
      for (Index q = 1; p * p + q * q <= r2; ++q)
      {
        values.push_back(static_cast<double>(p * p + q * q));
      }
    }
    if (static_cast<Index>(values.size()) >= count)
    {
      std::sort(values.begin(), values.end());
      values.resize(static_cast<std::size_t>(count));
      return {std::move(values), SpectrumSource::Analytic};
    }
  }
}

SpectrumReference dense_discrete_spectrum(const SparsePencil &pencil, Index count)
{
  if (count == 0)
  {
    check_size(pencil);
    return {{}, SpectrumSource::DenseDiscrete};
  }
  const DiscreteEigenpairs pairs = sygvx(pencil, 1, count, false);
  return {std::vector<double>(pairs.values.begin(), pairs.values.end()),
          SpectrumSource::DenseDiscrete};
}

DiscreteEigenpairs dense_discrete_eigenpairs(const SparsePencil &pencil, Index first,
                                             Index last)
{
  return sygvx(pencil, first, last, true);
}

ClusterGaps cluster_gaps(const SpectrumReference &reference, ClusterSpec cluster)
{
  ClusterGaps gaps;
  gaps.left = reference.at(cluster.first) - reference.at(cluster.first - 1);
  gaps.right = reference.at(cluster.last + 1) - reference.at(cluster.last);
  const double width = reference.at(cluster.last) - reference.at(cluster.first);
  const double scale = std::max(reference.at(cluster.last), 1.0);
  if (gaps.left <= 1e-10 * scale || gaps.right <= 1e-10 * scale)
  {
    gaps.warning = "cluster boundary splits a multiple eigenvalue";
  }
  else if (std::min(gaps.left, gaps.right) < 0.1 * width)
  {
    gaps.warning = "cluster is poorly separated from the rest of the spectrum";
  }
  return gaps;
}

double max_principal_angle(const DenseMatrix &x, const DenseMatrix &y, const SparseMatrix &mass)
{
  if (x.rows() != mass.rows() || y.rows() != mass.rows())
  {
    throw InvalidArgument("principal angles: vector length does not match the mass matrix");
  }
  if (x.cols() == 0 || y.cols() == 0)
  {
    throw InvalidArgument("principal angles: empty subspace");
  }
  // M-orthonormalize each basis through a Cholesky factor of its Gram matrix, then take the
  // singular values of Qx^T M Qy; the angle from the smallest uses the sine form for accuracy.
  auto orthonormal = [&](const DenseMatrix &v)
  {
    const DenseMatrix gram = v.transpose() * (mass * v);
    Eigen::LLT<DenseMatrix> llt(gram);
    if (llt.info() != Eigen::Success)
    {
      throw InvalidArgument("principal angles: basis is rank deficient");
    }
    // Q = V U^{-1} with gram = U^T U.
    return DenseMatrix(llt.matrixL().solve(v.transpose()).transpose());
  };
  const DenseMatrix qx = orthonormal(x);
  const DenseMatrix qy = orthonormal(y);
  const DenseMatrix &small = qx.cols() <= qy.cols() ? qx : qy;
  const DenseMatrix &large = qx.cols() <= qy.cols() ? qy : qx;
  // Component of the smaller basis outside the larger one.
  const DenseMatrix coeffs = large.transpose() * (mass * small);
  const DenseMatrix rest = small - large * coeffs;
  const DenseMatrix gram = rest.transpose() * (mass * rest);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(0.5 * (gram + gram.transpose()));
  const double sine = std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
  return std::asin(std::min(sine, 1.0));
}

}  // namespace schwarzeig::oracle
