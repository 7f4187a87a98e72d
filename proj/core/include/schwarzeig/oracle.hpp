// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SCHWARZEIG_ORACLE_HPP
#define SCHWARZEIG_ORACLE_HPP

#include <optional>
#include <string>
#include <vector>

#include "schwarzeig/eigensolver.hpp"
#include "schwarzeig/fem.hpp"
#include "schwarzeig/types.hpp"

//
// Reference spectra for verification. Nothing in the solver path depends on this library:
// the dense discrete solves go through LAPACK directly rather than the Eigen-based kernels
// of the solver.
//
namespace schwarzeig::oracle
{

// Largest pencil the dense reference will factor.
constexpr Index kDenseDofLimit = 5000;

enum class SpectrumSource
{
  Analytic,
  DenseDiscrete
};

struct SpectrumReference
{
  std::vector<double> values;  // ascending, with multiplicity; values[0] is lambda_1
  SpectrumSource source = SpectrumSource::Analytic;

  // lambda_i, 1-based; lambda_0 = 0.
  double at(Index i) const;
};

// First `count` Dirichlet eigenvalues p^2 + q^2 (p, q >= 1) of the square (0,pi)^2.
SpectrumReference exact_square_eigenvalues(Index count);

// First `count` generalized eigenvalues of (K, M). Throws ProblemTooLarge above
// kDenseDofLimit dofs.
SpectrumReference dense_discrete_spectrum(const SparsePencil &pencil, Index count);

struct DiscreteEigenpairs
{
  Vector values;
  DenseMatrix vectors;  // M-orthonormal
};

// Eigenpairs first..last (1-based) of (K, M) by a dense solve; same size guard.
DiscreteEigenpairs dense_discrete_eigenpairs(const SparsePencil &pencil, Index first,
                                             Index last);

struct ClusterGaps
{
  double left = 0.0;   // lambda_m - lambda_{m-1}
  double right = 0.0;  // lambda_{M+1} - lambda_M
  std::optional<std::string> warning;
};

// Needs values through index M + 1.
ClusterGaps cluster_gaps(const SpectrumReference &reference, ClusterSpec cluster);

// Largest principal angle between span(x) and span(y) in the M-inner product. Both bases
// need not be orthonormal.
double max_principal_angle(const DenseMatrix &x, const DenseMatrix &y, const SparseMatrix &mass);

}  // namespace schwarzeig::oracle

#endif  // SCHWARZEIG_ORACLE_HPP
