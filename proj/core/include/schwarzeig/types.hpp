// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SCHWARZEIG_TYPES_HPP
#define SCHWARZEIG_TYPES_HPP

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace schwarzeig
{

using Index = Eigen::Index;

// Symmetric matrices are stored in full (both triangles), compressed row storage.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

}  // namespace schwarzeig

#endif  // SCHWARZEIG_TYPES_HPP
