// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SCHWARZEIG_FEM_HPP
#define SCHWARZEIG_FEM_HPP

#include <iosfwd>

#include "schwarzeig/mesh.hpp"
#include "schwarzeig/types.hpp"

namespace schwarzeig
{

// Stiffness K (a(u,v) = int grad u . grad v) and consistent mass M (b(u,v) = int u v) of the
// P1 space with homogeneous Dirichlet conditions, on the interior dofs of a mesh.
struct SparsePencil
{
  SparseMatrix stiffness;
  SparseMatrix mass;

  Index size() const { return stiffness.rows(); }
};

// Exact element integration; boundary rows and columns are eliminated. With
// eliminate_boundary = false the matrices are indexed by all mesh vertices instead.
SparsePencil assemble(const Mesh &mesh, bool eliminate_boundary = true);

// (v^T K v) / (v^T M v). Throws InvalidArgument for a zero vector.
double rayleigh_quotient(const SparsePencil &pencil, const Vector &v);

// Writes the lower triangle in Matrix Market coordinate format (1-based indices).
void write_matrix_market(std::ostream &out, const SparseMatrix &matrix);

}  // namespace schwarzeig

#endif  // SCHWARZEIG_FEM_HPP
