// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#include "schwarzeig/fem.hpp"

#include <iomanip>
#include <ostream>
#include <vector>

#include "schwarzeig/errors.hpp"

namespace schwarzeig
{

namespace
{

// Element matrices of a right triangle with legs g; rows and columns are ordered
// (right-angle vertex, leg vertex, leg vertex). The stiffness is independent of g.
constexpr double kElementStiffness[3][3] = {
  {1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
constexpr double kElementMass[3][3] = {{2.0, 1.0, 1.0}, {1.0, 2.0, 1.0}, {1.0, 1.0, 2.0}};

}  // namespace

SparsePencil assemble(const Mesh &mesh, bool eliminate_boundary)
{
  const double mass_scale = mesh.spacing() * mesh.spacing() / 24.0;
  const Index n =
    eliminate_boundary ? mesh.dof_count() : static_cast<Index>(mesh.vertices().size());
  auto index_of = [&](Index vertex)
  { return eliminate_boundary ? mesh.vertex_dof(vertex) : vertex; };

  std::vector<Eigen::Triplet<double, int>> k_entries, m_entries;
  k_entries.reserve(mesh.triangles().size() * 7);
  m_entries.reserve(mesh.triangles().size() * 9);
  for (const auto &tri : mesh.triangles())
  {
    for (int a = 0; a < 3; ++a)
    {
      const Index row = index_of(tri[a]);
      if (row < 0)
      {
        continue;
      }
      for (int b = 0; b < 3; ++b)
      {
        const Index col = index_of(tri[b]);
        if (col < 0)
        {
          continue;
        }
        if (kElementStiffness[a][b] != 0.0)
        {
          k_entries.emplace_back(static_cast<int>(row), static_cast<int>(col),
                                 kElementStiffness[a][b]);
        }
        m_entries.emplace_back(static_cast<int>(row), static_cast<int>(col),
                               mass_scale * kElementMass[a][b]);
      }
    }
  }

  // setFromTriplets sums duplicates in insertion order, so (i,j) and (j,i) accumulate the
  // same sequence of values and K, M come out bitwise symmetric.
  SparsePencil pencil{SparseMatrix(n, n), SparseMatrix(n, n)};
  pencil.stiffness.setFromTriplets(k_entries.begin(), k_entries.end());
  pencil.mass.setFromTriplets(m_entries.begin(), m_entries.end());
  pencil.stiffness.makeCompressed();
  pencil.mass.makeCompressed();
  return pencil;
}

double rayleigh_quotient(const SparsePencil &pencil, const Vector &v)
{
  if (v.size() != pencil.size())
  {
    throw InvalidArgument("rayleigh_quotient: vector size does not match the pencil");
  }
  const double mm = v.dot(pencil.mass * v);
  if (!(mm > 0.0))
  {
    throw InvalidArgument("rayleigh_quotient: zero vector");
  }
  return v.dot(pencil.stiffness * v) / mm;
}

void write_matrix_market(std::ostream &out, const SparseMatrix &matrix)
{
  Index entries = 0;
  for (int r = 0; r < matrix.outerSize(); ++r)
  {
    for (SparseMatrix::InnerIterator it(matrix, r); it; ++it)
    {
      entries += it.col() <= r ? 1 : 0;
    }
  }
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << matrix.rows() << ' ' << matrix.cols() << ' ' << entries << '\n';
  out << std::setprecision(17);
  for (int r = 0; r < matrix.outerSize(); ++r)
  {
    for (SparseMatrix::InnerIterator it(matrix, r); it; ++it)
    {
      if (it.col() <= r)
      {
        out << r + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
      }
    }
  }
}

}  // namespace schwarzeig
