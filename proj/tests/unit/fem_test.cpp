// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "schwarzeig/errors.hpp"
#include "schwarzeig/fem.hpp"
#include "schwarzeig/oracle.hpp"

namespace schwarzeig
{
namespace
{

constexpr double kPi = std::numbers::pi;

// Dense P1 assembly from vertex coordinates: stiffness from barycentric gradients, mass from
// |T|/12 (1 + delta_ij). Indexed by interior dofs.
std::pair<DenseMatrix, DenseMatrix> reference_assembly(const Mesh &mesh)
{
  const Index n = mesh.dof_count();
  DenseMatrix k = DenseMatrix::Zero(n, n), m = DenseMatrix::Zero(n, n);
  for (const auto &t : mesh.triangles())
  {
    std::array<std::array<double, 2>, 3> x;
    for (int a = 0; a < 3; ++a)
    {
      x[a] = mesh.coordinates(mesh.vertices()[t[a]]);
    }
    const double det = (x[1][0] - x[0][0]) * (x[2][1] - x[0][1]) -
                       (x[2][0] - x[0][0]) * (x[1][1] - x[0][1]);
    const double area = 0.5 * std::abs(det);
    std::array<std::array<double, 2>, 3> grad;
    for (int a = 0; a < 3; ++a)
    {
      const auto &p = x[(a + 1) % 3], &q = x[(a + 2) % 3];
      grad[a] = {(p[1] - q[1]) / det, (q[0] - p[0]) / det};
    }
    for (int a = 0; a < 3; ++a)
    {
      const Index i = mesh.vertex_dof(t[a]);
      if (i < 0)
      {
        continue;
      }
      for (int b = 0; b < 3; ++b)
      {
        const Index j = mesh.vertex_dof(t[b]);
        if (j < 0)
        {
          continue;
        }
        k(i, j) += area * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
        m(i, j) += area / 12.0 * (a == b ? 2.0 : 1.0);
      }
    }
  }
  return {k, m};
}

bool touches_boundary(const Mesh &mesh, Index dof)
{
  const auto p = mesh.dof_point(dof);
  for (int dy = -1; dy <= 1; ++dy)
  {
    for (int dx = -1; dx <= 1; ++dx)
    {
      if (mesh.dof_at(p.x + dx, p.y + dy) < 0)
      {
        return true;
      }
    }
  }
  return false;
}

TEST(Assemble, SingleDofSquare)
{
  const Mesh mesh = build_mesh(DomainShape::Square, 1);
  const SparsePencil p = assemble(mesh);
  const double g = kPi / 2;
  ASSERT_EQ(p.size(), 1);
  EXPECT_DOUBLE_EQ(p.stiffness.coeff(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(p.mass.coeff(0, 0), g * g / 2);
  EXPECT_NEAR(rayleigh_quotient(p, Vector::Ones(1)), 3.242277876554809, 1e-14);
  EXPECT_NEAR(oracle::dense_discrete_spectrum(p, 1).values[0], 3.242277876554809, 1e-14);
}

TEST(Assemble, MatchesGradientAssembly)
{
  for (auto shape : {DomainShape::Square, DomainShape::LShape})
  {
    for (int j = 1; j <= 3; ++j)
    {
      const Mesh mesh = build_mesh(shape, j);
      const SparsePencil p = assemble(mesh);
      const auto [k, m] = reference_assembly(mesh);
      EXPECT_LE((DenseMatrix(p.stiffness) - k).cwiseAbs().maxCoeff(), 1e-13);
      EXPECT_LE((DenseMatrix(p.mass) - m).cwiseAbs().maxCoeff(), 1e-15);
    }
  }
}

TEST(Assemble, InteriorStencil)
{
  const Mesh mesh = build_mesh(DomainShape::Square, 4);
  const SparsePencil p = assemble(mesh);
  const Index c = mesh.dof_at(8, 8);
  const Index e = mesh.dof_at(9, 8), w = mesh.dof_at(7, 8), n = mesh.dof_at(8, 9),
              s = mesh.dof_at(8, 7);
  EXPECT_EQ(p.stiffness.coeff(c, c), 4.0);
  for (Index nb : {e, w, n, s})
  {
    EXPECT_EQ(p.stiffness.coeff(c, nb), -1.0);
  }
  Index stored = 0;
  for (SparseMatrix::InnerIterator it(p.stiffness, c); it; ++it)
  {
    ++stored;
  }
  EXPECT_EQ(stored, 5);
}

TEST(Assemble, RowSums)
{
  for (auto shape : {DomainShape::Square, DomainShape::LShape})
  {
    const Mesh mesh = build_mesh(shape, 4);
    const SparsePencil p = assemble(mesh);
    const double g2 = mesh.spacing() * mesh.spacing();
    const Vector ones = Vector::Ones(p.size());
    const Vector mrow = p.mass * ones, krow = p.stiffness * ones;
    Index checked = 0;
    for (Index d = 0; d < p.size(); ++d)
    {
      if (!touches_boundary(mesh, d))
      {
        EXPECT_NEAR(mrow[d], g2, 1e-15);
        EXPECT_EQ(krow[d], 0.0);
        ++checked;
      }
    }
    EXPECT_GT(checked, 0);
  }
}

TEST(Assemble, FullMassSumsToArea)
{
  for (auto shape : {DomainShape::Square, DomainShape::LShape})
  {
    for (int j = 1; j <= 5; ++j)
    {
      const Mesh mesh = build_mesh(shape, j);
      const SparsePencil full = assemble(mesh, false);
      EXPECT_EQ(full.size(), static_cast<Index>(mesh.vertices().size()));
      EXPECT_NEAR(full.mass.sum(), mesh.domain_area(), 1e-12 * mesh.domain_area());
      // Constants are in the kernel of the Neumann stiffness.
      EXPECT_LE((full.stiffness * Vector::Ones(full.size())).cwiseAbs().maxCoeff(), 1e-14);
    }
  }
}

TEST(Assemble, ExactlySymmetric)
{
  for (auto shape : {DomainShape::Square, DomainShape::LShape})
  {
    const SparsePencil p = assemble(build_mesh(shape, 5));
    const SparseMatrix kt = p.stiffness.transpose(), mt = p.mass.transpose();
    EXPECT_EQ((p.stiffness - kt).norm(), 0.0);
    EXPECT_EQ((p.mass - mt).norm(), 0.0);
  }
}

TEST(Assemble, PositiveQuadraticForms)
{
  std::mt19937 rng(11);
  std::normal_distribution<double> normal;
  for (auto shape : {DomainShape::Square, DomainShape::LShape})
  {
    for (int j : {2, 4})
    {
      const SparsePencil p = assemble(build_mesh(shape, j));
      for (int trial = 0; trial < 100; ++trial)
      {
        Vector v(p.size());
        for (auto &x : v)
        {
          x = normal(rng);
        }
        EXPECT_GT(v.dot(p.mass * v), 0.0);
        EXPECT_GT(v.dot(p.stiffness * v), 0.0);
      }
    }
  }
}

TEST(Assemble, GalerkinConsistency)
{
  for (auto shape : {DomainShape::Square, DomainShape::LShape})
  {
    for (auto [jc, jf] : {std::pair{1, 2}, std::pair{2, 4}, std::pair{3, 5}})
    {
      const MeshHierarchy h = build_hierarchy(shape, jc, jf);
      const SparsePencil fine = assemble(h.fine), coarse = assemble(h.coarse);
      const SparseMatrix &pr = h.coarse_to_fine;
      const DenseMatrix kg = DenseMatrix(pr.transpose() * fine.stiffness * pr);
      const DenseMatrix mg = DenseMatrix(pr.transpose() * fine.mass * pr);
      const DenseMatrix kc = coarse.stiffness, mc = coarse.mass;
      EXPECT_LE((kg - kc).cwiseAbs().maxCoeff(), 1e-12 * kc.cwiseAbs().maxCoeff());
      EXPECT_LE((mg - mc).cwiseAbs().maxCoeff(), 1e-12 * mc.cwiseAbs().maxCoeff());
    }
  }
}

TEST(Assemble, SmallestEigenvalueConvergesQuadratically)
{
  // Independent dense solves of the same discretization.
  const double frozen[] = {2.07764608026687, 2.0193098965563885, 2.004821215327256};
  double previous = 0.0;
  for (int j = 3; j <= 5; ++j)
  {
    const double l1 =
      oracle::dense_discrete_spectrum(assemble(build_mesh(DomainShape::Square, j)), 1).values[0];
    EXPECT_NEAR(l1, frozen[j - 3], 1e-11);
    EXPECT_GT(l1, 2.0);
    if (j > 3)
    {
      EXPECT_LT(l1, previous);
      EXPECT_NEAR((previous - 2.0) / (l1 - 2.0), 4.0, 0.1);
    }
    previous = l1;
  }
}

TEST(RayleighQuotient, ScaleInvariantAndRejectsZero)
{
  const SparsePencil p = assemble(build_mesh(DomainShape::LShape, 3));
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  Vector v(p.size());
  for (auto &x : v)
  {
    x = u(rng);
  }
  const double q = rayleigh_quotient(p, v);
  EXPECT_GT(q, 0.0);
  EXPECT_NEAR(rayleigh_quotient(p, -3.7 * v), q, 1e-13 * q);
  EXPECT_NEAR(rayleigh_quotient(p, 1e-5 * v), q, 1e-13 * q);
  EXPECT_THROW(rayleigh_quotient(p, Vector::Zero(p.size())), InvalidArgument);
  EXPECT_THROW(rayleigh_quotient(p, Vector::Ones(3)), InvalidArgument);
}

TEST(RayleighQuotient, EigenvectorGivesEigenvalue)
{
  const SparsePencil p = assemble(build_mesh(DomainShape::Square, 4));
  const auto pairs = oracle::dense_discrete_eigenpairs(p, 1, 1);
  EXPECT_NEAR(rayleigh_quotient(p, pairs.vectors.col(0)), pairs.values[0], 1e-12);
}

TEST(MatrixMarket, WritesLowerTriangle)
{
  const SparsePencil p = assemble(build_mesh(DomainShape::Square, 2));
  std::ostringstream out;
  write_matrix_market(out, p.stiffness);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "%%MatrixMarket matrix coordinate real symmetric");
  Index rows, cols, entries;
  in >> rows >> cols >> entries;
  EXPECT_EQ(rows, 9);
  EXPECT_EQ(cols, 9);
  // 9 diagonal entries plus 12 horizontal and vertical neighbour pairs.
  EXPECT_EQ(entries, 21);
  DenseMatrix back = DenseMatrix::Zero(rows, cols);
  for (Index e = 0; e < entries; ++e)
  {
    Index r, c;
    double v;
    in >> r >> c >> v;
    EXPECT_GE(r, c);
    back(r - 1, c - 1) = v;
    back(c - 1, r - 1) = v;
  }
  EXPECT_EQ(back, DenseMatrix(p.stiffness));
}

}  // namespace
}  // namespace schwarzeig
