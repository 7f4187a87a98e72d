// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <numeric>
#include <random>

#include "schwarzeig/errors.hpp"
#include "schwarzeig/oracle.hpp"
#include "schwarzeig/schwarz.hpp"

namespace schwarzeig
{
namespace
{

Vector random_vector(std::mt19937 &rng, Index n)
{
  std::normal_distribution<double> normal;
  Vector v(n);
  for (auto &x : v)
  {
    x = normal(rng);
  }
  return v;
}

struct Fixture
{
  MeshHierarchy hierarchy;
  SparsePencil fine;
  Decomposition decomposition;
  std::shared_ptr<const CoarseSpace> coarse;
  std::shared_ptr<const std::vector<LocalProblem>> locals;

  Fixture(DomainShape shape, int jc, int jf, Index deflation, double ratio = 0.25)
    : hierarchy(build_hierarchy(shape, jc, jf)),
      fine(assemble(hierarchy.fine)),
      decomposition(build_decomposition(hierarchy, ratio)),
      coarse(std::make_shared<CoarseSpace>(
        build_coarse_space(hierarchy.coarse, hierarchy.coarse_to_fine, deflation))),
      locals(std::make_shared<std::vector<LocalProblem>>(
        extract_local_problems(fine, decomposition)))
  {
  }

  SchwarzPreconditioner preconditioner(std::vector<double> shifts, int threads = 1) const
  {
    return SchwarzPreconditioner(coarse, locals, std::move(shifts), threads);
  }

  // Dense operator built from the full fine matrices and an independent coarse eigensolve.
  DenseMatrix dense_operator(double shift, Index deflation) const
  {
    const Index n = fine.size();
    const DenseMatrix k = fine.stiffness, m = fine.mass;
    DenseMatrix b = DenseMatrix::Zero(n, n);
    for (const auto &dofs : decomposition.subdomains)
    {
      const Index s = static_cast<Index>(dofs.size());
      DenseMatrix a(s, s);
      for (Index i = 0; i < s; ++i)
      {
        for (Index j = 0; j < s; ++j)
        {
          a(i, j) = k(dofs[i], dofs[j]) - shift * m(dofs[i], dofs[j]);
        }
      }
      const DenseMatrix inv = a.inverse();
      for (Index i = 0; i < s; ++i)
      {
        for (Index j = 0; j < s; ++j)
        {
          b(dofs[i], dofs[j]) += inv(i, j);
        }
      }
    }
    const SparsePencil cp = assemble(hierarchy.coarse);
    if (deflation < cp.size())
    {
      const auto pairs = oracle::dense_discrete_eigenpairs(cp, deflation + 1, cp.size());
      const DenseMatrix pu = hierarchy.coarse_to_fine * pairs.vectors;
      const Vector w = (pairs.values.array() - shift).inverse();
      b += pu * w.asDiagonal() * pu.transpose();
    }
    return b;
  }
};

TEST(CoarseSpace, StoresFullCoarseSpectrum)
{
  const MeshHierarchy h = build_hierarchy(DomainShape::Square, 2, 4);
  const CoarseSpace c = build_coarse_space(h.coarse, h.coarse_to_fine, 2);
  const double frozen[] = {2.316787482814207, 6.338671301459193, 7.250201169804122,
                           12.214503887456326, 15.562933807463097, 16.764314024523358,
                           20.896462861601197, 26.09894270333103, 32.41841891763884};
  ASSERT_EQ(c.size(), 9);
  for (Index i = 0; i < 9; ++i)
  {
    EXPECT_NEAR(c.values[i], frozen[i], 1e-11);
  }
  EXPECT_DOUBLE_EQ(c.first_retained_value(), c.values[2]);
  const CoarseSpace all = build_coarse_space(h.coarse, h.coarse_to_fine, 9);
  EXPECT_TRUE(std::isinf(all.first_retained_value()));
  EXPECT_THROW(build_coarse_space(h.coarse, h.coarse_to_fine, -1), InvalidArgument);
  EXPECT_THROW(build_coarse_space(h.initial, h.coarse_to_fine, 0), InvalidArgument);
}

TEST(LocalProblems, PrincipalSubmatrices)
{
  const Fixture s(DomainShape::LShape, 2, 4, 0);
  ASSERT_EQ(s.locals->size(), s.decomposition.subdomains.size());
  const DenseMatrix k = s.fine.stiffness, m = s.fine.mass;
  for (const auto &local : *s.locals)
  {
    const Index n = static_cast<Index>(local.dofs.size());
    for (Index i = 0; i < n; ++i)
    {
      for (Index j = 0; j < n; ++j)
      {
        EXPECT_EQ(local.stiffness.coeff(i, j), k(local.dofs[i], local.dofs[j]));
        EXPECT_EQ(local.mass.coeff(i, j), m(local.dofs[i], local.dofs[j]));
      }
    }
  }
}

TEST(LocalProblems, SmallestEigenvalueByInverseIteration)
{
  const Fixture s(DomainShape::Square, 2, 4, 0);
  for (const auto &local : *s.locals)
  {
    const EigenBasis e =
      dense_generalized_eig(DenseMatrix(local.stiffness), DenseMatrix(local.mass));
    EXPECT_NEAR(smallest_local_eigenvalue(local), e.values[0], 1e-8 * e.values[0]);
  }
}

TEST(Preconditioner, MatchesDenseOperator)
{
  for (auto shape : {DomainShape::Square, DomainShape::LShape})
  {
    const Fixture s(shape, 2, 4, 3);
    const double shift = 0.5 * s.coarse->values[0];
    const auto pc = s.preconditioner({shift, 0.0});
    const DenseMatrix dense = s.dense_operator(shift, 3);
    std::mt19937 rng(1);
    for (int trial = 0; trial < 5; ++trial)
    {
      const Vector rho = random_vector(rng, s.fine.size());
      const Vector expected = dense * rho;
      EXPECT_LE((pc.apply(rho, 0) - expected).norm(), 1e-9 * expected.norm());
    }
  }
}

TEST(Preconditioner, IndefiniteShiftMatchesDenseOperator)
{
  // A shift above several local minima forces LDL^T on some subdomains.
  const Fixture s(DomainShape::Square, 2, 4, 3);
  const double shift = 0.5 * (s.coarse->values[2] + s.coarse->values[3]);
  const auto pc = s.preconditioner({shift});
  const DenseMatrix dense = s.dense_operator(shift, 3);
  std::mt19937 rng(2);
  const Vector rho = random_vector(rng, s.fine.size());
  const Vector expected = dense * rho;
  EXPECT_LE((pc.apply(rho, 0) - expected).norm(), 1e-9 * expected.norm());
}

TEST(Preconditioner, ZeroMapsToZero)
{
  const Fixture s(DomainShape::Square, 2, 4, 2);
  const auto pc = s.preconditioner({1.0});
  EXPECT_EQ(pc.apply(Vector::Zero(s.fine.size()), 0), Vector::Zero(s.fine.size()));
}

TEST(Preconditioner, SymmetricAndLinear)
{
  const Fixture s(DomainShape::LShape, 2, 5, 4);
  const auto pc = s.preconditioner({0.9 * s.coarse->values[0], 1.0}, 2);
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial)
  {
    const Vector x = random_vector(rng, s.fine.size());
    const Vector y = random_vector(rng, s.fine.size());
    for (Index slot = 0; slot < 2; ++slot)
    {
      const double xy = x.dot(pc.apply(y, slot)), yx = y.dot(pc.apply(x, slot));
      EXPECT_NEAR(xy, yx, 1e-10 * std::max(1.0, std::abs(xy)));
    }
  }
  const Vector x = random_vector(rng, s.fine.size());
  const Vector y = random_vector(rng, s.fine.size());
  const Vector lhs = pc.apply(2.5 * x - y, 0);
  const Vector rhs = 2.5 * pc.apply(x, 0) - pc.apply(y, 0);
  EXPECT_LE((lhs - rhs).norm(), 1e-12 * rhs.norm());
  EXPECT_LE((pc.apply(x, 0) - pc.apply_coarse(x, 0) - pc.apply_local(x, 0)).norm(),
            1e-14 * pc.apply(x, 0).norm());
}

TEST(Preconditioner, ThreadCountDoesNotChangeResult)
{
  const Fixture s(DomainShape::Square, 3, 5, 4);
  const std::vector<double> shifts{1.0, 2.0};
  const auto serial = s.preconditioner(shifts, 1);
  const auto parallel = s.preconditioner(shifts, 4);
  std::mt19937 rng(4);
  const Vector rho = random_vector(rng, s.fine.size());
  EXPECT_EQ(serial.apply(rho, 1), parallel.apply(rho, 1));
}

TEST(Preconditioner, CoarseTermAnnihilatesDeflatedModes)
{
  const Fixture s(DomainShape::Square, 2, 4, 3);
  const double shift = 1.0;
  const auto pc = s.preconditioner({shift});
  const SparseMatrix &p = s.coarse->prolongation;
  for (Index k = 0; k < s.coarse->size(); ++k)
  {
    // P^T M_h P = M_H, so this functional picks out coarse mode k alone.
    const Vector rho = s.fine.mass * (p * s.coarse->vectors.col(k));
    const Vector t = pc.apply_coarse(rho, 0);
    if (k < 3)
    {
      EXPECT_LE(t.norm(), 1e-12 * rho.norm()) << "mode " << k;
    }
    else
    {
      const Vector expected = p * s.coarse->vectors.col(k) / (s.coarse->values[k] - shift);
      EXPECT_LE((t - expected).norm(), 1e-10 * expected.norm()) << "mode " << k;
    }
  }
}

TEST(Preconditioner, SingleSubdomainIsExactInverse)
{
  const MeshHierarchy h = build_hierarchy(DomainShape::LShape, 1, 3);
  const SparsePencil fine = assemble(h.fine);
  Decomposition whole;
  whole.subdomains.emplace_back(fine.size());
  std::iota(whole.subdomains[0].begin(), whole.subdomains[0].end(), Index{0});
  auto locals = std::make_shared<std::vector<LocalProblem>>(extract_local_problems(fine, whole));
  const Index coarse_dofs = h.coarse.dof_count();
  auto coarse =
    std::make_shared<CoarseSpace>(build_coarse_space(h.coarse, h.coarse_to_fine, coarse_dofs));
  const double shift = 7.0;
  const SchwarzPreconditioner pc(coarse, locals, {shift});
  std::mt19937 rng(6);
  const Vector rho = random_vector(rng, fine.size());
  const DenseMatrix a = DenseMatrix(fine.stiffness) - shift * DenseMatrix(fine.mass);
  const Vector expected = a.partialPivLu().solve(rho);
  EXPECT_LE((pc.apply(rho, 0) - expected).norm(), 1e-10 * expected.norm());
}

TEST(Preconditioner, CoarseMinEigenvalue)
{
  // Cluster (1, 2) on coarse level 2 with the shift lambda_1 of the level 3 pencil.
  const Fixture s(DomainShape::Square, 2, 4, 2);
  const double shift =
    oracle::dense_discrete_spectrum(assemble(s.hierarchy.initial), 1).values[0];
  const auto pc = s.preconditioner({shift});
  EXPECT_NEAR(pc.coarse_min_eigenvalue(0), 5.172555089537251, 1e-10);
  EXPECT_NEAR(pc.coarse_min_eigenvalue(0), s.coarse->values[2] - shift, 1e-14);
}

TEST(Preconditioner, ShiftValidation)
{
  const Fixture s(DomainShape::Square, 2, 4, 2);
  const double limit = s.coarse->first_retained_value();
  EXPECT_THROW(s.preconditioner({limit}), ShiftOutOfRange);
  EXPECT_THROW(s.preconditioner({1.0, limit + 1.0}), ShiftOutOfRange);
  EXPECT_THROW(s.preconditioner({std::nan("")}), InvalidArgument);
  auto pc = s.preconditioner({1.0});
  EXPECT_THROW(pc.apply(Vector::Zero(s.fine.size()), 1), InvalidArgument);
  EXPECT_THROW(pc.apply(Vector::Zero(3), 0), InvalidArgument);
  EXPECT_THROW(pc.update_shifts(std::vector<double>{limit}), ShiftOutOfRange);
  EXPECT_THROW(pc.update_shifts(std::vector<double>{1.0, 2.0}), InvalidArgument);
  EXPECT_THROW(SchwarzPreconditioner(nullptr, s.locals, {1.0}), InvalidArgument);
}

TEST(Preconditioner, ZeroShiftFactorizationsAreDefinite)
{
  const Fixture s(DomainShape::LShape, 2, 5, 2);
  EXPECT_EQ(s.preconditioner({0.0}).indefinite_count(), 0);
  const double high = 0.5 * (s.coarse->values[1] + s.coarse->values[2]);
  const auto pc = s.preconditioner({high});
  // Local minima sit far above lambda_3 on subdomains this small.
  for (const auto &local : *s.locals)
  {
    EXPECT_GT(smallest_local_eigenvalue(local), high);
  }
  EXPECT_EQ(pc.indefinite_count(), 0);
}

TEST(Preconditioner, UpdateShiftsRefactorsOnlyMovedSlots)
{
  const Fixture s(DomainShape::Square, 2, 4, 3);
  auto pc = s.preconditioner({1.0, 2.0, 3.0});
  std::vector<double> next{1.0, 2.0 + 1e-3, 3.5};
  EXPECT_EQ(pc.update_shifts(next), 2);
  EXPECT_DOUBLE_EQ(pc.shift(1), 2.0 + 1e-3);
  std::vector<double> nudged{1.0 + 1e-4, 2.0 + 1e-3, 3.0};
  EXPECT_EQ(pc.update_shifts(nudged, 1e-2), 1);
  EXPECT_DOUBLE_EQ(pc.shift(0), 1.0);
  EXPECT_DOUBLE_EQ(pc.shift(2), 3.0);

  const auto fresh = s.preconditioner({1.0, 2.0 + 1e-3, 3.0});
  std::mt19937 rng(8);
  const Vector rho = random_vector(rng, s.fine.size());
  for (Index slot = 0; slot < 3; ++slot)
  {
    EXPECT_LE((pc.apply(rho, slot) - fresh.apply(rho, slot)).norm(),
              1e-13 * fresh.apply(rho, slot).norm());
  }
}

TEST(Preconditioner, PrepareBuildsLocalsItself)
{
  const Fixture s(DomainShape::Square, 2, 4, 2);
  const auto a = prepare(s.fine, s.decomposition, s.coarse, {1.5});
  const auto b = s.preconditioner({1.5});
  EXPECT_EQ(a.subdomain_count(), s.decomposition.size());
  std::mt19937 rng(10);
  const Vector rho = random_vector(rng, s.fine.size());
  EXPECT_EQ(a.apply(rho, 0), b.apply(rho, 0));
}

}  // namespace
}  // namespace schwarzeig
