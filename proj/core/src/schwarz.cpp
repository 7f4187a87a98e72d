// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#include "schwarzeig/schwarz.hpp"

#include <spdlog/spdlog.h>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "parallel.hpp"
#include "schwarzeig/errors.hpp"

namespace schwarzeig
{

double CoarseSpace::first_retained_value() const
{
  return deflation < size() ? values[deflation] : std::numeric_limits<double>::infinity();
}

CoarseSpace build_coarse_space(const Mesh &coarse, SparseMatrix prolongation, Index deflation)
{
  if (prolongation.cols() != coarse.dof_count())
  {
    throw InvalidArgument("coarse space: prolongation does not match the coarse mesh");
  }
  if (deflation < 0)
  {
    throw InvalidArgument("coarse space: negative deflation count");
  }
  const SparsePencil pencil = assemble(coarse);
  EigenBasis eig = dense_generalized_eig(DenseMatrix(pencil.stiffness), DenseMatrix(pencil.mass));
  return CoarseSpace{std::move(prolongation), std::move(eig.values), std::move(eig.vectors),
                     deflation};
}

std::vector<LocalProblem> extract_local_problems(const SparsePencil &pencil,
                                                 const Decomposition &decomposition)
{
  std::vector<int> local_of(static_cast<std::size_t>(pencil.size()), -1);
  std::vector<LocalProblem> locals;
  locals.reserve(decomposition.subdomains.size());

  std::vector<Eigen::Triplet<double, int>> k_entries, m_entries;
  for (const auto &dofs : decomposition.subdomains)
  {
    for (std::size_t a = 0; a < dofs.size(); ++a)
    {
      local_of[dofs[a]] = static_cast<int>(a);
    }
    k_entries.clear();
    m_entries.clear();
    for (std::size_t a = 0; a < dofs.size(); ++a)
    {
      const auto row = static_cast<int>(dofs[a]);
      for (SparseMatrix::InnerIterator it(pencil.stiffness, row); it; ++it)
      {
        if (const int b = local_of[it.col()]; b >= 0)
        {
          k_entries.emplace_back(static_cast<int>(a), b, it.value());
        }
      }
      for (SparseMatrix::InnerIterator it(pencil.mass, row); it; ++it)
      {
        if (const int b = local_of[it.col()]; b >= 0)
        {
          m_entries.emplace_back(static_cast<int>(a), b, it.value());
        }
      }
    }
    const auto n = static_cast<Index>(dofs.size());
    LocalProblem local{dofs, SparseMatrix(n, n), SparseMatrix(n, n)};
    local.stiffness.setFromTriplets(k_entries.begin(), k_entries.end());
    local.mass.setFromTriplets(m_entries.begin(), m_entries.end());
    locals.push_back(std::move(local));

    for (Index d : dofs)
    {
      local_of[d] = -1;
    }
  }
  return locals;
}

double smallest_local_eigenvalue(const LocalProblem &local, double tol)
{
  const Index n = static_cast<Index>(local.dofs.size());
  if (n == 0)
  {
    return std::numeric_limits<double>::infinity();
  }
  const Factorization k(local.stiffness, true);
  Vector x = Vector::Ones(n);
  double value = 0.0;
  for (int it = 0; it < 500; ++it)
  {
    x = k.solve(local.mass * x);
    const Vector mx = local.mass * x;
    x /= std::sqrt(x.dot(mx));
    const double next = x.dot(local.stiffness * x);
    if (it > 0 && std::abs(next - value) <= tol * next)
    {
      return next;
    }
    value = next;
  }
  return value;
}

SchwarzPreconditioner::SchwarzPreconditioner(
  std::shared_ptr<const CoarseSpace> coarse,
  std::shared_ptr<const std::vector<LocalProblem>> locals, std::vector<double> shifts,
  int threads)
  : coarse_(std::move(coarse)), locals_(std::move(locals)), threads_(std::max(threads, 1))
{
  if (!coarse_ || !locals_)
  {
    throw InvalidArgument("preconditioner: missing coarse space or local problems");
  }
  const double bound = coarse_->first_retained_value();
  for (double s : shifts)
  {
    if (!std::isfinite(s))
    {
      throw InvalidArgument("preconditioner: shift is not finite");
    }
    if (!(s < bound))
    {
      throw ShiftOutOfRange("preconditioner: shift " + std::to_string(s) +
                              " is not below lambda_{M+1}^H = " + std::to_string(bound),
                            s, bound);
    }
  }
  shifts_ = std::move(shifts);
  slots_.reserve(shifts_.size());
  for (double s : shifts_)
  {
    slots_.push_back(prepare_slot(s));
  }
}

SchwarzPreconditioner::Slot SchwarzPreconditioner::prepare_slot(double shift) const
{
  const auto &locals = *locals_;
  const Index count = static_cast<Index>(locals.size());

  std::vector<std::optional<Factorization>> built(static_cast<std::size_t>(count));
  std::vector<char> fell_back(static_cast<std::size_t>(count), 0);
  detail::parallel_for(count, threads_,
                       [&](Index l)
                       {
                         bool fb = false;
                         built[l].emplace(factorize_shifted(locals[l].stiffness,
                                                            locals[l].mass, shift, &fb));
                         fell_back[l] = fb ? 1 : 0;
                       });

  Slot slot{shift, {}, 0};
  slot.factors.reserve(static_cast<std::size_t>(count));
  for (Index l = 0; l < count; ++l)
  {
    slot.factors.push_back(std::move(*built[l]));
    slot.indefinite += fell_back[l];
  }
  if (slot.indefinite > 0)
  {
    spdlog::debug("shift {:.6f}: {} of {} local matrices indefinite, factorized with LDL^T",
                 shift, slot.indefinite, count);
  }
  return slot;
}

double SchwarzPreconditioner::shift(Index slot) const
{
  check_slot(slot);
  return shifts_[slot];
}

void SchwarzPreconditioner::check_slot(Index slot) const
{
  if (slot < 0 || slot >= shift_count())
  {
    throw InvalidArgument("preconditioner: no prepared shift with index " +
                          std::to_string(slot));
  }
}

Index SchwarzPreconditioner::update_shifts(std::span<const double> shifts, double reuse_tol)
{
  if (static_cast<Index>(shifts.size()) != shift_count())
  {
    throw InvalidArgument("preconditioner: shift count changed");
  }
  const double bound = coarse_->first_retained_value();
  for (double s : shifts)
  {
    if (!(s < bound))
    {
      throw ShiftOutOfRange("preconditioner: shift " + std::to_string(s) +
                              " is not below lambda_{M+1}^H = " + std::to_string(bound),
                            s, bound);
    }
  }
  Index refreshed = 0;
  for (std::size_t i = 0; i < shifts.size(); ++i)
  {
    const double moved = std::abs(shifts[i] - shifts_[i]);
    if (moved == 0.0 || (reuse_tol > 0.0 && moved <= reuse_tol))
    {
      continue;
    }
    slots_[i] = prepare_slot(shifts[i]);
    shifts_[i] = shifts[i];
    ++refreshed;
  }
  return refreshed;
}

Vector SchwarzPreconditioner::apply_coarse(const Vector &rho, Index slot) const
{
  check_slot(slot);
  const CoarseSpace &c = *coarse_;
  Vector t = Vector::Zero(rho.size());
  if (c.deflation >= c.size())
  {
    return t;
  }
  const double s = shifts_[slot];
  const Index retained = c.size() - c.deflation;
  const auto high = c.vectors.rightCols(retained);
  Vector coeffs = high.transpose() * (c.prolongation.transpose() * rho);
  for (Index j = 0; j < retained; ++j)
  {
    coeffs[j] /= c.values[c.deflation + j] - s;
  }
  const Vector x = high * coeffs;
  t = c.prolongation * x;
  return t;
}

Vector SchwarzPreconditioner::apply_local(const Vector &rho, Index slot) const
{
  check_slot(slot);
  const auto &locals = *locals_;
  const auto &factors = slots_[slot].factors;
  const Index count = static_cast<Index>(locals.size());
  Vector t = Vector::Zero(rho.size());

  auto solve_one = [&](Index l, Vector &x)
  {
    const auto &dofs = locals[l].dofs;
    Vector r(static_cast<Index>(dofs.size()));
    for (std::size_t a = 0; a < dofs.size(); ++a)
    {
      r[a] = rho[dofs[a]];
    }
    factors[l].solve(r, x);
  };

  if (threads_ == 1)
  {
    Vector x;
    for (Index l = 0; l < count; ++l)
    {
      solve_one(l, x);
      const auto &dofs = locals[l].dofs;
      for (std::size_t a = 0; a < dofs.size(); ++a)
      {
        t[dofs[a]] += x[a];
      }
    }
    return t;
  }

  std::vector<Vector> pieces(static_cast<std::size_t>(count));
  detail::parallel_for(count, threads_, [&](Index l) { solve_one(l, pieces[l]); });
  for (Index l = 0; l < count; ++l)
  {
    const auto &dofs = locals[l].dofs;
    for (std::size_t a = 0; a < dofs.size(); ++a)
    {
      t[dofs[a]] += pieces[l][a];
    }
  }
  return t;
}

Vector SchwarzPreconditioner::apply(const Vector &rho, Index slot) const
{
  if (rho.size() != fine_size())
  {
    throw InvalidArgument("preconditioner: residual has the wrong size");
  }
  Vector t = apply_coarse(rho, slot);
  t += apply_local(rho, slot);
  return t;
}

double SchwarzPreconditioner::coarse_min_eigenvalue(Index slot) const
{
  return coarse_->first_retained_value() - shift(slot);
}

Index SchwarzPreconditioner::indefinite_count() const
{
  Index total = 0;
  for (const auto &s : slots_)
  {
    total += s.indefinite;
  }
  return total;
}

SchwarzPreconditioner prepare(const SparsePencil &pencil, const Decomposition &decomposition,
                              std::shared_ptr<const CoarseSpace> coarse,
                              std::vector<double> shifts, int threads)
{
  auto locals = std::make_shared<const std::vector<LocalProblem>>(
    extract_local_problems(pencil, decomposition));
  return SchwarzPreconditioner(std::move(coarse), std::move(locals), std::move(shifts),
                               threads);
}

}  // namespace schwarzeig
