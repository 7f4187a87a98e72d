// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#include "schwarzeig/eigensolver.hpp"

#include <spdlog/spdlog.h>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "parallel.hpp"
#include "schwarzeig/errors.hpp"

namespace schwarzeig
{

namespace
{

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since)
{
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Relative margin below lambda_{M+1}^H that shifts are clamped to.
constexpr double kShiftMargin = 1e-8;

}  // namespace

void ClusterSpec::validate(Index dof_count) const
{
  if (first < 1 || last < first || last > dof_count)
  {
    throw InvalidArgument("cluster (" + std::to_string(first) + ", " + std::to_string(last) +
                          ") must satisfy 1 <= m <= M <= " + std::to_string(dof_count));
  }
}

void SolverConfig::validate(const ClusterSpec &cluster) const
{
  if (!(tol > 0.0))
  {
    throw InvalidArgument("tol must be positive");
  }
  if (max_iter < 1)
  {
    throw InvalidArgument("max_iter must be at least 1");
  }
  if (restart_dim && *restart_dim < 2 * cluster.last + 1)
  {
    throw InvalidArgument("restart_dim must be at least 2 M + 1 = " +
                          std::to_string(2 * cluster.last + 1));
  }
  if (!(lazy_refactor >= 0.0))
  {
    throw InvalidArgument("lazy_refactor must be non-negative");
  }
  if (!(drop_tol > 0.0 && drop_tol < 1.0))
  {
    throw InvalidArgument("drop_tol must lie in (0, 1)");
  }
  if (threads < 1)
  {
    throw InvalidArgument("threads must be at least 1");
  }
  if (stall_limit < 1)
  {
    throw InvalidArgument("stall_limit must be at least 1");
  }
}

IterationState::IterationState(const SparsePencil &pencil, ClusterSpec cluster, double drop_tol)
  : pencil_(&pencil), cluster_(cluster), basis_(pencil.mass, drop_tol)
{
  cluster_.validate(pencil.size());
}

Vector IterationState::cluster_values() const
{
  return ritz_values_.segment(cluster_.first - 1, cluster_.size());
}

DenseMatrix IterationState::ritz_vectors(Index first, Index last) const
{
  if (first < 1 || last < first || last > dim())
  {
    throw InvalidArgument("ritz_vectors: index range outside the trial space");
  }
  return basis_.matrix() * ritz_coefficients_.middleCols(first - 1, last - first + 1);
}

void IterationState::extend_projection(Index old_dim)
{
  const Index n = dim();
  const Index added = n - old_dim;
  DenseMatrix next(n, n);
  next.topLeftCorner(old_dim, old_dim) = projected_.topLeftCorner(old_dim, old_dim);
  if (added > 0)
  {
    const DenseMatrix fresh = basis_.matrix().rightCols(added);
    const DenseMatrix k_fresh = pencil_->stiffness * fresh;
    const DenseMatrix block = basis_.matrix().transpose() * k_fresh;  // n x added
    next.rightCols(added) = block;
    next.bottomLeftCorner(added, old_dim) = block.topRows(old_dim).transpose();
    const DenseMatrix corner = block.bottomRows(added);
    next.bottomRightCorner(added, added) = 0.5 * (corner + corner.transpose());
  }
  projected_.swap(next);
}

void IterationState::solve_projected()
{
  if (dim() < cluster_.last)
  {
    throw EmptyBasis("trial space of dimension " + std::to_string(dim()) +
                     " cannot hold Ritz pairs up to index " + std::to_string(cluster_.last));
  }
  // Only pairs 1..M are ever used; the remaining Ritz pairs are not computed.
  EigenBasis eig = dense_symmetric_eig_lowest(projected_, cluster_.last);
  ritz_values_ = std::move(eig.values);
  ritz_coefficients_ = std::move(eig.vectors);

  // The eigensolver is accurate to eps * ||S||, and ||S|| picks up the high-frequency part of
  // the corrections. Rayleigh quotients of the computed y_j are second-order accurate, so they
  // track the exact Ritz values of the stored S, which interlace across iterations.
  const DenseMatrix sy = projected_.selfadjointView<Eigen::Lower>() * ritz_coefficients_;
  for (Index j = 0; j < cluster_.last; ++j)
  {
    const auto y = ritz_coefficients_.col(j);
    ritz_values_[j] = y.dot(sy.col(j)) / y.squaredNorm();
  }
  // Refinement can swap near-equal neighbours; keep the pairs ascending.
  for (Index j = 1; j < cluster_.last; ++j)
  {
    for (Index i = j; i > 0 && ritz_values_[i] < ritz_values_[i - 1]; --i)
    {
      std::swap(ritz_values_[i], ritz_values_[i - 1]);
      ritz_coefficients_.col(i).swap(ritz_coefficients_.col(i - 1));
    }
  }
  cluster_vectors_ = ritz_vectors(cluster_.first, cluster_.last);
}

IterationState initialize(const MeshHierarchy &hierarchy, const SparsePencil &pencil,
                          ClusterSpec cluster, double drop_tol)
{
  cluster.validate(pencil.size());
  if (cluster.last > hierarchy.initial.dof_count())
  {
    throw ClusterTooLarge("cluster end M = " + std::to_string(cluster.last) +
                          " exceeds the " + std::to_string(hierarchy.initial.dof_count()) +
                          " dofs of the initial mesh; refine the initial level");
  }
  if (pencil.size() != hierarchy.fine.dof_count())
  {
    throw InvalidArgument("initialize: pencil does not match the fine mesh");
  }

  const SparsePencil initial = assemble(hierarchy.initial);
  const EigenBasis eig = dense_generalized_eig_lowest(
    DenseMatrix(initial.stiffness), DenseMatrix(initial.mass), cluster.last);
  const DenseMatrix prolongated = hierarchy.initial_to_fine * eig.vectors;

  IterationState state(pencil, cluster, drop_tol);
  state.basis_.append(prolongated);
  state.projected_.resize(0, 0);
  state.extend_projection(0);
  state.solve_projected();
  return state;
}

Vector residual_dual(const SparsePencil &pencil, double lambda, const Vector &u)
{
  Vector rho = pencil.mass * u;
  rho *= lambda;
  rho.noalias() -= pencil.stiffness * u;
  return rho;
}

DenseMatrix correction_step(const IterationState &state, const SchwarzPreconditioner &prec,
                            const SparsePencil &pencil, const std::vector<Index> &slot_of,
                            int threads)
{
  const Index count = state.cluster().size();
  if (static_cast<Index>(slot_of.size()) != count)
  {
    throw InvalidArgument("correction_step: one preconditioner slot per cluster member needed");
  }
  const Vector values = state.cluster_values();
  const DenseMatrix &u = state.cluster_vectors();
  const DenseMatrix mu = pencil.mass * u;

  DenseMatrix t(pencil.size(), count);
  detail::parallel_for(count, threads,
                       [&](Index j)
                       {
                         const Vector rho = residual_dual(pencil, values[j], u.col(j));
                         Vector s = prec.apply(rho, slot_of[j]);
                         const Vector coeffs = mu.transpose() * s;
                         s.noalias() -= u * coeffs;
                         t.col(j) = s;
                       });
  return t;
}

Index rayleigh_ritz(IterationState &state, const DenseMatrix &new_vectors,
                    std::optional<Index> restart_dim)
{
  bool restarted = false;
  if (restart_dim && state.dim() + new_vectors.cols() > *restart_dim &&
      state.dim() > state.cluster().last)
  {
    restarted = true;
    const Index keep = state.cluster().last;
    const DenseMatrix kept = state.ritz_vectors(1, keep);
    state.basis_.reset(kept);
    state.projected_ = state.ritz_values_.head(keep).asDiagonal();
  }

  const Index old_dim = state.dim();
  const Index added = static_cast<Index>(state.basis_.append(new_vectors).size());
  if (state.dim() == 0)
  {
    throw EmptyBasis("rayleigh_ritz: trial space is empty");
  }
  if (added > 0 || restarted)
  {
    state.extend_projection(old_dim);
    state.solve_projected();
  }
  ++state.k_;
  return added;
}

double stop_norm(const SparsePencil &pencil, const Vector &values, const DenseMatrix &vectors,
                 const Factorization &mass_factorization)
{
  double sum = 0.0;
  Vector x;
  for (Index j = 0; j < vectors.cols(); ++j)
  {
    const Vector rho = residual_dual(pencil, values[j], vectors.col(j));
    mass_factorization.solve(rho, x);
    sum += rho.dot(x);
  }
  return std::sqrt(std::max(sum, 0.0));
}

std::string_view to_string(SolverStatus status)
{
  switch (status)
  {
    case SolverStatus::Converged:
      return "converged";
    case SolverStatus::MaxIterations:
      return "max_iterations";
    case SolverStatus::Stagnated:
      return "stagnated";
  }
  return "unknown";
}

SolverReport solve(const MeshHierarchy &hierarchy, const SparsePencil &pencil,
                   const Decomposition &decomposition, ClusterSpec cluster,
                   const SolverConfig &config)
{
  const auto start = Clock::now();
  cluster.validate(pencil.size());
  config.validate(cluster);

  SolverReport report;
  report.cluster = cluster;

  auto locals = std::make_shared<const std::vector<LocalProblem>>(
    extract_local_problems(pencil, decomposition));
  auto coarse = std::make_shared<const CoarseSpace>(
    build_coarse_space(hierarchy.coarse, hierarchy.coarse_to_fine, cluster.last));
  const Factorization mass_factorization(pencil.mass, true);

  auto &diag = report.diagnostics;
  diag.subdomains = decomposition.size();
  diag.colors = decomposition.color_count;
  diag.overlap_layers = decomposition.overlap_layers;
  diag.coarse_retained_min = coarse->first_retained_value();
  if (!locals->empty())
  {
    const auto largest = std::max_element(locals->begin(), locals->end(),
                                          [](const LocalProblem &a, const LocalProblem &b)
                                          { return a.dofs.size() < b.dofs.size(); });
    diag.local_min_eigenvalue = smallest_local_eigenvalue(*largest);
  }
  report.timings.setup_ms = elapsed_ms(start);

  auto phase = Clock::now();
  IterationState state = initialize(hierarchy, pencil, cluster, config.drop_tol);
  report.timings.initialize_ms = elapsed_ms(phase);
  report.initial_eigenvalues = state.cluster_values();
  diag.coarse_gap_min = diag.coarse_retained_min - report.initial_eigenvalues.maxCoeff();

  const double shift_cap = std::isfinite(diag.coarse_retained_min)
                             ? diag.coarse_retained_min * (1.0 - kShiftMargin)
                             : std::numeric_limits<double>::infinity();
  std::vector<Index> slot_of(static_cast<std::size_t>(cluster.size()));
  for (Index j = 0; j < cluster.size(); ++j)
  {
    slot_of[j] = config.shared_shift ? 0 : j;
  }

  std::optional<SchwarzPreconditioner> prec;
  Vector previous;
  int stalls = 0;
  for (;;)
  {
    const Vector values = state.cluster_values();
    phase = Clock::now();
    const double stop = stop_norm(pencil, values, state.cluster_vectors(), mass_factorization);
    report.timings.stop_norm_ms += elapsed_ms(phase);

    IterationRecord record;
    record.k = state.iteration();
    record.ritz_values.assign(values.data(), values.data() + values.size());
    record.stop_norm = stop;
    record.eigenvalue_change = previous.size() ? (values - previous).cwiseAbs().sum() : 0.0;
    record.basis_dim = state.dim();
    record.wall_ms = elapsed_ms(start);
    report.trace.push_back(record);
    report.basis_dims.push_back(state.dim());
    spdlog::debug("k = {:3d}  stop = {:.4e}  dim = {}", record.k, stop, state.dim());

    if (stop < config.tol)
    {
      report.status = SolverStatus::Converged;
      break;
    }
    if (state.iteration() >= config.max_iter)
    {
      report.status = SolverStatus::MaxIterations;
      break;
    }
    if (stalls >= config.stall_limit)
    {
      report.status = SolverStatus::Stagnated;
      break;
    }

    std::vector<double> shifts;
    const Index slots = config.shared_shift ? 1 : cluster.size();
    for (Index j = 0; j < slots; ++j)
    {
      double s = values[j];
      if (s > shift_cap)
      {
        s = shift_cap;
        ++diag.clamped_shifts;
      }
      shifts.push_back(s);
    }

    phase = Clock::now();
    if (!prec)
    {
      prec.emplace(coarse, locals, shifts, config.threads);
      diag.refactorized_slots += slots;
    }
    else
    {
      diag.refactorized_slots += prec->update_shifts(shifts, config.lazy_refactor);
    }
    report.timings.precondition_ms += elapsed_ms(phase);

    phase = Clock::now();
    const DenseMatrix corrections =
      correction_step(state, *prec, pencil, slot_of, config.threads);
    report.timings.correction_ms += elapsed_ms(phase);

    phase = Clock::now();
    const Index added = rayleigh_ritz(state, corrections, config.restart_dim);
    report.timings.rayleigh_ritz_ms += elapsed_ms(phase);

    stalls = added == 0 ? stalls + 1 : 0;
    previous = values;
  }

  if (prec)
  {
    diag.indefinite_local_factorizations = prec->indefinite_count();
  }
  report.iterations = state.iteration();
  report.stop_norm = report.trace.back().stop_norm;
  report.eigenvalues = state.cluster_values();
  report.eigenvectors = state.cluster_vectors();
  report.timings.total_ms = elapsed_ms(start);
  return report;
}

SolverReport solve(const MeshHierarchy &hierarchy, ClusterSpec cluster,
                   const SolverConfig &config)
{
  const SparsePencil pencil = assemble(hierarchy.fine);
  const Decomposition decomposition = build_decomposition(hierarchy, config.overlap_ratio);
  return solve(hierarchy, pencil, decomposition, cluster, config);
}

}  // namespace schwarzeig
