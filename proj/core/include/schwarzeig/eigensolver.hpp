// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SCHWARZEIG_EIGENSOLVER_HPP
#define SCHWARZEIG_EIGENSOLVER_HPP

#include <optional>
#include <string_view>
#include <vector>

#include "schwarzeig/fem.hpp"
#include "schwarzeig/linalg.hpp"
#include "schwarzeig/mesh.hpp"
#include "schwarzeig/schwarz.hpp"
#include "schwarzeig/types.hpp"

namespace schwarzeig
{

// Targeted eigenvalue indices first..last (1-based, inclusive): lambda_m <= ... <= lambda_M.
struct ClusterSpec
{
  Index first = 1;
  Index last = 1;

  Index size() const { return last - first + 1; }

  // Throws InvalidArgument unless 1 <= first <= last <= dof_count.
  void validate(Index dof_count) const;
};

struct SolverConfig
{
  // Termination when sqrt(sum_i ||r_i||_b^2) < tol.
  double tol = 1e-8;
  int max_iter = 500;

  // delta/H; used when the solver builds the decomposition itself.
  double overlap_ratio = 0.25;

  // Thick restart once the trial space would exceed this dimension. Off by default.
  std::optional<Index> restart_dim;

  // Precondition every correction with the shift lambda_m^k instead of lambda_i^k.
  bool shared_shift = false;

  // Keep a slot's local factorizations while its shift moved by at most this much.
  double lazy_refactor = 0.0;

  double drop_tol = 1e-8;
  int threads = 1;

  // Consecutive iterations without basis growth or stop-norm decrease before giving up.
  int stall_limit = 3;

  void validate(const ClusterSpec &cluster) const;
};

struct IterationRecord
{
  int k = 0;
  std::vector<double> ritz_values;  // lambda_m^k .. lambda_M^k
  double stop_norm = 0.0;
  // sum_i |lambda_i^k - lambda_i^{k-1}|; zero for k = 0.
  double eigenvalue_change = 0.0;
  Index basis_dim = 0;
  double wall_ms = 0.0;
};

//
// Trial space W (M-orthonormal), its projected stiffness W^T K W and the Ritz pairs in it.
// Only pairs 1..M are computed; those below the cluster are kept as coefficients.
//
class IterationState
{
public:
  IterationState(const SparsePencil &pencil, ClusterSpec cluster, double drop_tol = 1e-8);

  const ClusterSpec &cluster() const { return cluster_; }
  Index dim() const { return basis_.cols(); }
  auto basis() const { return basis_.matrix(); }
  const DenseMatrix &projected() const { return projected_; }

  // Ritz values 1..M, ascending.
  const Vector &ritz_values() const { return ritz_values_; }
  const DenseMatrix &ritz_coefficients() const { return ritz_coefficients_; }

  // Ritz values / vectors m..M.
  Vector cluster_values() const;
  const DenseMatrix &cluster_vectors() const { return cluster_vectors_; }

  // Ritz vectors first..last (1-based), computed from the coefficients.
  DenseMatrix ritz_vectors(Index first, Index last) const;

  int iteration() const { return k_; }

private:
  friend IterationState initialize(const MeshHierarchy &, const SparsePencil &, ClusterSpec,
                                   double);
  friend Index rayleigh_ritz(IterationState &, const DenseMatrix &, std::optional<Index>);

  void extend_projection(Index old_dim);
  void solve_projected();

  const SparsePencil *pencil_;
  ClusterSpec cluster_;
  MassOrthonormalBasis basis_;
  DenseMatrix projected_;
  Vector ritz_values_;
  DenseMatrix ritz_coefficients_;
  DenseMatrix cluster_vectors_;
  int k_ = 0;
};

// Eigenpairs 1..M of the initial mesh, prolongated to the fine mesh, then one
// Rayleigh-Ritz in their span. Throws ClusterTooLarge if M exceeds the initial dof count.
IterationState initialize(const MeshHierarchy &hierarchy, const SparsePencil &pencil,
                          ClusterSpec cluster, double drop_tol = 1e-8);

// rho = lambda M u - K u.
Vector residual_dual(const SparsePencil &pencil, double lambda, const Vector &u);

// t_i = (I - U_J U_J^T M) B_i^{-1} rho_i for every cluster index. slot_of[j] is the
// preconditioner slot used for cluster member j (0-based).
DenseMatrix correction_step(const IterationState &state, const SchwarzPreconditioner &prec,
                            const SparsePencil &pencil, const std::vector<Index> &slot_of,
                            int threads = 1);

// Appends the new vectors to W (dropping near-dependent ones), re-solves the projected
// problem and advances the iteration counter. Returns the number of columns added. With
// restart_dim set, W is first collapsed to the Ritz vectors 1..M when it would grow past
// restart_dim. Throws EmptyBasis if W ends up empty.
Index rayleigh_ritz(IterationState &state, const DenseMatrix &new_vectors,
                    std::optional<Index> restart_dim = std::nullopt);

// sqrt(sum_i rho_i^T M^{-1} rho_i) over the given Ritz pairs (columns of `vectors`).
double stop_norm(const SparsePencil &pencil, const Vector &values, const DenseMatrix &vectors,
                 const Factorization &mass_factorization);

enum class SolverStatus
{
  Converged,
  MaxIterations,
  Stagnated
};

std::string_view to_string(SolverStatus status);

struct PhaseTimings
{
  double setup_ms = 0.0;
  double initialize_ms = 0.0;
  double precondition_ms = 0.0;
  double correction_ms = 0.0;
  double rayleigh_ritz_ms = 0.0;
  double stop_norm_ms = 0.0;
  double total_ms = 0.0;
};

struct SolverDiagnostics
{
  // lambda_{M+1}^H, +infinity when the coarse space is fully deflated.
  double coarse_retained_min = 0.0;
  // min_i (lambda_{M+1}^H - lambda_i^0).
  double coarse_gap_min = 0.0;
  // Smallest eigenvalue of the largest local pencil (K_l, M_l).
  double local_min_eigenvalue = 0.0;
  Index subdomains = 0;
  int colors = 0;
  int overlap_layers = 0;
  Index indefinite_local_factorizations = 0;
  Index refactorized_slots = 0;
  Index clamped_shifts = 0;
};

struct SolverReport
{
  SolverStatus status = SolverStatus::MaxIterations;
  ClusterSpec cluster;
  Vector eigenvalues;      // lambda_m .. lambda_M
  DenseMatrix eigenvectors;  // M-orthonormal columns
  Vector initial_eigenvalues;  // lambda_m^0 .. lambda_M^0
  int iterations = 0;
  double stop_norm = 0.0;
  std::vector<IterationRecord> trace;
  std::vector<Index> basis_dims;
  PhaseTimings timings;
  SolverDiagnostics diagnostics;

  bool converged() const { return status == SolverStatus::Converged; }
};

// Algorithm loop: shifts, preconditioner, corrections, Rayleigh-Ritz, stop test.
SolverReport solve(const MeshHierarchy &hierarchy, const SparsePencil &pencil,
                   const Decomposition &decomposition, ClusterSpec cluster,
                   const SolverConfig &config);

// Convenience overload that assembles the fine pencil and builds the decomposition from
// config.overlap_ratio.
SolverReport solve(const MeshHierarchy &hierarchy, ClusterSpec cluster,
                   const SolverConfig &config);

}  // namespace schwarzeig

#endif  // SCHWARZEIG_EIGENSOLVER_HPP
