// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SCHWARZEIG_TOOLS_EXPERIMENT_HPP
#define SCHWARZEIG_TOOLS_EXPERIMENT_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "schwarzeig/eigensolver.hpp"
#include "schwarzeig/mesh.hpp"
#include "schwarzeig/oracle.hpp"

namespace schwarzeig::experiment
{

enum class OutputFormat
{
  Csv,
  Json
};

std::string_view to_string(OutputFormat format);
OutputFormat parse_output_format(std::string_view name);

struct ExperimentConfig
{
  DomainShape domain = DomainShape::Square;
  int coarse_level = 3;
  int fine_level = 6;
  // Level of the initial mesh; coarse_level + 1 when unset.
  std::optional<int> initial_level;
  double overlap_ratio = 0.25;
  Index m = 1;
  Index M = 1;
  double tol = 1e-8;
  int max_iter = 500;
  std::optional<Index> restart_dim;
  bool shared_shift = false;
  double lazy_refactor = 0.0;
  int threads = 1;
  std::filesystem::path output_dir = "out";
  OutputFormat format = OutputFormat::Csv;

  ClusterSpec cluster() const { return {m, M}; }
  SolverConfig solver() const;

  // Checks everything that can be checked without building meshes: levels, cluster bounds
  // against the fine and initial dof counts, overlap, solver options. Throws InvalidArgument.
  void validate() const;

  // Every field, defaults included, in a fixed key order.
  nlohmann::ordered_json to_json() const;
};

// Total errors e_k = sum_i (lambda_i^k - lambda_i^h) for every trace record.
std::vector<double> total_errors(const std::vector<IterationRecord> &trace,
                                 const std::vector<double> &reference);

// Ratios e_k / e_{k-1} for k >= 2. Pairs where either error has sunk below `floor` are skipped:
// there the difference is dominated by rounding in the reference and the iterate.
std::vector<double> decay_ratios(const std::vector<double> &errors, double floor);

// Noise floor used for decay ratios: 1e-12 times the sum of the reference values.
double decay_floor(const std::vector<double> &reference);

// Geometric mean of the ratios, or nothing if there are none.
std::optional<double> fit_gamma(const std::vector<double> &ratios);

struct RunResult
{
  ExperimentConfig config;
  SolverReport report;
  Index dofs = 0;
  // Dense discrete lambda_m^h..lambda_M^h when the fine pencil is small enough.
  std::optional<std::vector<double>> reference;
  std::vector<double> ratios;
  std::optional<double> gamma;
};

// Builds the problem, solves, and compares with the oracle when it is affordable.
RunResult run_experiment(const ExperimentConfig &config);

// trace.csv, final.csv and summary.json (or their .json counterparts) in config.output_dir.
void write_outputs(const RunResult &result);

nlohmann::ordered_json summary_json(const RunResult &result);

enum class SweepParameter
{
  Fine,
  Coarse
};

SweepParameter parse_sweep_parameter(std::string_view name);
std::string_view to_string(SweepParameter parameter);

struct SweepEntry
{
  int value = 0;
  std::optional<RunResult> result;
  std::string error;
};

// One run per value, each writing into output_dir/<parameter>_<value>. A failing run is
// recorded and the sweep moves on. Throws InvalidArgument on an empty value list.
std::vector<SweepEntry> sweep(const ExperimentConfig &base, SweepParameter parameter,
                              const std::vector<int> &values);

// Columns are the swept values; rows are eigenvalue indices m..M, then it., stop. and status.
std::string sweep_table(const ExperimentConfig &base, SweepParameter parameter,
                        const std::vector<SweepEntry> &entries);

// stiffness.mtx and mass.mtx of the fine pencil in config.output_dir.
void export_pencil(const ExperimentConfig &config);

}  // namespace schwarzeig::experiment

#endif  // SCHWARZEIG_TOOLS_EXPERIMENT_HPP
