// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#include "experiment.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <spdlog/spdlog.h>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "schwarzeig/errors.hpp"
#include "schwarzeig/fem.hpp"

namespace schwarzeig::experiment
{

namespace
{

std::ofstream open_output(const std::filesystem::path &path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw Error("cannot open " + path.string() + " for writing");
  }
  return out;
}

void write_json(const std::filesystem::path &path, const nlohmann::ordered_json &value)
{
  auto out = open_output(path);
  out << value.dump(2) << '\n';
}

nlohmann::ordered_json optional_json(const std::optional<double> &value)
{
  return value ? nlohmann::ordered_json(*value) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string_view to_string(OutputFormat format)
{
  return format == OutputFormat::Csv ? "csv" : "json";
}

OutputFormat parse_output_format(std::string_view name)
{
  if (name == "csv")
  {
    return OutputFormat::Csv;
  }
  if (name == "json")
  {
    return OutputFormat::Json;
  }
  throw InvalidArgument("unknown output format '" + std::string(name) + "'");
}

SolverConfig ExperimentConfig::solver() const
{
  SolverConfig s;
  s.tol = tol;
  s.max_iter = max_iter;
  s.overlap_ratio = overlap_ratio;
  s.restart_dim = restart_dim;
  s.shared_shift = shared_shift;
  s.lazy_refactor = lazy_refactor;
  s.threads = threads;
  return s;
}

void ExperimentConfig::validate() const
{
  if (coarse_level < 1)
  {
    throw InvalidArgument("coarse level must be at least 1");
  }
  if (fine_level < coarse_level + 1)
  {
    throw InvalidArgument(fmt::format("fine level {} must exceed coarse level {}", fine_level,
                                      coarse_level));
  }
  if (fine_level > 14)
  {
    throw InvalidArgument("fine level must be at most 14");
  }
  const int initial = initial_level.value_or(coarse_level + 1);
  if (initial < coarse_level || initial > fine_level)
  {
    throw InvalidArgument(fmt::format("initial level {} must lie between the coarse level {} "
                                      "and the fine level {}",
                                      initial, coarse_level, fine_level));
  }
  cluster().validate(interior_dof_count(domain, fine_level));
  const Index initial_dofs = interior_dof_count(domain, initial);
  if (M > initial_dofs)
  {
    throw ClusterTooLarge(fmt::format("M = {} exceeds the {} dofs of the initial mesh", M,
                                      initial_dofs));
  }
  if (!(overlap_ratio > 0.0 && overlap_ratio <= 0.5))
  {
    throw InvalidArgument("overlap ratio must lie in (0, 1/2]");
  }
  solver().validate(cluster());
}

nlohmann::ordered_json ExperimentConfig::to_json() const
{
  nlohmann::ordered_json j;
  j["domain"] = std::string(to_string(domain));
  j["coarse_level"] = coarse_level;
  j["fine_level"] = fine_level;
  j["initial_level"] = initial_level.value_or(coarse_level + 1);
  j["overlap_ratio"] = overlap_ratio;
  j["m"] = m;
  j["M"] = M;
  j["tol"] = tol;
  j["max_iter"] = max_iter;
  j["restart_dim"] =
    restart_dim ? nlohmann::ordered_json(*restart_dim) : nlohmann::ordered_json(nullptr);
  j["shared_shift"] = shared_shift;
  j["lazy_refactor"] = lazy_refactor;
  j["threads"] = threads;
  j["output_dir"] = output_dir.string();
  j["format"] = std::string(to_string(format));
  return j;
}

std::vector<double> total_errors(const std::vector<IterationRecord> &trace,
                                 const std::vector<double> &reference)
{
  std::vector<double> errors;
  errors.reserve(trace.size());
  for (const auto &record : trace)
  {
    if (record.ritz_values.size() != reference.size())
    {
      throw InvalidArgument("total_errors: reference does not match the cluster size");
    }
    double e = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i)
    {
      e += record.ritz_values[i] - reference[i];
    }
    errors.push_back(e);
  }
  return errors;
}

std::vector<double> decay_ratios(const std::vector<double> &errors, double floor)
{
  std::vector<double> ratios;
  for (std::size_t k = 2; k < errors.size(); ++k)
  {
    if (errors[k - 1] > floor && errors[k] > floor)
    {
      ratios.push_back(errors[k] / errors[k - 1]);
    }
  }
  return ratios;
}

double decay_floor(const std::vector<double> &reference)
{
  double sum = 0.0;
  for (double v : reference)
  {
    sum += std::abs(v);
  }
  return 1e-12 * sum;
}

std::optional<double> fit_gamma(const std::vector<double> &ratios)
{
  if (ratios.empty())
  {
    return std::nullopt;
  }
  double log_sum = 0.0;
  for (double r : ratios)
  {
    if (!(r > 0.0))
    {
      return std::nullopt;
    }
    log_sum += std::log(r);
  }
  return std::exp(log_sum / static_cast<double>(ratios.size()));
}

RunResult run_experiment(const ExperimentConfig &config)
{
  config.validate();
  const MeshHierarchy hierarchy =
    build_hierarchy(config.domain, config.coarse_level, config.fine_level, config.initial_level);
  const SparsePencil pencil = assemble(hierarchy.fine);
  const Decomposition decomposition = build_decomposition(hierarchy, config.overlap_ratio);

  RunResult result;
  result.config = config;
  result.dofs = pencil.size();
  if (pencil.size() <= oracle::kDenseDofLimit)
  {
    const auto reference = oracle::dense_discrete_spectrum(pencil, config.M);
    result.reference.emplace(reference.values.begin() + (config.m - 1), reference.values.end());
  }
  else
  {
    spdlog::info("{} dofs exceed the dense reference limit; no oracle comparison",
                 pencil.size());
  }

  result.report = solve(hierarchy, pencil, decomposition, config.cluster(), config.solver());
  if (result.reference)
  {
    const auto errors = total_errors(result.report.trace, *result.reference);
    result.ratios = decay_ratios(errors, decay_floor(*result.reference));
    result.gamma = fit_gamma(result.ratios);
  }
  return result;
}

nlohmann::ordered_json summary_json(const RunResult &result)
{
  const SolverReport &r = result.report;
  nlohmann::ordered_json j;
  j["config"] = result.config.to_json();
  j["status"] = std::string(to_string(r.status));
  j["converged"] = r.converged();
  j["iterations"] = r.iterations;
  j["stop_norm"] = r.stop_norm;
  j["gamma"] = optional_json(result.gamma);
  j["dofs"] = result.dofs;
  j["subdomains"] = r.diagnostics.subdomains;
  j["colors"] = r.diagnostics.colors;
  j["overlap_layers"] = r.diagnostics.overlap_layers;
  j["basis_dims"] = r.basis_dims;
  j["initial_eigenvalues"] = std::vector<double>(r.initial_eigenvalues.begin(),
                                                 r.initial_eigenvalues.end());
  j["eigenvalues"] = std::vector<double>(r.eigenvalues.begin(), r.eigenvalues.end());
  j["oracle_eigenvalues"] = result.reference ? nlohmann::ordered_json(*result.reference)
                                             : nlohmann::ordered_json(nullptr);
  j["decay_ratios"] = result.ratios;

  const auto &d = r.diagnostics;
  nlohmann::ordered_json diag;
  diag["coarse_retained_min"] = std::isfinite(d.coarse_retained_min)
                                  ? nlohmann::ordered_json(d.coarse_retained_min)
                                  : nlohmann::ordered_json(nullptr);
  diag["coarse_gap_min"] = std::isfinite(d.coarse_gap_min)
                             ? nlohmann::ordered_json(d.coarse_gap_min)
                             : nlohmann::ordered_json(nullptr);
  diag["local_min_eigenvalue"] = d.local_min_eigenvalue;
  diag["indefinite_local_factorizations"] = d.indefinite_local_factorizations;
  diag["refactorized_slots"] = d.refactorized_slots;
  diag["clamped_shifts"] = d.clamped_shifts;
  j["diagnostics"] = diag;

  const auto &t = r.timings;
  nlohmann::ordered_json timings;
  timings["setup"] = t.setup_ms;
  timings["initialize"] = t.initialize_ms;
  timings["precondition"] = t.precondition_ms;
  timings["correction"] = t.correction_ms;
  timings["rayleigh_ritz"] = t.rayleigh_ritz_ms;
  timings["stop_norm"] = t.stop_norm_ms;
  timings["total"] = t.total_ms;
  j["timings_ms"] = timings;
  return j;
}

void write_outputs(const RunResult &result)
{
  const auto &dir = result.config.output_dir;
  std::filesystem::create_directories(dir);
  const SolverReport &r = result.report;
  const Index m = result.config.m;

  if (result.config.format == OutputFormat::Json)
  {
    nlohmann::ordered_json trace = nlohmann::ordered_json::array();
    for (const auto &rec : r.trace)
    {
      nlohmann::ordered_json row;
      row["k"] = rec.k;
      row["lambda"] = rec.ritz_values;
      row["stop_norm"] = rec.stop_norm;
      row["eigenvalue_change"] = rec.eigenvalue_change;
      row["wall_ms"] = rec.wall_ms;
      trace.push_back(row);
    }
    write_json(dir / "trace.json", trace);

    nlohmann::ordered_json final_rows = nlohmann::ordered_json::array();
    for (Index j = 0; j < r.eigenvalues.size(); ++j)
    {
      nlohmann::ordered_json row;
      row["i"] = m + j;
      row["lambda"] = r.eigenvalues[j];
      if (result.reference)
      {
        row["oracle_lambda"] = (*result.reference)[j];
        row["abs_err"] = std::abs(r.eigenvalues[j] - (*result.reference)[j]);
      }
      else
      {
        row["oracle_lambda"] = nullptr;
        row["abs_err"] = nullptr;
      }
      final_rows.push_back(row);
    }
    write_json(dir / "final.json", final_rows);
  }
  else
  {
    auto trace = open_output(dir / "trace.csv");
    trace << 'k';
    for (Index j = 0; j < r.cluster.size(); ++j)
    {
      trace << ",lambda_" << m + j;
    }
    trace << ",stop_norm,wall_ms\n";
    for (const auto &rec : r.trace)
    {
      trace << rec.k;
      for (double v : rec.ritz_values)
      {
        fmt::print(trace, ",{:.17g}", v);
      }
      fmt::print(trace, ",{:.10e},{:.3f}\n", rec.stop_norm, rec.wall_ms);
    }

    auto final_csv = open_output(dir / "final.csv");
    final_csv << "i,lambda,oracle_lambda,abs_err\n";
    for (Index j = 0; j < r.eigenvalues.size(); ++j)
    {
      fmt::print(final_csv, "{},{:.17g}", m + j, r.eigenvalues[j]);
      if (result.reference)
      {
        const double ref = (*result.reference)[j];
        fmt::print(final_csv, ",{:.17g},{:.6e}\n", ref, std::abs(r.eigenvalues[j] - ref));
      }
      else
      {
        final_csv << ",,\n";
      }
    }
  }
  write_json(dir / "summary.json", summary_json(result));
}

SweepParameter parse_sweep_parameter(std::string_view name)
{
  if (name == "fine")
  {
    return SweepParameter::Fine;
  }
  if (name == "coarse")
  {
    return SweepParameter::Coarse;
  }
  throw InvalidArgument("sweep can vary 'fine' or 'coarse', not '" + std::string(name) + "'");
}

std::string_view to_string(SweepParameter parameter)
{
  return parameter == SweepParameter::Fine ? "fine" : "coarse";
}

std::vector<SweepEntry> sweep(const ExperimentConfig &base, SweepParameter parameter,
                              const std::vector<int> &values)
{
  if (values.empty())
  {
    throw InvalidArgument("sweep needs at least one value");
  }
  std::vector<SweepEntry> entries;
  for (int v : values)
  {
    ExperimentConfig config = base;
    (parameter == SweepParameter::Fine ? config.fine_level : config.coarse_level) = v;
    config.output_dir = base.output_dir / fmt::format("{}_{}", to_string(parameter), v);

    SweepEntry entry;
    entry.value = v;
    try
    {
      entry.result = run_experiment(config);
      write_outputs(*entry.result);
      spdlog::info("{} = {}: {} after {} iterations", to_string(parameter), v,
                   to_string(entry.result->report.status), entry.result->report.iterations);
    }
    catch (const std::exception &e)
    {
      entry.result.reset();
      entry.error = e.what();
      spdlog::error("{} = {}: {}", to_string(parameter), v, e.what());
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::string sweep_table(const ExperimentConfig &base, SweepParameter parameter,
                        const std::vector<SweepEntry> &entries)
{
  std::ostringstream out;
  out << to_string(parameter);
  for (const auto &e : entries)
  {
    out << ',' << e.value;
  }
  out << '\n';

  for (Index i = base.m; i <= base.M; ++i)
  {
    out << "lambda_" << i;
    for (const auto &e : entries)
    {
      out << ',';
      if (e.result)
      {
        fmt::print(out, "{:.9f}", e.result->report.eigenvalues[i - base.m]);
      }
    }
    out << '\n';
  }
  out << "it.";
  for (const auto &e : entries)
  {
    out << ',';
    if (e.result)
    {
      out << e.result->report.iterations;
    }
  }
  out << "\nstop.";
  for (const auto &e : entries)
  {
    out << ',';
    if (e.result)
    {
      fmt::print(out, "{:.6e}", e.result->report.stop_norm);
    }
  }
  out << "\nstatus";
  for (const auto &e : entries)
  {
    out << ',';
    if (e.result)
    {
      out << to_string(e.result->report.status);
    }
    else
    {
      // Keep the row a single CSV field.
      std::string msg = "error: " + e.error;
      for (char &c : msg)
      {
        if (c == ',' || c == '\n')
        {
          c = ';';
        }
      }
      out << msg;
    }
  }
  out << '\n';
  return out.str();
}

void export_pencil(const ExperimentConfig &config)
{
  if (config.fine_level < 1 || config.fine_level > 14)
  {
    throw InvalidArgument("fine level must lie in 1..14");
  }
  const SparsePencil pencil = assemble(build_mesh(config.domain, config.fine_level));
  std::filesystem::create_directories(config.output_dir);
  auto k = open_output(config.output_dir / "stiffness.mtx");
  write_matrix_market(k, pencil.stiffness);
  auto m = open_output(config.output_dir / "mass.mtx");
  write_matrix_market(m, pencil.mass);
}

}  // namespace schwarzeig::experiment
