// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <spdlog/spdlog.h>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "experiment.hpp"
#include "schwarzeig/errors.hpp"

namespace
{

namespace ex = schwarzeig::experiment;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitNotConverged = 3;

struct Flags
{
  std::string domain = "square";
  std::optional<int> initial;
  std::optional<long> restart_dim;
  std::string format = "csv";
  std::string output = "out";
  std::string log_level = "info";
};

ex::ExperimentConfig to_config(const ex::ExperimentConfig &partial, const Flags &flags)
{
  ex::ExperimentConfig config = partial;
  config.domain = schwarzeig::parse_domain_shape(flags.domain);
  config.initial_level = flags.initial;
  if (flags.restart_dim)
  {
    config.restart_dim = *flags.restart_dim;
  }
  config.format = ex::parse_output_format(flags.format);
  config.output_dir = flags.output;
  return config;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Two-level Schwarz preconditioned block Jacobi-Davidson for clustered Laplace "
               "eigenvalues"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key = value file; command line flags override it");

  ex::ExperimentConfig base;
  Flags flags;
  app.add_option("--domain", flags.domain, "square or lshape")
    ->check(CLI::IsMember({"square", "lshape"}))
    ->capture_default_str();
  app.add_option("--coarse", base.coarse_level, "coarse level j_H")->capture_default_str();
  app.add_option("--fine", base.fine_level, "fine level j_h")->capture_default_str();
  app.add_option("--initial", flags.initial, "initial level (default coarse + 1)");
  app.add_option("--overlap", base.overlap_ratio, "overlap ratio delta/H")->capture_default_str();
  app.add_option("--m", base.m, "first targeted eigenvalue index")->capture_default_str();
  app.add_option("--M", base.M, "last targeted eigenvalue index")->capture_default_str();
  app.add_option("--tol", base.tol, "stop-norm tolerance")->capture_default_str();
  app.add_option("--max-iter", base.max_iter, "iteration limit")->capture_default_str();
  app.add_option("--restart-dim", flags.restart_dim, "thick restart above this dimension");
  app.add_flag("--shared-shift", base.shared_shift, "one shift lambda_m for the whole cluster");
  app.add_option("--lazy-refactor", base.lazy_refactor,
                 "reuse factorizations while the shift moves at most this much")
    ->capture_default_str();
  app.add_option("--threads", base.threads, "worker threads")->capture_default_str();
  app.add_option("--output", flags.output, "output directory")->capture_default_str();
  app.add_option("--format", flags.format, "csv or json")
    ->check(CLI::IsMember({"csv", "json"}))
    ->capture_default_str();
  app.add_option("--log-level", flags.log_level, "trace, debug, info, warn, error or off")
    ->capture_default_str();

  auto *run = app.add_subcommand("run", "solve one configuration");

  auto *sweep = app.add_subcommand("sweep", "solve a series varying the fine or coarse level");
  std::string vary;
  std::vector<int> values;
  sweep->add_option("--vary", vary, "fine or coarse")
    ->required()
    ->check(CLI::IsMember({"fine", "coarse"}));
  sweep->add_option("--values", values, "levels to run")->required()->expected(1, -1);

  auto *export_cmd = app.add_subcommand("export", "write the fine pencil as Matrix Market files");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp &e)
  {
    return app.exit(e);
  }
  catch (const CLI::ParseError &e)
  {
    app.exit(e);
    return kExitInvalid;
  }

  spdlog::set_level(spdlog::level::from_str(flags.log_level));

  try
  {
    const ex::ExperimentConfig config = to_config(base, flags);

    if (*export_cmd)
    {
      ex::export_pencil(config);
      spdlog::info("wrote {}", (config.output_dir / "stiffness.mtx").string());
      return kExitOk;
    }

    if (*run)
    {
      const ex::RunResult result = ex::run_experiment(config);
      ex::write_outputs(result);
      const auto &r = result.report;
      std::cout << "status " << schwarzeig::to_string(r.status) << ", " << r.iterations
                << " iterations, stop " << r.stop_norm << '\n';
      for (schwarzeig::Index j = 0; j < r.eigenvalues.size(); ++j)
      {
        std::cout << "lambda_" << config.m + j << " = " << std::setprecision(12)
                  << r.eigenvalues[j] << '\n';
      }
      return r.converged() ? kExitOk : kExitNotConverged;
    }

    const auto parameter = ex::parse_sweep_parameter(vary);
    const auto entries = ex::sweep(config, parameter, values);
    const std::string table = ex::sweep_table(config, parameter, entries);
    std::filesystem::create_directories(config.output_dir);
    std::ofstream(config.output_dir / "sweep.csv") << table;
    std::cout << table;
    for (const auto &e : entries)
    {
      if (!e.result || !e.result->report.converged())
      {
        return kExitNotConverged;
      }
    }
    return kExitOk;
  }
  catch (const schwarzeig::InvalidArgument &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  catch (const schwarzeig::ClusterTooLarge &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  catch (const std::exception &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
