// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <omp.h>
#include <CLI11.hpp>
#include "criteria.hpp"
#include "macrosurf/driver.hpp"
#include "macrosurf/error.hpp"

namespace
{

int Solve(const std::string &path, const macrosurf::RunOptions &options)
{
  const macrosurf::RunConfig config = macrosurf::LoadConfig(path);
  const macrosurf::RunResult result = macrosurf::RunSolve(config, options);
  std::cout << macrosurf::FormatReport(config, result);
  std::cout << "\nArtifacts:\n";
  for (const auto &p : result.artifacts)
  {
    std::cout << "  " << p.string() << "\n";
  }
  return 0;
}

int Validate(const std::string &path)
{
  const macrosurf::RunConfig config = macrosurf::LoadConfig(path);
  const macrosurf::UnknownCounts u = macrosurf::DryRun(config);
  std::cout << "Config OK: " << config.mx << " x " << config.my << " cells, "
            << config.templates.size() << " template(s)\n"
            << "  Equivalent-surface unknowns per cell: " << u.per_cell_eq << "\n"
            << "  Interior unknowns eliminated (per template, summed): " << u.per_cell_interior
            << "\n"
            << "  Stacked cell unknowns: " << u.stacked << "\n"
            << "  Duplicates removed by overlap merge: " << u.duplicates << "\n"
            << "  Total number of unknowns: " << u.merged << "\n"
            << "  Monolithic unknowns (same array, no macromodels): " << u.monolithic << "\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"macrosurf: surface integral equation solver for arrays of dissimilar cells"};
  app.require_subcommand(1);
  int threads = 0;
  std::string cache_dir;
  app.add_option("--threads", threads, "Worker threads for all parallel phases (default: all cores)")
      ->check(CLI::PositiveNumber);
  app.add_option("--cache-dir", cache_dir, "Directory for the on-disk macromodel cache");

  std::string config_path;
  CLI::App *solve = app.add_subcommand("solve", "Run a simulation from a config file");
  solve->add_option("config", config_path, "YAML run configuration")->required();

  std::string tier = "fast";
  CLI::App *selftest = app.add_subcommand("selftest", "Run the acceptance criteria");
  selftest->add_option("tier", tier, "fast (algebraic oracles) or full (adds the physics fixtures)")
      ->check(CLI::IsMember({"fast", "full"}));

  CLI::App *validate =
      app.add_subcommand("validate", "Check a config and its geometry without solving");
  validate->add_option("config", config_path, "YAML run configuration")->required();

  CLI11_PARSE(app, argc, argv);

  if (threads > 0)
  {
    omp_set_num_threads(threads);
  }
  try
  {
    if (*solve)
    {
      macrosurf::RunOptions options;
      options.cache_dir = cache_dir;
      return Solve(config_path, options);
    }
    if (*validate)
    {
      return Validate(config_path);
    }
    using macrosurf::acceptance::Tier;
    const int failed =
        macrosurf::acceptance::RunTier(tier == "full" ? Tier::Full : Tier::Fast, std::cout);
    std::cout << (failed == 0 ? std::string("all criteria passed")
                              : std::to_string(failed) + " criteria failed")
              << std::endl;
    return failed == 0 ? 0 : 1;
  }
  catch (const std::exception &e)
  {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
