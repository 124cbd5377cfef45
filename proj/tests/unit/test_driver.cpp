// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <catch_amalgamated.hpp>
#include "macrosurf/driver.hpp"
#include "macrosurf/error.hpp"

using namespace macrosurf;
namespace fs = std::filesystem;

namespace
{

const char *kCoarse = R"(
frequency: 9.6e9
templates:
  patch:
    unit_cell:
      patch_width: 5.4e-3
      mesh_length_patch: 2.7e-3
      mesh_length_box: 4.5e-3
  small:
    unit_cell:
      patch_width: 4.0e-3
      mesh_length_patch: 2.7e-3
      mesh_length_box: 4.5e-3
layout:
  counts: [2, 1]
  fill: patch
excitation:
  plane_wave:
    direction: [0, 0, -1]
    polarization: [1, 0, 0]
output:
  directory: out
  cuts: [0, 90]
  theta_step: 5
)";

fs::path Scratch(const std::string &name)
{
  const fs::path p = fs::temp_directory_path() / ("macrosurf_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config parsing", "[driver]")
{
  const RunConfig c = ParseConfig(kCoarse, "/base");
  CHECK(c.frequency == 9.6e9);
  REQUIRE(c.templates.size() == 2);
  CHECK(c.templates[0].id == "patch");
  CHECK(c.templates[0].params.patch_width == 5.4e-3);
  CHECK(c.templates[0].params.template_id == "patch");
  CHECK(c.TemplateIndex("small") == 1);
  CHECK(c.TemplateIndex("none") == -1);
  CHECK(c.mx == 2);
  CHECK(c.my == 1);
  CHECK(c.cells == std::vector<std::string>{"patch", "patch"});
  CHECK(c.output.directory == fs::path("/base/out"));
  CHECK(c.output.cut_phi_deg == std::vector<double>{0.0, 90.0});
  CHECK(c.use_preconditioner);
  CHECK(c.NearFieldRadius() == Catch::Approx(DefaultNearFieldRadius(9.6e9)));
  CHECK_NOTHROW(ValidateConfig(c));

  const RunConfig d = ParseConfig(std::string(kCoarse) + R"(
solver:
  near_field_radius: 5e-3
  tolerance: 1e-6
  preconditioner: false
)", "");
  CHECK(d.NearFieldRadius() == 5e-3);
  CHECK(d.gmres.tolerance == 1e-6);
  CHECK(!d.use_preconditioner);

  // Directions are normalised; amplitudes accept [re, im].
  std::string pw = kCoarse;
  pw.replace(pw.find("[0, 0, -1]"), 10, "[0, 0, -2]");
  pw.replace(pw.find("    polarization"), 0, "    amplitude: [0.5, -1]\n");
  const RunConfig e = ParseConfig(pw);
  CHECK(e.excitation.direction == -Vec3::UnitZ());
  CHECK(e.excitation.amplitude == cplx(0.5, -1.0));
}

TEST_CASE("config errors", "[driver]")
{
  auto message = [](const std::string &text)
  {
    try
    {
      ValidateConfig(ParseConfig(text));
    }
    catch (const ConfigError &e)
    {
      return std::string(e.what());
    }
    return std::string();
  };
  std::string text = kCoarse;
  CHECK_THAT(message(text + "colour: red\n"),
             Catch::Matchers::ContainsSubstring("unknown key 'colour'"));
  std::string typo = text;
  typo.replace(typo.find("patch_width"), 11, "patch_widht");
  CHECK_THAT(message(typo), Catch::Matchers::ContainsSubstring("patch_widht"));
  CHECK_THAT(message("frequency: [1, 2\n"), Catch::Matchers::ContainsSubstring("malformed"));
  CHECK_THAT(message(""), Catch::Matchers::ContainsSubstring("empty"));

  std::string missing = text;
  missing.replace(missing.find("fill: patch"), 11, "cells: [patch, dish]");
  CHECK_THAT(message(missing), Catch::Matchers::ContainsSubstring("undefined template 'dish'"));
  std::string count = text;
  count.replace(count.find("fill: patch"), 11, "cells: [patch]");
  CHECK_THAT(message(count), Catch::Matchers::ContainsSubstring("cell entries"));
  const std::string small = "  small:\n    unit_cell:";
  std::string file = text.substr(0, text.find(small)) + "  small:\n    mesh_file: nowhere.emesh\n" +
                     text.substr(text.find("layout:"));
  CHECK_THAT(message(file), Catch::Matchers::ContainsSubstring("does not exist"));
  std::string pol = text;
  pol.replace(pol.find("[1, 0, 0]"), 9, "[0, 0, 1]");
  CHECK_THAT(message(pol), Catch::Matchers::ContainsSubstring("excitation"));
  CHECK_THAT(message(text + "solver: {tolerance: 2}\n"),
             Catch::Matchers::ContainsSubstring("tolerance"));

  // A missing template is reported before any assembly.
  RunConfig c = ParseConfig(kCoarse);
  c.cells[1] = "dish";
  CHECK_THROWS_AS(Simulation(c), ConfigError);
  CHECK_THROWS_AS(LoadConfig("/nonexistent/run.yaml"), ConfigError);
}

TEST_CASE("simulation bookkeeping and solution", "[driver]")
{
  RunConfig c = ParseConfig(kCoarse);
  Simulation sim(c);
  sim.Solve();
  const RunResult &r = sim.Result();
  const UnknownCounts &u = r.unknowns;
  CHECK(u.per_cell_eq == sim.System().basis->Size());
  CHECK(u.stacked == 2 * u.per_cell_eq);
  CHECK(u.merged == sim.System().NumUnknowns());
  CHECK(u.stacked - u.duplicates == u.merged);
  CHECK(u.duplicates > 0);
  CHECK(u.merged < u.monolithic);
  CHECK(r.macromodels_built == 1);
  CHECK(r.solve.converged);
  CHECK(r.preconditioner_nonzeros > 0);
  const Eigen::MatrixXcd A = sim.System().Dense();
  CHECK((A * sim.Solution() - sim.RightHandSide()).norm() <=
        c.gmres.tolerance * sim.RightHandSide().norm());
  // Unused templates are not built.
  CHECK_THROWS(sim.Template(1));

  sim.PostProcess();
  CHECK(sim.Result().cuts.size() == 2);
  CHECK(sim.Result().cuts[0].theta_deg.size() == 73);
  CHECK(sim.Result().directivity_integral == Catch::Approx(1.0).margin(1e-3));
  CHECK(sim.Result().radiated_power > 0.0);
}

TEST_CASE("dissimilar cells and the macromodel cache", "[driver]")
{
  const fs::path dir = Scratch("cache");
  RunConfig c = ParseConfig(kCoarse, dir);
  c.cells = {"patch", "small"};
  RunOptions opt;
  opt.cache_dir = dir / "cache";
  opt.monolithic_count = false;
  RunResult first, second;
  {
    Simulation sim(c, opt);
    sim.Solve();
    first = sim.Result();
    CHECK(sim.System().cell_models.size() == 2);
    CHECK(sim.System().cell_models[0]->Z != sim.System().cell_models[1]->Z);
  }
  CHECK(first.macromodels_built == 2);
  CHECK(first.macromodel_cache_hits == 0);
  CHECK(first.unknowns.monolithic == 0);
  {
    Simulation sim(c, opt);
    sim.Solve();
    second = sim.Result();
  }
  CHECK(second.macromodels_built == 0);
  CHECK(second.macromodel_cache_hits == 2);
  CHECK(second.solve.history == first.solve.history);
  fs::remove_all(dir);
}

TEST_CASE("run artifacts and failure cleanup", "[driver]")
{
  const fs::path dir = Scratch("run");
  RunConfig c = ParseConfig(kCoarse, dir);
  c.output.write_currents = true;
  RunOptions opt;
  opt.monolithic_count = false;
  const RunResult r = RunSolve(c, opt);
  CHECK(r.artifacts.size() == 4);
  for (const auto &p : r.artifacts)
  {
    CHECK(fs::is_regular_file(p));
  }
  std::ifstream report(dir / "out" / "report.txt");
  const std::string text((std::istreambuf_iterator<char>(report)), {});
  for (const char *label : {"Total number of unknowns", "Macromodel generation",
                            "Matrix fill time", "Preconditioner factorization",
                            "Iterative solver"})
  {
    CHECK_THAT(text, Catch::Matchers::ContainsSubstring(label));
  }
  // The numerical part of the report is reproducible.
  Simulation again(c, opt);
  again.PostProcess();
  CHECK(FormatReport(c, again.Result()) == FormatReport(c, r));

  // A failing solve leaves nothing behind.
  fs::remove_all(dir / "out");
  c.gmres.max_iterations = 1;
  c.gmres.tolerance = 1e-12;
  CHECK_THROWS_AS(RunSolve(c, opt), ConvergenceError);
  CHECK(!fs::exists(dir / "out"));
  fs::remove_all(dir);
}
