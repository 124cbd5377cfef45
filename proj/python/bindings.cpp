// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include <sstream>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>
#include "criteria.hpp"
#include "macrosurf/driver.hpp"
#include "macrosurf/error.hpp"

namespace py = pybind11;
using namespace macrosurf;

namespace
{

py::dict Counts(const UnknownCounts &u)
{
  py::dict d;
  d["per_cell_eq"] = u.per_cell_eq;
  d["per_cell_interior"] = u.per_cell_interior;
  d["stacked"] = u.stacked;
  d["duplicates"] = u.duplicates;
  d["merged"] = u.merged;
  d["monolithic"] = u.monolithic;
  return d;
}

// Owning copy, returned to Python as a numpy array.
template <typename T>
Eigen::Matrix<T, Eigen::Dynamic, 1> Array(const std::vector<T> &v)
{
  return Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(v.data(), v.size());
}

py::dict Cut(const FarFieldCut &c)
{
  py::dict d;
  d["phi_deg"] = c.phi_deg;
  d["theta_deg"] = Array(c.theta_deg);
  d["e_theta"] = Array(c.e_theta);
  d["e_phi"] = Array(c.e_phi);
  d["d_dbi"] = Array(c.d_dbi);
  return d;
}

py::dict Result(const RunResult &r)
{
  py::dict d;
  d["unknowns"] = Counts(r.unknowns);
  py::dict t;
  t["geometry"] = r.times.geometry;
  t["macromodel"] = r.times.macromodel;
  t["fill"] = r.times.fill;
  t["factorization"] = r.times.factorization;
  t["iterative"] = r.times.iterative;
  t["post"] = r.times.post;
  d["times"] = t;
  d["iterations"] = r.solve.iterations;
  d["matvecs"] = r.solve.matvecs;
  d["relative_residual"] = r.solve.relative_residual;
  d["history"] = r.solve.history;
  d["converged"] = r.solve.converged;
  d["macromodels_built"] = r.macromodels_built;
  d["macromodel_cache_hits"] = r.macromodel_cache_hits;
  d["preconditioner_nonzeros"] = r.preconditioner_nonzeros;
  py::list cuts;
  for (const FarFieldCut &c : r.cuts)
  {
    cuts.append(Cut(c));
  }
  d["cuts"] = cuts;
  d["radiated_power"] = r.radiated_power;
  d["directivity_integral"] = r.directivity_integral;
  d["peak_directivity_dbi"] = r.peak_directivity_dbi;
  d["artifacts"] = r.artifacts;
  return d;
}

RunOptions Options(const std::string &cache_dir, bool monolithic_count)
{
  RunOptions o;
  o.cache_dir = cache_dir;
  o.monolithic_count = monolithic_count;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "Surface integral equation solver for planar arrays of dissimilar cells";

  static py::exception<Error> base(m, "MacrosurfError", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
  static py::exception<ConvergenceError> convergence_error(m, "ConvergenceError", base.ptr());
  py::register_exception_translator(
      [](std::exception_ptr p)
      {
        try
        {
          if (p)
          {
            std::rethrow_exception(p);
          }
        }
        catch (const ConfigError &e)
        {
          PyErr_SetString(config_error.ptr(), e.what());
        }
        catch (const ConvergenceError &e)
        {
          PyErr_SetString(convergence_error.ptr(), e.what());
        }
        catch (const Error &e)
        {
          PyErr_SetString(base.ptr(), e.what());
        }
      });

  py::class_<RunConfig>(m, "RunConfig")
      .def_readwrite("frequency", &RunConfig::frequency)
      .def_readwrite("mx", &RunConfig::mx)
      .def_readwrite("my", &RunConfig::my)
      .def_readwrite("cells", &RunConfig::cells)
      .def_readwrite("near_field_radius", &RunConfig::near_field_radius)
      .def_readwrite("use_preconditioner", &RunConfig::use_preconditioner)
      .def_property(
          "tolerance", [](const RunConfig &c) { return c.gmres.tolerance; },
          [](RunConfig &c, double v) { c.gmres.tolerance = v; })
      .def_property(
          "restart", [](const RunConfig &c) { return c.gmres.restart; },
          [](RunConfig &c, int v) { c.gmres.restart = v; })
      .def_property(
          "max_iterations", [](const RunConfig &c) { return c.gmres.max_iterations; },
          [](RunConfig &c, int v) { c.gmres.max_iterations = v; })
      .def_property(
          "output_directory", [](const RunConfig &c) { return c.output.directory; },
          [](RunConfig &c, const std::filesystem::path &p) { c.output.directory = p; })
      .def_property_readonly("template_ids",
                             [](const RunConfig &c)
                             {
                               std::vector<std::string> ids;
                               for (const auto &t : c.templates)
                               {
                                 ids.push_back(t.id);
                               }
                               return ids;
                             })
      .def("near_field_radius_value", &RunConfig::NearFieldRadius);

  m.def("parse_config", &ParseConfig, py::arg("text"), py::arg("base_dir") = std::filesystem::path{},
        "Parse a YAML run configuration.");
  m.def("load_config", &LoadConfig, py::arg("path"), "Load a YAML run configuration file.");
  m.def("validate_config", &ValidateConfig, py::arg("config"));
  m.def(
      "dry_run", [](const RunConfig &c) { return Counts(DryRun(c)); }, py::arg("config"),
      "Geometry-only pass; returns the unknown counts.");

  py::class_<Simulation>(m, "Simulation")
      .def(py::init([](const RunConfig &c, const std::string &cache_dir, bool monolithic_count)
                    { return std::make_unique<Simulation>(c, Options(cache_dir, monolithic_count)); }),
           py::arg("config"), py::arg("cache_dir") = "", py::arg("monolithic_count") = true)
      .def("build", &Simulation::Build, py::call_guard<py::gil_scoped_release>())
      .def("solve", &Simulation::Solve, py::call_guard<py::gil_scoped_release>())
      .def("post_process", &Simulation::PostProcess, py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("result", [](const Simulation &s) { return Result(s.Result()); })
      .def_property_readonly("solution", &Simulation::Solution)
      .def_property_readonly("rhs", &Simulation::RightHandSide)
      .def("dense_matrix", [](const Simulation &s) { return s.System().Dense(); },
           "Explicit merged system matrix (small arrays only).")
      .def("report", [](const Simulation &s) { return FormatReport(s.Config(), s.Result()); });

  m.def(
      "run_solve",
      [](const RunConfig &c, const std::string &cache_dir)
      {
        RunResult r;
        {
          py::gil_scoped_release release;
          r = RunSolve(c, Options(cache_dir, true));
        }
        return Result(r);
      },
      py::arg("config"), py::arg("cache_dir") = "",
      "Run the pipeline and write the report and cuts.");

  m.def(
      "selftest",
      [](const std::string &tier)
      {
        if (tier != "fast" && tier != "full")
        {
          throw py::value_error("tier must be 'fast' or 'full'");
        }
        const auto t = tier == "full" ? acceptance::Tier::Full : acceptance::Tier::Fast;
        py::list out;
        for (int id : acceptance::CriteriaOf(t))
        {
          acceptance::Outcome o;
          {
            py::gil_scoped_release release;
            o = acceptance::RunCriterion(id, t);
          }
          py::dict d;
          d["id"] = o.id;
          d["title"] = o.title;
          d["passed"] = o.pass;
          d["detail"] = o.detail;
          d["seconds"] = o.seconds;
          out.append(d);
        }
        return out;
      },
      py::arg("tier") = "fast", "Run the acceptance criteria of a tier.");
  m.attr("FIXTURE_CONFIG") = acceptance::FixtureConfig();
}
