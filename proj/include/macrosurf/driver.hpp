// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_DRIVER_HPP
#define MACROSURF_DRIVER_HPP

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>
#include "macrosurf/post.hpp"
#include "macrosurf/solver.hpp"

namespace macrosurf
{

// One cell template: a parametric grounded-substrate cell or a mesh file
// (".emesh" plain-text format).
struct TemplateSpec
{
  std::string id;
  bool from_file = false;
  UnitCellParams params;
  std::filesystem::path mesh_file;
};

struct OutputSpec
{
  std::filesystem::path directory = "out";
  std::vector<double> cut_phi_deg = {0.0, 45.0, 90.0};
  double theta_step_deg = 1.0;
  bool write_currents = false;
};

struct RunConfig
{
  double frequency = 0.0;
  std::vector<TemplateSpec> templates;
  int mx = 1, my = 1;
  std::optional<double> px, py;  // must match the template footprint if given
  std::vector<std::string> cells;  // template id per cell, row-major
  Excitation excitation;
  double near_field_radius = 0.0;  // 0 selects lambda0 / 8
  bool use_preconditioner = true;
  GmresConfig gmres;
  QuadratureOptions quadrature;
  OutputSpec output;
  std::filesystem::path base_dir;  // relative paths resolve against this

  double NearFieldRadius() const;
  int TemplateIndex(const std::string &id) const;  // -1 if absent
};

// YAML document; unknown keys raise ConfigError naming the key.
RunConfig ParseConfig(const std::string &text, const std::filesystem::path &base_dir = {});
RunConfig LoadConfig(const std::filesystem::path &path);

// Structural checks before any assembly: counts, template map coverage,
// referenced files, physical parameters. Throws ConfigError.
void ValidateConfig(const RunConfig &config);

struct UnknownCounts
{
  int per_cell_eq = 0;      // equivalent-surface unknowns of one cell
  int per_cell_interior = 0;  // eliminated by the Schur complement, summed over templates in use
  int stacked = 0;          // cells x per_cell_eq
  int duplicates = 0;       // removed by the overlap merge
  int merged = 0;           // solved: stacked - duplicates
  int monolithic = 0;       // same array without macromodels or merging
};

struct PhaseTimes
{
  double geometry = 0.0;
  double macromodel = 0.0;
  double fill = 0.0;
  double factorization = 0.0;
  double iterative = 0.0;
  double post = 0.0;
};

struct RunResult
{
  UnknownCounts unknowns;
  PhaseTimes times;
  SolveReport solve;
  int macromodels_built = 0;
  int macromodel_cache_hits = 0;
  long preconditioner_nonzeros = 0;
  std::vector<FarFieldCut> cuts;
  double radiated_power = 0.0;
  double directivity_integral = 0.0;  // sum of D dOmega over the grid / (4 pi)
  double peak_directivity_dbi = 0.0;  // over the grid and the cuts
  std::vector<std::filesystem::path> artifacts;
};

struct RunOptions
{
  std::filesystem::path cache_dir;  // empty: in-memory cache only
  bool monolithic_count = true;     // count the monolithic unknowns for the report
};

// Whole pipeline with its intermediate objects kept for inspection.
class Simulation
{
public:
  Simulation(RunConfig config, RunOptions options = {});
  ~Simulation();
  Simulation(const Simulation &) = delete;
  Simulation &operator=(const Simulation &) = delete;

  // Meshes, macromodels, coupling generators, overlap merge.
  void Build();
  // Preconditioner and GMRES; builds first if needed. Throws ConvergenceError.
  void Solve();
  // Cuts and directivity grid; solves first if needed.
  void PostProcess();

  const RunConfig &Config() const { return config_; }
  const RunResult &Result() const { return result_; }
  const ArraySystem &System() const;
  const Eigen::VectorXcd &Solution() const { return solution_; }
  const Eigen::VectorXcd &RightHandSide() const { return rhs_; }
  std::vector<CurrentSet> Currents() const;
  const CellModel &Template(int t) const;
  std::shared_ptr<const TriMesh> ArrayMesh() const;

private:
  struct State;
  RunConfig config_;
  RunOptions options_;
  std::unique_ptr<State> state_;
  RunResult result_;
  Eigen::VectorXcd rhs_, solution_;
};

// Geometry-only pass for `validate`: meshes, dof maps, layout and overlap
// merge, without any matrix fill. Returns the unknown counts.
UnknownCounts DryRun(const RunConfig &config);

// Plain-text report: unknown counts and per-phase times.
std::string FormatReport(const RunConfig &config, const RunResult &result);

// Runs the pipeline and writes report.txt, cut_phi<deg>.csv and optionally
// currents.csv into the output directory. On any error the files written so
// far are removed and the error is rethrown.
RunResult RunSolve(const RunConfig &config, const RunOptions &options = {});

}  // namespace macrosurf

#endif  // MACROSURF_DRIVER_HPP
