// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include "macrosurf/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <yaml-cpp/yaml.h>
#include "macrosurf/error.hpp"

namespace macrosurf
{

namespace
{

using Clock = std::chrono::steady_clock;

double Since(Clock::time_point t)
{
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string Where(const YAML::Node &node)
{
  const YAML::Mark m = node.Mark();
  return m.is_null() ? std::string() : " (line " + std::to_string(m.line + 1) + ")";
}

void CheckKeys(const YAML::Node &node, const std::set<std::string> &allowed,
               const std::string &context)
{
  if (!node.IsMap())
  {
    throw ConfigError(context + " must be a mapping" + Where(node));
  }
  for (const auto &kv : node)
  {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key))
    {
      std::string list;
      for (const auto &a : allowed)
      {
        list += (list.empty() ? "" : ", ") + a;
      }
      throw ConfigError("unknown key '" + key + "' in " + context + Where(kv.first) +
                        "; expected one of: " + list);
    }
  }
}

template <typename T>
T Get(const YAML::Node &node, const std::string &context)
{
  try
  {
    return node.as<T>();
  }
  catch (const YAML::Exception &)
  {
    throw ConfigError("invalid value for " + context + Where(node));
  }
}

double Number(const YAML::Node &node, const std::string &context)
{
  return Get<double>(node, context);
}

std::vector<double> Numbers(const YAML::Node &node, const std::string &context)
{
  if (node.IsScalar())
  {
    return {Number(node, context)};
  }
  if (!node.IsSequence())
  {
    throw ConfigError(context + " must be a number or a list of numbers" + Where(node));
  }
  std::vector<double> out;
  for (const auto &v : node)
  {
    out.push_back(Number(v, context));
  }
  return out;
}

Vec3 Vector(const YAML::Node &node, const std::string &context)
{
  const std::vector<double> v = Numbers(node, context);
  if (v.size() != 3)
  {
    throw ConfigError(context + " must have three components" + Where(node));
  }
  return {v[0], v[1], v[2]};
}

// A real number or [re, im].
cplx Complex(const YAML::Node &node, const std::string &context)
{
  if (node.IsSequence())
  {
    const std::vector<double> v = Numbers(node, context);
    if (v.size() != 2)
    {
      throw ConfigError(context + " must be a number or [re, im]" + Where(node));
    }
    return {v[0], v[1]};
  }
  return Number(node, context);
}

Vec3 Unit(const Vec3 &v, const std::string &context)
{
  if (!(v.norm() > 0.0))
  {
    throw ConfigError(context + " must be a nonzero vector");
  }
  return v.normalized();
}

UnitCellParams ParseUnitCell(const YAML::Node &node, const std::string &id)
{
  const std::string ctx = "templates." + id + ".unit_cell";
  CheckKeys(node,
            {"width", "layer_heights", "permittivities", "box_height", "patch_width",
             "mesh_length_patch", "mesh_length_box", "ground_plane"},
            ctx);
  UnitCellParams p;
  p.template_id = id;
  if (node["width"])
  {
    p.width = Number(node["width"], ctx + ".width");
  }
  if (node["layer_heights"])
  {
    p.layer_heights = Numbers(node["layer_heights"], ctx + ".layer_heights");
  }
  if (node["permittivities"])
  {
    p.permittivities.clear();
    const YAML::Node e = node["permittivities"];
    if (e.IsSequence())
    {
      for (const auto &v : e)
      {
        p.permittivities.push_back(Complex(v, ctx + ".permittivities"));
      }
    }
    else
    {
      p.permittivities.push_back(Complex(e, ctx + ".permittivities"));
    }
  }
  if (node["box_height"])
  {
    p.box_height = Number(node["box_height"], ctx + ".box_height");
  }
  if (node["patch_width"])
  {
    p.patch_width = Number(node["patch_width"], ctx + ".patch_width");
  }
  if (node["mesh_length_patch"])
  {
    p.mesh_length_patch = Number(node["mesh_length_patch"], ctx + ".mesh_length_patch");
  }
  if (node["mesh_length_box"])
  {
    p.mesh_length_box = Number(node["mesh_length_box"], ctx + ".mesh_length_box");
  }
  if (node["ground_plane"])
  {
    p.ground_plane = Get<bool>(node["ground_plane"], ctx + ".ground_plane");
  }
  return p;
}

std::string Fmt(const char *format, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// Periods given in the config must match the template footprint.
void CheckPeriods(const RunConfig &c, const ArrayLayout &layout)
{
  const double tol = 1e-9 * std::max(layout.px, layout.py);
  if ((c.px && std::abs(*c.px - layout.px) > tol) || (c.py && std::abs(*c.py - layout.py) > tol))
  {
    throw LayoutError("layout periods differ from the template footprint (" +
                      Fmt("%.6g", layout.px) + " x " + Fmt("%.6g", layout.py) + " m)");
  }
}

}  // namespace

double RunConfig::NearFieldRadius() const
{
  return near_field_radius > 0.0 ? near_field_radius : DefaultNearFieldRadius(frequency);
}

int RunConfig::TemplateIndex(const std::string &id) const
{
  for (std::size_t i = 0; i < templates.size(); i++)
  {
    if (templates[i].id == id)
    {
      return static_cast<int>(i);
    }
  }
  return -1;
}

RunConfig ParseConfig(const std::string &text, const std::filesystem::path &base_dir)
{
  YAML::Node root;
  try
  {
    root = YAML::Load(text);
  }
  catch (const YAML::Exception &e)
  {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (!root || root.IsNull())
  {
    throw ConfigError("config is empty");
  }
  CheckKeys(root,
            {"frequency", "templates", "layout", "excitation", "solver", "quadrature", "output"},
            "config");
  RunConfig c;
  c.base_dir = base_dir;
  if (!root["frequency"])
  {
    throw ConfigError("config: missing 'frequency'");
  }
  c.frequency = Number(root["frequency"], "frequency");

  const YAML::Node templates = root["templates"];
  if (!templates || !templates.IsMap() || templates.size() == 0)
  {
    throw ConfigError("config: 'templates' must map template ids to definitions");
  }
  for (const auto &kv : templates)
  {
    TemplateSpec t;
    t.id = kv.first.as<std::string>();
    const std::string ctx = "templates." + t.id;
    CheckKeys(kv.second, {"unit_cell", "mesh_file"}, ctx);
    if (kv.second["unit_cell"] && kv.second["mesh_file"])
    {
      throw ConfigError(ctx + ": give either 'unit_cell' or 'mesh_file', not both");
    }
    if (kv.second["mesh_file"])
    {
      t.from_file = true;
      t.mesh_file = Get<std::string>(kv.second["mesh_file"], ctx + ".mesh_file");
      if (t.mesh_file.is_relative())
      {
        t.mesh_file = base_dir / t.mesh_file;
      }
    }
    else if (kv.second["unit_cell"])
    {
      t.params = ParseUnitCell(kv.second["unit_cell"], t.id);
    }
    else
    {
      throw ConfigError(ctx + ": needs 'unit_cell' or 'mesh_file'");
    }
    c.templates.push_back(std::move(t));
  }

  const YAML::Node layout = root["layout"];
  if (!layout)
  {
    throw ConfigError("config: missing 'layout'");
  }
  CheckKeys(layout, {"counts", "periods", "cells", "fill"}, "layout");
  if (!layout["counts"])
  {
    throw ConfigError("layout: missing 'counts'");
  }
  const std::vector<double> counts = Numbers(layout["counts"], "layout.counts");
  if (counts.size() != 2 || counts[0] != std::floor(counts[0]) || counts[1] != std::floor(counts[1]))
  {
    throw ConfigError("layout.counts must be two integers [mx, my]");
  }
  c.mx = static_cast<int>(counts[0]);
  c.my = static_cast<int>(counts[1]);
  if (layout["periods"])
  {
    const std::vector<double> p = Numbers(layout["periods"], "layout.periods");
    if (p.size() != 2)
    {
      throw ConfigError("layout.periods must be [px, py]");
    }
    c.px = p[0];
    c.py = p[1];
  }
  if (layout["cells"] && layout["fill"])
  {
    throw ConfigError("layout: give either 'cells' or 'fill', not both");
  }
  if (layout["fill"])
  {
    c.cells.assign(std::max(c.mx * c.my, 0), Get<std::string>(layout["fill"], "layout.fill"));
  }
  else if (layout["cells"])
  {
    if (!layout["cells"].IsSequence())
    {
      throw ConfigError("layout.cells must be a list of template ids" + Where(layout["cells"]));
    }
    for (const auto &v : layout["cells"])
    {
      c.cells.push_back(Get<std::string>(v, "layout.cells"));
    }
  }
  else
  {
    throw ConfigError("layout: needs 'cells' or 'fill'");
  }

  const YAML::Node exc = root["excitation"];
  if (!exc)
  {
    throw ConfigError("config: missing 'excitation'");
  }
  CheckKeys(exc, {"plane_wave", "dipole"}, "excitation");
  if (exc.size() != 1)
  {
    throw ConfigError("excitation: give exactly one of 'plane_wave' or 'dipole'");
  }
  if (exc["plane_wave"])
  {
    const YAML::Node pw = exc["plane_wave"];
    CheckKeys(pw, {"direction", "polarization", "amplitude"}, "excitation.plane_wave");
    if (!pw["direction"] || !pw["polarization"])
    {
      throw ConfigError("excitation.plane_wave needs 'direction' and 'polarization'");
    }
    c.excitation = Excitation::PlaneWave(
        Unit(Vector(pw["direction"], "excitation.plane_wave.direction"), "direction"),
        Unit(Vector(pw["polarization"], "excitation.plane_wave.polarization"), "polarization"),
        pw["amplitude"] ? Complex(pw["amplitude"], "excitation.plane_wave.amplitude") : 1.0);
  }
  else
  {
    const YAML::Node d = exc["dipole"];
    CheckKeys(d, {"position", "orientation", "moment"}, "excitation.dipole");
    if (!d["position"] || !d["orientation"])
    {
      throw ConfigError("excitation.dipole needs 'position' and 'orientation'");
    }
    c.excitation = Excitation::Dipole(
        Vector(d["position"], "excitation.dipole.position"),
        Unit(Vector(d["orientation"], "excitation.dipole.orientation"), "orientation"),
        d["moment"] ? Complex(d["moment"], "excitation.dipole.moment") : 1.0);
  }

  if (const YAML::Node s = root["solver"])
  {
    CheckKeys(s, {"near_field_radius", "tolerance", "restart", "max_iterations", "preconditioner"},
              "solver");
    if (s["near_field_radius"])
    {
      c.near_field_radius = Number(s["near_field_radius"], "solver.near_field_radius");
      if (!(c.near_field_radius > 0.0))
      {
        throw ConfigError("solver.near_field_radius must be positive");
      }
    }
    if (s["tolerance"])
    {
      c.gmres.tolerance = Number(s["tolerance"], "solver.tolerance");
    }
    if (s["restart"])
    {
      c.gmres.restart = Get<int>(s["restart"], "solver.restart");
    }
    if (s["max_iterations"])
    {
      c.gmres.max_iterations = Get<int>(s["max_iterations"], "solver.max_iterations");
    }
    if (s["preconditioner"])
    {
      c.use_preconditioner = Get<bool>(s["preconditioner"], "solver.preconditioner");
    }
  }

  if (const YAML::Node q = root["quadrature"])
  {
    CheckKeys(q, {"far_points", "near_points", "near_factor", "near_subdivision"}, "quadrature");
    if (q["far_points"])
    {
      c.quadrature.far_points = Get<int>(q["far_points"], "quadrature.far_points");
    }
    if (q["near_points"])
    {
      c.quadrature.near_points = Get<int>(q["near_points"], "quadrature.near_points");
    }
    if (q["near_factor"])
    {
      c.quadrature.near_factor = Number(q["near_factor"], "quadrature.near_factor");
    }
    if (q["near_subdivision"])
    {
      c.quadrature.near_subdivision = Get<int>(q["near_subdivision"], "quadrature.near_subdivision");
    }
  }

  if (const YAML::Node o = root["output"])
  {
    CheckKeys(o, {"directory", "cuts", "theta_step", "currents"}, "output");
    if (o["directory"])
    {
      c.output.directory = Get<std::string>(o["directory"], "output.directory");
    }
    if (o["cuts"])
    {
      c.output.cut_phi_deg = Numbers(o["cuts"], "output.cuts");
    }
    if (o["theta_step"])
    {
      c.output.theta_step_deg = Number(o["theta_step"], "output.theta_step");
    }
    if (o["currents"])
    {
      c.output.write_currents = Get<bool>(o["currents"], "output.currents");
    }
  }
  if (c.output.directory.is_relative())
  {
    c.output.directory = base_dir / c.output.directory;
  }
  return c;
}

RunConfig LoadConfig(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ConfigError("cannot open config file '" + path.string() + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str(), path.parent_path());
}

void ValidateConfig(const RunConfig &c)
{
  if (!(c.frequency > 0.0) || !std::isfinite(c.frequency))
  {
    throw ConfigError("frequency must be positive");
  }
  if (c.templates.empty())
  {
    throw ConfigError("no templates defined");
  }
  if (c.mx < 1 || c.my < 1)
  {
    throw ConfigError("layout counts must be positive");
  }
  if (static_cast<int>(c.cells.size()) != c.mx * c.my)
  {
    throw ConfigError("layout has " + std::to_string(c.cells.size()) + " cell entries for " +
                      std::to_string(c.mx) + " x " + std::to_string(c.my) + " cells");
  }
  for (std::size_t i = 0; i < c.cells.size(); i++)
  {
    if (c.TemplateIndex(c.cells[i]) < 0)
    {
      throw ConfigError("cell " + std::to_string(i) + " refers to undefined template '" +
                        c.cells[i] + "'");
    }
  }
  for (const TemplateSpec &t : c.templates)
  {
    if (t.from_file)
    {
      if (!std::filesystem::is_regular_file(t.mesh_file))
      {
        throw ConfigError("template '" + t.id + "': mesh file '" + t.mesh_file.string() +
                          "' does not exist");
      }
      continue;
    }
    const UnitCellParams &p = t.params;
    if (!(p.width > 0 && p.box_height > 0 && p.mesh_length_box > 0 && p.mesh_length_patch > 0))
    {
      throw ConfigError("template '" + t.id + "': sizes and mesh lengths must be positive");
    }
    if (p.layer_heights.size() != p.permittivities.size() || p.layer_heights.empty())
    {
      throw ConfigError("template '" + t.id +
                        "': layer_heights and permittivities must have the same nonzero length");
    }
  }
  if (c.px && !(*c.px > 0.0))
  {
    throw ConfigError("layout periods must be positive");
  }
  if (c.py && !(*c.py > 0.0))
  {
    throw ConfigError("layout periods must be positive");
  }
  c.gmres.Validate();
  if (c.near_field_radius < 0.0)
  {
    throw ConfigError("near-field radius must be positive");
  }
  if (!(c.output.theta_step_deg > 0.0 && c.output.theta_step_deg <= 180.0))
  {
    throw ConfigError("output.theta_step must lie in (0, 180]");
  }
  try
  {
    ValidateExcitation(c.excitation);
  }
  catch (const ExcitationError &e)
  {
    throw ConfigError(std::string("excitation: ") + e.what());
  }
}

struct Simulation::State
{
  explicit State(const std::filesystem::path &cache_dir) : cache(cache_dir) {}

  MacromodelCache cache;
  std::vector<int> used;                            // config template index per model
  std::vector<std::unique_ptr<CellModel>> models;   // one per used template
  std::unique_ptr<ExteriorBasis> basis;
  ArraySystem system;
  std::unique_ptr<ArrayOperator> op;
  std::unique_ptr<NearFieldPreconditioner> pre;
  bool built = false, solved = false, posted = false;
};

Simulation::Simulation(RunConfig config, RunOptions options)
    : config_(std::move(config)), options_(std::move(options)),
      state_(std::make_unique<State>(options_.cache_dir))
{
  ValidateConfig(config_);
}

Simulation::~Simulation() = default;

const ArraySystem &Simulation::System() const
{
  if (!state_->built)
  {
    throw Error("simulation has not been built");
  }
  return state_->system;
}

const CellModel &Simulation::Template(int t) const
{
  if (!state_->built || t < 0 || t >= static_cast<int>(state_->models.size()))
  {
    throw Error("no such template model");
  }
  return *state_->models[t];
}

void Simulation::Build()
{
  if (state_->built)
  {
    return;
  }
  State &s = *state_;
  const RunConfig &c = config_;

  // Templates in first-use order.
  std::vector<int> model_of(c.templates.size(), -1);
  std::vector<int> cell_model;
  for (const std::string &id : c.cells)
  {
    const int t = c.TemplateIndex(id);
    if (model_of[t] < 0)
    {
      model_of[t] = static_cast<int>(s.used.size());
      s.used.push_back(t);
    }
    cell_model.push_back(model_of[t]);
  }

  auto t0 = Clock::now();
  std::vector<std::shared_ptr<const TriMesh>> meshes;
  for (int t : s.used)
  {
    const TemplateSpec &spec = c.templates[t];
    meshes.push_back(spec.from_file
                         ? std::make_shared<const TriMesh>(LoadMeshFile(spec.mesh_file.string()))
                         : GenerateUnitCell(spec.params).mesh);
  }
  result_.times.geometry = Since(t0);

  t0 = Clock::now();
  const int before = s.cache.Builds();
  for (std::size_t i = 0; i < s.used.size(); i++)
  {
    auto cell = std::make_unique<CellModel>();
    cell->mesh = meshes[i];
    cell->incidence =
        std::make_shared<const Incidence>(BuildIncidence(*meshes[i], IncidenceMode::Cell));
    const std::string &id = c.templates[s.used[i]].id;
    const Incidence &inc = *cell->incidence;
    cell->macromodel = s.cache.Get(id, c.frequency, meshes[i]->Hash(), [&]
    {
      const RegionSystem z = AssembleRegionSystem(inc, c.frequency, c.quadrature);
      Macromodel m = SchurReduce(ProjectSystem(inc, z), inc.num_eq, id, false);
      m.frequency = c.frequency;
      m.mesh_hash = meshes[i]->Hash();
      return m;
    });
    result_.unknowns.per_cell_interior += inc.num_columns - inc.num_eq;
    s.models.push_back(std::move(cell));
  }
  result_.macromodels_built = s.cache.Builds() - before;
  result_.macromodel_cache_hits = static_cast<int>(s.used.size()) - result_.macromodels_built;
  result_.times.macromodel = Since(t0);

  t0 = Clock::now();
  std::vector<const CellModel *> templates;
  for (const auto &m : s.models)
  {
    templates.push_back(m.get());
  }
  s.system.layout = MakeLayout(c.mx, c.my, cell_model, templates);
  CheckPeriods(c, s.system.layout);
  s.basis = std::make_unique<ExteriorBasis>(MakeExteriorBasis(*s.models[0]));
  s.system.basis = s.basis.get();
  for (const auto &m : s.models)
  {
    s.system.cell_models.push_back(&m->macromodel);
  }
  s.system.generators = AssembleGenerators(s.system.layout, *s.basis, c.frequency, c.quadrature);
  s.system.overlap = BuildOverlapIncidence(s.system.layout, *s.basis);
  s.op = std::make_unique<ArrayOperator>(s.system);
  result_.times.fill = Since(t0);

  UnknownCounts &u = result_.unknowns;
  u.per_cell_eq = s.basis->Size();
  u.stacked = s.system.layout.NumCells() * u.per_cell_eq;
  u.merged = s.system.NumUnknowns();
  u.duplicates = u.stacked - u.merged;
  if (options_.monolithic_count)
  {
    const TriMesh whole = BuildArrayMesh(s.system.layout, [&]
    {
      std::vector<const TriMesh *> v;
      for (const auto &m : s.models)
      {
        v.push_back(m->mesh.get());
      }
      return v;
    }());
    u.monolithic = BuildIncidence(whole, IncidenceMode::Monolithic).num_columns;
  }
  s.built = true;
}

std::shared_ptr<const TriMesh> Simulation::ArrayMesh() const
{
  const State &s = *state_;
  if (!s.built)
  {
    throw Error("simulation has not been built");
  }
  std::vector<const TriMesh *> v;
  for (const auto &m : s.models)
  {
    v.push_back(m->mesh.get());
  }
  return std::make_shared<const TriMesh>(BuildArrayMesh(s.system.layout, v));
}

void Simulation::Solve()
{
  Build();
  State &s = *state_;
  if (s.solved)
  {
    return;
  }
  const RunConfig &c = config_;
  rhs_ = s.system.overlap.Uo.transpose() *
         AssembleExcitation(s.system.layout, *s.basis, c.excitation, c.frequency);
  LinearMap precondition;
  if (c.use_preconditioner)
  {
    const auto t0 = Clock::now();
    s.pre = std::make_unique<NearFieldPreconditioner>(s.system, c.NearFieldRadius());
    result_.times.factorization = Since(t0);
    result_.preconditioner_nonzeros = s.pre->NonZeros();
    const NearFieldPreconditioner *pre = s.pre.get();
    precondition = [pre](const Eigen::VectorXcd &v) { return pre->Solve(v); };
  }
  const ArrayOperator *op = s.op.get();
  const LinearMap apply = [op](const Eigen::VectorXcd &x) { return op->Apply(x); };
  try
  {
    solution_ = GmresSolve(apply, precondition, rhs_, c.gmres, result_.solve);
  }
  catch (const ConvergenceError &)
  {
    result_.times.iterative = result_.solve.iteration_seconds;
    throw;
  }
  result_.times.iterative = result_.solve.iteration_seconds;
  result_.solve.fill_seconds = result_.times.fill;
  result_.solve.factorization_seconds = result_.times.factorization;
  s.solved = true;
}

std::vector<CurrentSet> Simulation::Currents() const
{
  if (!state_->solved)
  {
    throw Error("simulation has not been solved");
  }
  return ExpandArrayCurrents(state_->system, solution_);
}

void Simulation::PostProcess()
{
  Solve();
  State &s = *state_;
  if (s.posted)
  {
    return;
  }
  const auto t0 = Clock::now();
  const RunConfig &c = config_;
  const std::vector<CurrentSet> sets = Currents();

  // Radius of a sphere about the origin enclosing every box.
  const ArrayLayout &L = s.system.layout;
  const Vec3 half_span(0.5 * L.mx * L.px, 0.5 * L.my * L.py, 0.0);
  const double radius =
      half_span.norm() + std::max(s.basis->box_max.cwiseAbs().z(), s.basis->box_min.cwiseAbs().z());

  auto intensities = [&](const SphereGrid &g)
  {
    std::vector<double> u(g.Size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < g.Size(); i++)
    {
      u[i] = Intensity(FarField(sets, c.frequency, SphericalDirection(g.theta[i], g.phi[i])));
    }
    return u;
  };
  const int order = SphereGridOrder(c.frequency, radius);
  const SphereGrid grid = MakeSphereGrid(order);
  const std::vector<double> u = intensities(grid);
  double P = 0.0;
  const std::vector<double> D = Directivity(grid, u, &P);
  result_.radiated_power = P;
  result_.peak_directivity_dbi = 10.0 * std::log10(*std::max_element(D.begin(), D.end()));
  // The normalisation is checked on an independent, finer grid.
  const SphereGrid fine = MakeSphereGrid(2 * order + 1);
  const std::vector<double> uf = intensities(fine);
  double integral = 0.0;
  for (int i = 0; i < fine.Size(); i++)
  {
    integral += fine.weight[i] * 4.0 * pi * uf[i] / P;
  }
  result_.directivity_integral = integral / (4.0 * pi);

  std::vector<double> thetas;
  const int steps = static_cast<int>(std::floor(360.0 / c.output.theta_step_deg + 1e-9));
  for (int i = 0; i <= steps; i++)
  {
    thetas.push_back(-180.0 + i * c.output.theta_step_deg);
  }
  result_.cuts.clear();
  for (double phi : c.output.cut_phi_deg)
  {
    result_.cuts.push_back(ComputeCut(sets, c.frequency, phi, thetas, P));
  }
  for (const FarFieldCut &cut : result_.cuts)
  {
    for (double d : cut.d_dbi)
    {
      result_.peak_directivity_dbi = std::max(result_.peak_directivity_dbi, d);
    }
  }
  result_.times.post = Since(t0);
  s.posted = true;
}

UnknownCounts DryRun(const RunConfig &c)
{
  ValidateConfig(c);
  std::vector<int> model_of(c.templates.size(), -1), cell_model;
  std::vector<CellModel> models;
  for (const std::string &id : c.cells)
  {
    const int t = c.TemplateIndex(id);
    if (model_of[t] < 0)
    {
      model_of[t] = static_cast<int>(models.size());
      const TemplateSpec &spec = c.templates[t];
      CellModel cell;
      cell.mesh = spec.from_file
                      ? std::make_shared<const TriMesh>(LoadMeshFile(spec.mesh_file.string()))
                      : GenerateUnitCell(spec.params).mesh;
      cell.incidence =
          std::make_shared<const Incidence>(BuildIncidence(*cell.mesh, IncidenceMode::Cell));
      cell.macromodel.template_id = spec.id;
      models.push_back(std::move(cell));
    }
    cell_model.push_back(model_of[t]);
  }
  std::vector<const CellModel *> templates;
  std::vector<const TriMesh *> meshes;
  UnknownCounts u;
  for (const CellModel &m : models)
  {
    templates.push_back(&m);
    meshes.push_back(m.mesh.get());
    u.per_cell_interior += m.incidence->num_columns - m.incidence->num_eq;
  }
  const ArrayLayout layout = MakeLayout(c.mx, c.my, cell_model, templates);
  CheckPeriods(c, layout);
  const ExteriorBasis eb = MakeExteriorBasis(models[0]);
  const OverlapIncidence overlap = BuildOverlapIncidence(layout, eb);
  u.per_cell_eq = eb.Size();
  u.stacked = layout.NumCells() * u.per_cell_eq;
  u.merged = static_cast<int>(overlap.Uo.cols());
  u.duplicates = u.stacked - u.merged;
  u.monolithic =
      BuildIncidence(BuildArrayMesh(layout, meshes), IncidenceMode::Monolithic).num_columns;
  return u;
}

std::string FormatReport(const RunConfig &c, const RunResult &r)
{
  std::ostringstream os;
  const UnknownCounts &u = r.unknowns;
  os << "macrosurf run report\n\n";
  os << "Frequency: " << Fmt("%.6g", c.frequency / 1e9) << " GHz\n";
  os << "Array: " << c.mx << " x " << c.my << " cells\n";
  std::map<std::string, int> uses;
  for (const std::string &id : c.cells)
  {
    uses[id]++;
  }
  os << "Templates:";
  for (const auto &[id, n] : uses)
  {
    os << " " << id << " (" << n << ")";
  }
  os << "\n";
  if (c.excitation.kind == Excitation::Kind::PlaneWave)
  {
    const Vec3 &d = c.excitation.direction, &p = c.excitation.polarization;
    os << "Excitation: plane wave, direction (" << Fmt("%.6g", d.x()) << ", " << Fmt("%.6g", d.y())
       << ", " << Fmt("%.6g", d.z()) << "), polarization (" << Fmt("%.6g", p.x()) << ", "
       << Fmt("%.6g", p.y()) << ", " << Fmt("%.6g", p.z()) << ")\n";
  }
  else
  {
    const Vec3 &q = c.excitation.position, &o = c.excitation.orientation;
    os << "Excitation: dipole at (" << Fmt("%.6g", q.x()) << ", " << Fmt("%.6g", q.y()) << ", "
       << Fmt("%.6g", q.z()) << ") m, orientation (" << Fmt("%.6g", o.x()) << ", "
       << Fmt("%.6g", o.y()) << ", " << Fmt("%.6g", o.z()) << ")\n";
  }

  os << "\nUnknowns\n";
  os << "  Equivalent-surface unknowns per cell: " << u.per_cell_eq << "\n";
  os << "  Interior unknowns eliminated (per template, summed): " << u.per_cell_interior << "\n";
  os << "  Stacked cell unknowns: " << u.stacked << "\n";
  os << "  Duplicates removed by overlap merge: " << u.duplicates << "\n";
  os << "  Total number of unknowns: " << u.merged << "\n";
  if (u.monolithic > 0)
  {
    os << "  Monolithic unknowns (same array, no macromodels): " << u.monolithic << "\n";
  }

  os << "\nMacromodels: " << r.macromodels_built << " generated, " << r.macromodel_cache_hits
     << " cache hit" << (r.macromodel_cache_hits == 1 ? "" : "s") << "\n";

  os << "\nSolver\n";
  if (c.use_preconditioner)
  {
    os << "  Near-field radius: " << Fmt("%.6g", c.NearFieldRadius() * 1e3) << " mm\n";
    os << "  Preconditioner nonzeros: " << r.preconditioner_nonzeros << "\n";
  }
  else
  {
    os << "  Preconditioner: none\n";
  }
  os << "  GMRES restart " << c.gmres.restart << ", tolerance " << Fmt("%.3g", c.gmres.tolerance)
     << "\n";
  os << "  Iterations: " << r.solve.iterations << "\n";
  os << "  Matrix-vector products: " << r.solve.matvecs << "\n";
  os << "  Final relative residual: " << Fmt("%.6e", r.solve.relative_residual) << "\n";
  os << "  Converged: " << (r.solve.converged ? "yes" : "no") << "\n";

  os << "\nRadiation\n";
  os << "  Radiated power: " << Fmt("%.9e", r.radiated_power) << " W\n";
  os << "  Peak directivity: " << Fmt("%.6f", r.peak_directivity_dbi) << " dBi\n";
  os << "  Directivity integral / 4 pi: " << Fmt("%.9f", r.directivity_integral) << "\n";
  for (const FarFieldCut &cut : r.cuts)
  {
    os << "  Cut phi = " << Fmt("%g", cut.phi_deg) << " deg: " << cut.theta_deg.size()
       << " samples\n";
  }
  return os.str();
}

namespace
{

std::string TimesSection(const PhaseTimes &t)
{
  std::ostringstream os;
  os << "\nTimes (s)\n";
  os << "  Geometry: " << Fmt("%.3f", t.geometry) << "\n";
  os << "  Macromodel generation: " << Fmt("%.3f", t.macromodel) << "\n";
  os << "  Matrix fill time: " << Fmt("%.3f", t.fill) << "\n";
  os << "  Preconditioner factorization: " << Fmt("%.3f", t.factorization) << "\n";
  os << "  Iterative solver: " << Fmt("%.3f", t.iterative) << "\n";
  os << "  Post-processing: " << Fmt("%.3f", t.post) << "\n";
  return os.str();
}

void WriteText(const std::filesystem::path &path, const std::string &text,
               std::vector<std::filesystem::path> &written)
{
  written.push_back(path);
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out)
  {
    throw Error("cannot write '" + path.string() + "'");
  }
}

std::string CurrentsCsv(const Simulation &sim)
{
  const ArraySystem &sys = sim.System();
  const ExteriorBasis &eb = *sys.basis;
  const std::vector<Vec3> mid = EqMidpoints(eb);
  std::vector<const char *> kind(eb.Size(), "J");
  for (int i : eb.m_eq)
  {
    kind[i] = "M";
  }
  for (int i : eb.p_eq)
  {
    kind[i] = "P";
  }
  const Eigen::VectorXcd stacked = sys.overlap.Uo * sim.Solution();
  std::ostringstream os;
  os << "cell,index,kind,x,y,z,re,im\n";
  char line[256];
  for (int m = 0; m < sys.layout.NumCells(); m++)
  {
    const Vec3 c = sys.layout.CellCenter(m);
    for (int i = 0; i < eb.Size(); i++)
    {
      const Vec3 p = mid[i] + c;
      const cplx v = stacked(m * eb.Size() + i);
      std::snprintf(line, sizeof line, "%d,%d,%s,%.9e,%.9e,%.9e,%.10e,%.10e\n", m, i, kind[i],
                    p.x(), p.y(), p.z(), v.real(), v.imag());
      os << line;
    }
  }
  return os.str();
}

}  // namespace

RunResult RunSolve(const RunConfig &config, const RunOptions &options)
{
  std::vector<std::filesystem::path> written;
  bool created_dir = false;
  try
  {
    Simulation sim(config, options);
    sim.PostProcess();
    RunResult result = sim.Result();
    const std::filesystem::path dir = config.output.directory;
    if (!std::filesystem::exists(dir))
    {
      std::filesystem::create_directories(dir);
      created_dir = true;
    }
    for (const FarFieldCut &cut : result.cuts)
    {
      WriteText(dir / ("cut_phi" + Fmt("%g", cut.phi_deg) + ".csv"), CutCsv(cut), written);
    }
    if (config.output.write_currents)
    {
      WriteText(dir / "currents.csv", CurrentsCsv(sim), written);
    }
    WriteText(dir / "report.txt", FormatReport(config, result) + TimesSection(result.times),
              written);
    result.artifacts = written;
    return result;
  }
  catch (...)
  {
    std::error_code ec;
    for (const auto &p : written)
    {
      std::filesystem::remove(p, ec);
    }
    if (created_dir)
    {
      std::filesystem::remove(config.output.directory, ec);
    }
    throw;
  }
}

}  // namespace macrosurf
