// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include "macrosurf/monolithic.hpp"

#include <Eigen/LU>
#include "macrosurf/error.hpp"

namespace macrosurf
{

namespace
{

int ExteriorSlot(const Incidence &inc)
{
  for (int s = 0; s < static_cast<int>(inc.regions.size()); s++)
  {
    if (inc.regions[s].region == kExteriorRegion)
    {
      return s;
    }
  }
  throw IncidenceError("structure has no exterior region");
}

}  // namespace

MonolithicSystem AssembleMonolithic(std::shared_ptr<const TriMesh> mesh, double frequency,
                                    const QuadratureOptions &q)
{
  MonolithicSystem sys;
  sys.mesh = mesh;
  sys.incidence =
      std::make_shared<const Incidence>(BuildIncidence(*mesh, IncidenceMode::Monolithic));
  sys.Z = ProjectSystem(*sys.incidence, AssembleRegionSystem(*sys.incidence, frequency, q));
  return sys;
}

Eigen::VectorXcd MonolithicExcitation(const MonolithicSystem &system, const Excitation &exc,
                                      double frequency)
{
  ValidateExcitation(exc);
  const Incidence &inc = *system.incidence;
  const int s = ExteriorSlot(inc);
  const RegionBases &rb = inc.regions[s];
  const Eigen::VectorXcd e =
      TestElectric(exc, frequency, *system.mesh, rb.surface.rwgs, rb.j, Vec3::Zero());
  const Eigen::VectorXcd h =
      TestMagnetic(exc, frequency, *system.mesh, rb.surface.rwgs, rb.m, Vec3::Zero());
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(inc.num_columns);
  const int base = inc.slot_offset[s];
  const int nj = static_cast<int>(rb.j.size());
  for (int i = 0; i < nj; i++)
  {
    b(inc.column[base + i]) += inc.sign[base + i] * (-e(i) / eta0);
  }
  for (int i = 0; i < static_cast<int>(rb.m.size()); i++)
  {
    b(inc.column[base + nj + i]) += inc.sign[base + nj + i] * (-h(i));
  }
  return b;
}

Eigen::VectorXcd SolveMonolithic(const MonolithicSystem &system, const Eigen::VectorXcd &rhs)
{
  if (rhs.size() != system.NumUnknowns())
  {
    throw DimensionError("right-hand side length does not match the system");
  }
  return system.Z.partialPivLu().solve(rhs);
}

CurrentSet MonolithicExteriorCurrents(const MonolithicSystem &system, const Eigen::VectorXcd &x)
{
  const Incidence &inc = *system.incidence;
  const int s = ExteriorSlot(inc);
  const RegionBases &rb = inc.regions[s];
  CurrentSet set;
  set.mesh = system.mesh;
  set.rwgs = rb.surface.rwgs;
  set.j = Eigen::VectorXcd::Zero(rb.surface.Size());
  set.m = Eigen::VectorXcd::Zero(rb.surface.Size());
  const int base = inc.slot_offset[s];
  const int nj = static_cast<int>(rb.j.size());
  for (int i = 0; i < nj; i++)
  {
    set.j(rb.j[i]) = inc.sign[base + i] * x(inc.column[base + i]);
  }
  for (int i = 0; i < static_cast<int>(rb.m.size()); i++)
  {
    set.m(rb.m[i]) = inc.sign[base + nj + i] * x(inc.column[base + nj + i]);
  }
  return set;
}

}  // namespace macrosurf
