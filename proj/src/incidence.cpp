// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include "macrosurf/incidence.hpp"

#include <algorithm>
#include <map>
#include <tuple>
#include "macrosurf/error.hpp"
#include "signed_union_find.hpp"

namespace macrosurf
{

std::string ToString(BoundaryCase c)
{
  switch (c)
  {
    case BoundaryCase::DielectricInterface: return "dielectric interface";
    case BoundaryCase::PecInterface: return "PEC interface";
    case BoundaryCase::PecDielectricJunction: return "PEC-dielectric junction";
    case BoundaryCase::GroundPlane: return "ground plane";
    case BoundaryCase::GroundPlaneJunction: return "ground-plane junction";
    case BoundaryCase::FictitiousFace: return "equivalent-surface face";
    case BoundaryCase::FictitiousGroundPlaneEdge: return "equivalent-surface ground-plane edge";
  }
  return "unknown";
}

bool Incidence::IsRowSlot(int slot) const
{
  return mode == IncidenceMode::Monolithic || regions[slot].region != kExteriorRegion;
}

namespace
{

bool EdgeTouchesKind(const TriMesh &mesh, int a, int b, SurfaceKind kind)
{
  for (int t : mesh.TrianglesOnEdge(a, b))
  {
    if (mesh.Tri(t).tag.kind == kind)
    {
      return true;
    }
  }
  return false;
}

BoundaryCase Classify(const TriMesh &mesh, const Rwg &f)
{
  const SurfaceKind k0 = mesh.Tri(f.tri[0]).tag.kind, k1 = mesh.Tri(f.tri[1]).tag.kind;
  auto either = [&](SurfaceKind k) { return k0 == k || k1 == k; };
  auto both = [&](SurfaceKind k) { return k0 == k && k1 == k; };
  if (either(SurfaceKind::FictitiousFace))
  {
    return EdgeTouchesKind(mesh, f.v0, f.v1, SurfaceKind::GroundPlane)
               ? BoundaryCase::FictitiousGroundPlaneEdge
               : BoundaryCase::FictitiousFace;
  }
  if (both(SurfaceKind::GroundPlane))
  {
    return BoundaryCase::GroundPlane;
  }
  if (either(SurfaceKind::GroundPlane))
  {
    return BoundaryCase::GroundPlaneJunction;
  }
  if (both(SurfaceKind::Pec))
  {
    return BoundaryCase::PecInterface;
  }
  if (either(SurfaceKind::Pec))
  {
    return BoundaryCase::PecDielectricJunction;
  }
  if (both(SurfaceKind::DielectricInterface))
  {
    return mesh.EdgeTouchesConductor(f.v0, f.v1) ? BoundaryCase::PecDielectricJunction
                                                 : BoundaryCase::DielectricInterface;
  }
  throw IncidenceError("unclassified boundary at edge (" + std::to_string(f.v0) + ", " +
                       std::to_string(f.v1) + ")");
}

}  // namespace

Incidence BuildIncidence(const TriMesh &mesh, IncidenceMode mode)
{
  Incidence inc;
  inc.mode = mode;
  std::map<int, int> slot_of;
  bool has_fictitious = false;
  for (const auto &t : mesh.Triangles())
  {
    has_fictitious = has_fictitious || t.tag.kind == SurfaceKind::FictitiousFace;
  }
  if (mode == IncidenceMode::Cell && !has_fictitious)
  {
    throw IncidenceError("cell mesh has no equivalent surface");
  }

  for (int region : mesh.Regions())
  {
    RegionBases rb;
    rb.region = region;
    rb.eps = mesh.Permittivity(region);
    rb.surface = MakeRegionSurface(mesh, region);
    for (int n = 0; n < rb.surface.Size(); n++)
    {
      rb.j.push_back(n);
      const Rwg &f = rb.surface.rwgs[n];
      if (!mesh.Tri(f.tri[0]).tag.IsConductor() && !mesh.Tri(f.tri[1]).tag.IsConductor() &&
          !mesh.EdgeTouchesConductor(f.v0, f.v1))
      {
        rb.m.push_back(n);
      }
    }
    slot_of[region] = static_cast<int>(inc.regions.size());
    inc.regions.push_back(std::move(rb));
  }
  if (mode == IncidenceMode::Cell && !slot_of.count(kExteriorRegion))
  {
    throw IncidenceError("cell mesh does not border the exterior region");
  }

  // Raw unknowns; per slot, lookup rwg -> raw index for J and M.
  std::vector<std::vector<int>> j_raw(inc.regions.size()), m_raw(inc.regions.size());
  for (int s = 0; s < static_cast<int>(inc.regions.size()); s++)
  {
    const RegionBases &rb = inc.regions[s];
    inc.slot_offset.push_back(static_cast<int>(inc.raw.size()));
    j_raw[s].assign(rb.surface.Size(), -1);
    m_raw[s].assign(rb.surface.Size(), -1);
    for (int n : rb.j)
    {
      j_raw[s][n] = static_cast<int>(inc.raw.size());
      inc.raw.push_back({s, false, n, Classify(mesh, rb.surface.rwgs[n])});
    }
    for (int n : rb.m)
    {
      m_raw[s][n] = static_cast<int>(inc.raw.size());
      inc.raw.push_back({s, true, n, Classify(mesh, rb.surface.rwgs[n])});
    }
  }
  const int nraw = static_cast<int>(inc.raw.size());

  // Continuity across every penetrable triangle: the two regions' currents
  // on a shared triangle are opposite, c_b sigma_b = -c_a sigma_a.
  std::vector<std::vector<std::vector<TriangleBasis>>> tri_inc;
  for (const RegionBases &rb : inc.regions)
  {
    tri_inc.push_back(TriangleIncidence(mesh, rb.surface.rwgs));
  }
  SignedUnionFind uf(nraw);
  for (int t = 0; t < mesh.NumTriangles(); t++)
  {
    const SurfaceTag &tag = mesh.Tri(t).tag;
    if (tag.IsConductor() || tag.front == tag.back)
    {
      continue;
    }
    const int sa = slot_of.at(tag.front), sb = slot_of.at(tag.back);
    for (const TriangleBasis &ea : tri_inc[sa][t])
    {
      for (const TriangleBasis &eb : tri_inc[sb][t])
      {
        if (ea.local_vertex != eb.local_vertex)
        {
          continue;
        }
        const Rwg &f = inc.regions[sa].surface.rwgs[ea.basis];
        if (mode == IncidenceMode::Cell && tag.kind == SurfaceKind::FictitiousFace &&
            EdgeTouchesKind(mesh, f.v0, f.v1, SurfaceKind::GroundPlane))
        {
          // Wall meeting the ground plane: both sides stay independent and
          // are joined later, across cells or with the exterior current.
          continue;
        }
        const double s = -ea.sign * eb.sign;
        const std::pair<int, int> pairs[2] = {{j_raw[sa][ea.basis], j_raw[sb][eb.basis]},
                                              {m_raw[sa][ea.basis], m_raw[sb][eb.basis]}};
        for (const auto &[a, b] : pairs)
        {
          if (a < 0 || b < 0)
          {
            continue;
          }
          if (!uf.Union(a, b, s))
          {
            throw IncidenceError("raw unknown at edge (" + std::to_string(f.v0) + ", " +
                                 std::to_string(f.v1) +
                                 ") is constrained with conflicting signs");
          }
        }
      }
    }
  }

  // Components.
  std::map<int, std::vector<int>> members;
  std::vector<double> parity(nraw);
  std::vector<int> root(nraw);
  for (int r = 0; r < nraw; r++)
  {
    const auto [rt, p] = uf.Find(r);
    root[r] = rt;
    parity[r] = p;
    members[rt].push_back(r);
  }

  // Representative per component; eq components first in canonical order.
  struct Component
  {
    int rep;
    bool eq;
    std::tuple<int, int, int, int> key;  // kind, face, v0, v1
  };
  std::vector<Component> comps;
  for (const auto &[rt, list] : members)
  {
    Component c{list.front(), false, {0, 0, 0, 0}};
    if (mode == IncidenceMode::Cell)
    {
      int ext = -1, junction = -1;
      for (int r : list)
      {
        const RawUnknown &u = inc.raw[r];
        if (inc.regions[u.slot].region == kExteriorRegion)
        {
          if (ext >= 0)
          {
            throw IncidenceError("two exterior unknowns constrained to one another");
          }
          ext = r;
        }
        else if (u.boundary == BoundaryCase::FictitiousGroundPlaneEdge)
        {
          const Rwg &f = inc.regions[u.slot].surface.rwgs[u.rwg];
          const bool on_wall =
              mesh.Tri(f.tri[0]).tag.kind == SurfaceKind::FictitiousFace ||
              mesh.Tri(f.tri[1]).tag.kind == SurfaceKind::FictitiousFace;
          if (on_wall)
          {
            junction = r;
          }
        }
      }
      if (ext >= 0 && junction >= 0)
      {
        throw IncidenceError("raw unknown claimed by two equivalent-surface rules");
      }
      if (ext >= 0)
      {
        const RawUnknown &u = inc.raw[ext];
        const Rwg &f = inc.regions[u.slot].surface.rwgs[u.rwg];
        c.rep = ext;
        c.eq = true;
        c.key = {u.magnetic ? 1 : 0, BoxFaceOf(mesh, f.tri[0]), f.v0, f.v1};
      }
      else if (junction >= 0)
      {
        const RawUnknown &u = inc.raw[junction];
        const Rwg &f = inc.regions[u.slot].surface.rwgs[u.rwg];
        const int wall = mesh.Tri(f.tri[0]).tag.kind == SurfaceKind::FictitiousFace ? f.tri[0]
                                                                                     : f.tri[1];
        c.rep = junction;
        c.eq = true;
        c.key = {2, BoxFaceOf(mesh, wall), f.v0, f.v1};
      }
    }
    comps.push_back(c);
  }
  std::stable_sort(comps.begin(), comps.end(),
                   [](const Component &a, const Component &b)
                   {
                     if (a.eq != b.eq)
                     {
                       return a.eq;
                     }
                     if (a.eq)
                     {
                       return a.key < b.key;
                     }
                     return a.rep < b.rep;
                   });

  inc.column.assign(nraw, -1);
  inc.sign.assign(nraw, 0.0);
  for (int c = 0; c < static_cast<int>(comps.size()); c++)
  {
    const int rep = comps[c].rep;
    for (int r : members.at(root[rep]))
    {
      inc.column[r] = c;
      inc.sign[r] = parity[r] * parity[rep];
    }
    if (comps[c].eq)
    {
      inc.num_eq++;
      EqUnknown e;
      e.kind = static_cast<EqKind>(std::get<0>(comps[c].key));
      e.face = std::get<1>(comps[c].key);
      e.v0 = std::get<2>(comps[c].key);
      e.v1 = std::get<3>(comps[c].key);
      e.raw = rep;
      inc.eq.push_back(e);
    }
  }
  inc.num_columns = static_cast<int>(comps.size());

  // Rows of U: raw unknowns of the row regions, in raw order.
  inc.row.assign(nraw, -1);
  std::vector<Eigen::Triplet<double>> trip;
  int nrows = 0;
  for (int r = 0; r < nraw; r++)
  {
    if (inc.IsRowSlot(inc.raw[r].slot))
    {
      inc.row[r] = nrows;
      trip.emplace_back(nrows, inc.column[r], inc.sign[r]);
      nrows++;
    }
  }
  inc.U.resize(nrows, inc.num_columns);
  inc.U.setFromTriplets(trip.begin(), trip.end());
  return inc;
}

}  // namespace macrosurf
