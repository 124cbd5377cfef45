// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_INCIDENCE_HPP
#define MACROSURF_INCIDENCE_HPP

#include <cstdint>
#include <string>
#include <vector>
#include <Eigen/SparseCore>
#include "macrosurf/kernels.hpp"

namespace macrosurf
{

// Boundary situation of one raw unknown, read from the tags of its two
// triangles and of the other triangles on its edge.
enum class BoundaryCase
{
  DielectricInterface,      // two penetrable media
  PecInterface,             // one side of a PEC surface
  PecDielectricJunction,    // penetrable surface meeting a conductor
  GroundPlane,              // upper side of the ground plane, or its underside
  GroundPlaneJunction,      // surface meeting the ground plane
  FictitiousFace,           // on the equivalent surface
  FictitiousGroundPlaneEdge // equivalent surface meeting the ground plane
};

std::string ToString(BoundaryCase c);

// Bases of one region; j and m index surface.rwgs. Local unknown order of
// the region block is [j..., m...].
struct RegionBases
{
  int region = 0;
  cplx eps = 1.0;
  BasisSurface surface;
  std::vector<int> j;
  std::vector<int> m;

  int Size() const { return static_cast<int>(j.size() + m.size()); }
};

struct RawUnknown
{
  int slot = 0;         // index into Incidence::regions
  bool magnetic = false;
  int rwg = 0;          // index into the region's surface.rwgs
  BoundaryCase boundary = BoundaryCase::DielectricInterface;
};

// Unknowns on the equivalent surface, in their canonical order: electric
// face currents, magnetic face currents, then the interior electric currents
// at edges where a side wall meets the ground plane.
enum class EqKind
{
  Electric,
  Magnetic,
  Junction
};

struct EqUnknown
{
  EqKind kind = EqKind::Electric;
  int face = -1;
  int v0 = -1, v1 = -1;
  int raw = -1;  // representative raw unknown
};

enum class IncidenceMode
{
  // Rows are the interior regions; the exterior region only names the
  // equivalent-surface unknowns.
  Cell,
  // Rows are all regions; no equivalent surface.
  Monolithic
};

struct Incidence
{
  IncidenceMode mode = IncidenceMode::Cell;
  std::vector<RegionBases> regions;  // ascending region id
  std::vector<RawUnknown> raw;       // region by region, J then M
  std::vector<int> slot_offset;      // first raw index of each slot
  std::vector<int> column;           // per raw
  std::vector<double> sign;          // per raw, entry of U
  std::vector<int> row;              // per raw, -1 if not a row of U
  int num_columns = 0;
  int num_eq = 0;
  std::vector<EqUnknown> eq;
  Eigen::SparseMatrix<double> U;

  bool IsRowSlot(int slot) const;
  int NumRows() const { return static_cast<int>(U.rows()); }
};

Incidence BuildIncidence(const TriMesh &mesh, IncidenceMode mode);

}  // namespace macrosurf

#endif  // MACROSURF_INCIDENCE_HPP
