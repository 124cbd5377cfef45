// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include "macrosurf/array.hpp"

#include <algorithm>
#include <map>
#include "macrosurf/error.hpp"
#include "signed_union_find.hpp"

namespace macrosurf
{

Vec3 ArrayLayout::CellCenter(int m) const
{
  return origin + Vec3((Ix(m) - 0.5 * (mx - 1)) * px, (Iy(m) - 0.5 * (my - 1)) * py, 0.0);
}

ExteriorBasis MakeExteriorBasis(const CellModel &cell)
{
  const Incidence &inc = *cell.incidence;
  ExteriorBasis eb;
  eb.mesh = cell.mesh;
  int ext_slot = -1;
  for (int s = 0; s < static_cast<int>(inc.regions.size()); s++)
  {
    if (inc.regions[s].region == kExteriorRegion)
    {
      ext_slot = s;
    }
  }
  if (ext_slot < 0)
  {
    throw LayoutError("cell model has no exterior region");
  }
  eb.surface = inc.regions[ext_slot].surface;
  eb.surface.mesh = eb.mesh.get();
  for (int i = 0; i < inc.num_eq; i++)
  {
    const EqUnknown &e = inc.eq[i];
    const RawUnknown &u = inc.raw[e.raw];
    switch (e.kind)
    {
      case EqKind::Electric:
        eb.j_rwg.push_back(u.rwg);
        eb.j_eq.push_back(i);
        break;
      case EqKind::Magnetic:
        eb.m_rwg.push_back(u.rwg);
        eb.m_eq.push_back(i);
        break;
      case EqKind::Junction:
        eb.p_rwg.push_back(inc.regions[u.slot].surface.rwgs[u.rwg]);
        eb.p_eq.push_back(i);
        eb.p_face.push_back(e.face);
        break;
    }
  }
  eb.size = inc.num_eq;
  eb.box_min = Vec3::Constant(std::numeric_limits<double>::infinity());
  eb.box_max = -eb.box_min;
  for (int t = 0; t < eb.mesh->NumTriangles(); t++)
  {
    if (BoxFaceOf(*eb.mesh, t) < 0)
    {
      continue;
    }
    for (int v : eb.mesh->Tri(t).v)
    {
      eb.box_min = eb.box_min.cwiseMin(eb.mesh->Vertex(v));
      eb.box_max = eb.box_max.cwiseMax(eb.mesh->Vertex(v));
    }
  }
  return eb;
}

ArrayLayout MakeLayout(int mx, int my, const std::vector<int> &cell_template,
                       const std::vector<const CellModel *> &templates)
{
  if (mx < 1 || my < 1)
  {
    throw LayoutError("cell counts must be positive");
  }
  if (static_cast<int>(cell_template.size()) != mx * my)
  {
    throw LayoutError("template map has " + std::to_string(cell_template.size()) +
                      " entries for " + std::to_string(mx * my) + " cells");
  }
  if (templates.empty())
  {
    throw LayoutError("no templates");
  }
  for (int t : cell_template)
  {
    if (t < 0 || t >= static_cast<int>(templates.size()))
    {
      throw LayoutError("cell refers to an unknown template");
    }
  }
  const std::uint64_t hash = templates[0]->mesh->EnclosureHash();
  for (const CellModel *c : templates)
  {
    if (c->mesh->EnclosureHash() != hash || c->incidence->num_eq != templates[0]->incidence->num_eq)
    {
      throw LayoutError("template '" + c->macromodel.template_id +
                        "' has a different equivalent surface");
    }
  }
  const ExteriorBasis eb = MakeExteriorBasis(*templates[0]);
  ArrayLayout layout;
  layout.mx = mx;
  layout.my = my;
  layout.px = eb.box_max.x() - eb.box_min.x();
  layout.py = eb.box_max.y() - eb.box_min.y();
  layout.cell_template = cell_template;
  return layout;
}

Eigen::MatrixXcd CouplingBlock(const ExteriorBasis &eb, const Vec3 &shift, double frequency,
                               const QuadratureOptions &q)
{
  const double k0 = FreeSpaceWavenumber(frequency);
  const OperatorBlocks ops = AssembleOperators(eb.surface, eb.surface, shift, k0, q);
  const Eigen::MatrixXcd Z = ComposeBlock(ops, eb.j_rwg, eb.m_rwg, eb.j_rwg, eb.m_rwg, k0, 1.0);
  std::vector<int> pos(eb.j_eq);
  pos.insert(pos.end(), eb.m_eq.begin(), eb.m_eq.end());
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(eb.Size(), eb.Size());
  for (int c = 0; c < static_cast<int>(pos.size()); c++)
  {
    for (int r = 0; r < static_cast<int>(pos.size()); r++)
    {
      out(pos[r], pos[c]) = Z(r, c);
    }
  }
  return out;
}

Generators AssembleGenerators(const ArrayLayout &layout, const ExteriorBasis &eb,
                              double frequency, const QuadratureOptions &q)
{
  Generators g;
  g.mx = layout.mx;
  g.my = layout.my;
  g.blocks.resize((2 * layout.mx - 1) * (2 * layout.my - 1));
  for (int dy = -(layout.my - 1); dy <= layout.my - 1; dy++)
  {
    for (int dx = -(layout.mx - 1); dx <= layout.mx - 1; dx++)
    {
      // Source cell sits at -offset relative to the test cell.
      const Vec3 shift(-dx * layout.px, -dy * layout.py, 0.0);
      g.blocks[g.Slot(dx, dy)] = CouplingBlock(eb, shift, frequency, q);
    }
  }
  return g;
}

namespace
{

std::vector<Rwg> Subset(const std::vector<Rwg> &all, const std::vector<int> &which)
{
  std::vector<Rwg> out;
  for (int i : which)
  {
    out.push_back(all[i]);
  }
  return out;
}

}  // namespace

OverlapIncidence BuildOverlapIncidence(const ArrayLayout &layout, const ExteriorBasis &eb)
{
  const int ne = eb.Size();
  const int total = layout.NumCells() * ne;
  const TriMesh &mesh = *eb.mesh;
  const double tol = 1e-6 * mesh.MaxEdgeLength();
  const std::vector<Rwg> jf = Subset(eb.surface.rwgs, eb.j_rwg);
  const std::vector<Rwg> mf = Subset(eb.surface.rwgs, eb.m_rwg);
  SignedUnionFind uf(total);
  auto join = [&](int a, int b, double s)
  {
    if (!uf.Union(a, b, s))
    {
      throw IncidenceError("inconsistent signs while merging neighbouring cells");
    }
  };

  // Shared faces: currents on the two coincident walls cancel, c_b = -s c_a.
  // Ground-plane underside continuity and the interior currents at the foot
  // of a shared wall follow from the same rule.
  for (int m = 0; m < layout.NumCells(); m++)
  {
    const int ix = layout.Ix(m), iy = layout.Iy(m);
    const std::pair<int, int> steps[2] = {{1, 0}, {0, 1}};
    for (const auto &[sx, sy] : steps)
    {
      if (ix + sx >= layout.mx || iy + sy >= layout.my)
      {
        continue;
      }
      const int n = layout.Index(ix + sx, iy + sy);
      const Vec3 shift = layout.CellCenter(n) - layout.CellCenter(m);
      int matched = 0;
      auto merge = [&](const std::vector<Rwg> &fa, const std::vector<int> &eqa)
      {
        for (const BasisMatch &bm : MatchBases(mesh, fa, mesh, fa, shift, tol))
        {
          join(m * ne + eqa[bm.a], n * ne + eqa[bm.b], -bm.sign);
          matched++;
        }
      };
      merge(jf, eb.j_eq);
      merge(mf, eb.m_eq);
      merge(eb.p_rwg, eb.p_eq);
      if (matched == 0)
      {
        throw LayoutError("adjacent cells " + std::to_string(m) + " and " + std::to_string(n) +
                          " share no matched unknowns");
      }
    }
  }

  // Ground-plane edges on the array boundary: the interior current at the
  // foot of the wall continues into the exterior current on the same edge.
  for (int m = 0; m < layout.NumCells(); m++)
  {
    const int ix = layout.Ix(m), iy = layout.Iy(m);
    for (std::size_t i = 0; i < eb.p_rwg.size(); i++)
    {
      const int face = eb.p_face[i];
      const bool boundary = (face == kFaceMinusX && ix == 0) ||
                            (face == kFacePlusX && ix == layout.mx - 1) ||
                            (face == kFaceMinusY && iy == 0) ||
                            (face == kFacePlusY && iy == layout.my - 1);
      if (!boundary)
      {
        continue;
      }
      const auto found = MatchBases(mesh, {eb.p_rwg[i]}, mesh, jf, Vec3::Zero(), tol);
      if (found.size() != 1)
      {
        throw MatchingError("wall/ground-plane edge without an exterior partner");
      }
      join(m * ne + eb.p_eq[i], m * ne + eb.j_eq[found[0].b], -found[0].sign);
    }
  }

  OverlapIncidence out;
  out.column.assign(total, -1);
  out.sign.assign(total, 0.0);
  std::map<int, int> column_of_root;
  std::vector<double> rep_parity;
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < total; i++)
  {
    const auto [root, parity] = uf.Find(i);
    auto it = column_of_root.find(root);
    if (it == column_of_root.end())
    {
      it = column_of_root.emplace(root, static_cast<int>(rep_parity.size())).first;
      rep_parity.push_back(parity);
      out.multiplicity.push_back(0);
    }
    out.column[i] = it->second;
    out.sign[i] = parity * rep_parity[it->second];
    out.multiplicity[it->second]++;
    trip.emplace_back(i, out.column[i], out.sign[i]);
  }
  out.num_merged = static_cast<int>(rep_parity.size());
  out.Uo.resize(total, out.num_merged);
  out.Uo.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Eigen::VectorXcd AssembleExcitation(const ArrayLayout &layout, const ExteriorBasis &eb,
                                    const Excitation &exc, double frequency)
{
  ValidateExcitation(exc);
  const int ne = eb.Size();
  if (exc.kind == Excitation::Kind::Dipole)
  {
    for (int m = 0; m < layout.NumCells(); m++)
    {
      const Vec3 c = layout.CellCenter(m);
      const Vec3 lo = eb.box_min + c, hi = eb.box_max + c;
      const double tol = 1e-9 * (hi - lo).norm();
      if ((exc.position.array() >= lo.array() - tol).all() &&
          (exc.position.array() <= hi.array() + tol).all())
      {
        throw ExcitationError("dipole lies inside the equivalent surface of cell " +
                              std::to_string(m));
      }
    }
  }
  Eigen::VectorXcd V = Eigen::VectorXcd::Zero(layout.NumCells() * ne);
  for (int m = 0; m < layout.NumCells(); m++)
  {
    const Vec3 c = layout.CellCenter(m);
    const Eigen::VectorXcd e =
        TestElectric(exc, frequency, *eb.mesh, eb.surface.rwgs, eb.j_rwg, c);
    const Eigen::VectorXcd h =
        TestMagnetic(exc, frequency, *eb.mesh, eb.surface.rwgs, eb.m_rwg, c);
    for (std::size_t i = 0; i < eb.j_eq.size(); i++)
    {
      V(m * ne + eb.j_eq[i]) = -e(i) / eta0;
    }
    for (std::size_t i = 0; i < eb.m_eq.size(); i++)
    {
      V(m * ne + eb.m_eq[i]) = -h(i);
    }
  }
  return V;
}

Eigen::MatrixXcd ArraySystem::DenseStacked() const
{
  const int ne = CellSize();
  const int M = layout.NumCells();
  Eigen::MatrixXcd S(M * ne, M * ne);
  for (int m = 0; m < M; m++)
  {
    for (int n = 0; n < M; n++)
    {
      S.block(m * ne, n * ne, ne, ne) =
          generators.At(layout.Ix(m) - layout.Ix(n), layout.Iy(m) - layout.Iy(n));
    }
    S.block(m * ne, m * ne, ne, ne) += CellModelOf(m).Z;
  }
  return S;
}

Eigen::MatrixXcd ArraySystem::Dense() const
{
  const Eigen::MatrixXcd U = Eigen::MatrixXd(overlap.Uo).cast<cplx>();
  return U.transpose() * DenseStacked() * U;
}

TriMesh BuildArrayMesh(const ArrayLayout &layout, const std::vector<const TriMesh *> &cells)
{
  int span = 0;
  for (const TriMesh *c : cells)
  {
    for (int r : c->Regions())
    {
      span = std::max(span, r);
    }
  }
  std::vector<Vec3> verts;
  std::vector<Triangle> tris;
  std::map<int, cplx> eps;
  double longest = 0.0;
  for (int m = 0; m < layout.NumCells(); m++)
  {
    const TriMesh &c = *cells[layout.cell_template[m]];
    longest = std::max(longest, c.MaxEdgeLength());
    const Vec3 shift = layout.CellCenter(m);
    const int base = static_cast<int>(verts.size());
    for (const Vec3 &v : c.Vertices())
    {
      verts.push_back(v + shift);
    }
    auto relabel = [&](int r) { return r > 0 ? r + m * span : r; };
    for (const Triangle &t : c.Triangles())
    {
      Triangle u = t;
      for (int &v : u.v)
      {
        v += base;
      }
      u.tag.front = relabel(t.tag.front);
      u.tag.back = relabel(t.tag.back);
      tris.push_back(u);
    }
    for (const auto &[r, e] : c.RegionPermittivity())
    {
      eps[relabel(r)] = e;
    }
  }
  const TriMesh raw(verts, tris, eps);
  const TriMesh merged = MergeMeshes({&raw}, 1e-6 * longest);

  // Coincident walls of neighbouring boxes become one interface.
  std::map<std::array<int, 3>, std::vector<int>> by_vertices;
  for (int t = 0; t < merged.NumTriangles(); t++)
  {
    std::array<int, 3> key = merged.Tri(t).v;
    std::sort(key.begin(), key.end());
    by_vertices[key].push_back(t);
  }
  std::vector<bool> drop(merged.NumTriangles(), false);
  std::vector<Triangle> out(merged.Triangles());
  for (const auto &[key, list] : by_vertices)
  {
    if (list.size() == 1)
    {
      continue;
    }
    if (list.size() != 2 || out[list[0]].tag.kind != SurfaceKind::FictitiousFace ||
        out[list[1]].tag.kind != SurfaceKind::FictitiousFace)
    {
      throw GeometryError("unexpected coincident triangles in the array mesh");
    }
    Triangle &keep = out[list[0]];
    // keep's normal points out of its own cell, into the neighbour.
    keep.tag = SurfaceTag{SurfaceKind::DielectricInterface, out[list[1]].tag.back,
                          keep.tag.back, -1};
    drop[list[1]] = true;
  }
  std::vector<Triangle> kept;
  for (int t = 0; t < merged.NumTriangles(); t++)
  {
    if (!drop[t])
    {
      kept.push_back(out[t]);
    }
  }
  return TriMesh(merged.Vertices(), kept, merged.RegionPermittivity());
}

}  // namespace macrosurf
