// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include "macrosurf/rwg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>
#include <unordered_map>
#include "macrosurf/error.hpp"

namespace macrosurf
{

namespace
{

std::array<int, 3> SortedVertices(const Triangle &t)
{
  std::array<int, 3> v = t.v;
  std::sort(v.begin(), v.end());
  return v;
}

int FreeVertex(const Triangle &t, int a, int b)
{
  for (int v : t.v)
  {
    if (v != a && v != b)
    {
      return v;
    }
  }
  return -1;
}

bool RunsForward(const Triangle &t, int a, int b)
{
  for (int k = 0; k < 3; k++)
  {
    if (t.v[k] == a && t.v[(k + 1) % 3] == b)
    {
      return true;
    }
  }
  return false;
}

// Spatial lookup of mesh vertices.
class PointIndex
{
public:
  PointIndex(const TriMesh &mesh, const Vec3 &shift, double tol) : mesh_(mesh), shift_(shift),
                                                                  tol_(tol)
  {
    for (int i = 0; i < mesh.NumVertices(); i++)
    {
      cells_[Cell(mesh.Vertex(i) + shift)].push_back(i);
    }
  }

  int Find(const Vec3 &p) const
  {
    const auto [cx, cy, cz] = Cell(p);
    for (long dx = -1; dx <= 1; dx++)
    {
      for (long dy = -1; dy <= 1; dy++)
      {
        for (long dz = -1; dz <= 1; dz++)
        {
          auto it = cells_.find({cx + dx, cy + dy, cz + dz});
          if (it == cells_.end())
          {
            continue;
          }
          for (int i : it->second)
          {
            if ((mesh_.Vertex(i) + shift_ - p).norm() <= tol_)
            {
              return i;
            }
          }
        }
      }
    }
    return -1;
  }

private:
  std::tuple<long, long, long> Cell(const Vec3 &p) const
  {
    return {std::lround(std::floor(p.x() / tol_)), std::lround(std::floor(p.y() / tol_)),
            std::lround(std::floor(p.z() / tol_))};
  }

  const TriMesh &mesh_;
  Vec3 shift_;
  double tol_;
  std::map<std::tuple<long, long, long>, std::vector<int>> cells_;
};

}  // namespace

std::vector<Rwg> BuildRwgs(const TriMesh &mesh, const std::vector<int> &subset)
{
  std::map<std::uint64_t, std::vector<int>> edges;
  for (int t : subset)
  {
    const auto &v = mesh.Tri(t).v;
    for (int k = 0; k < 3; k++)
    {
      edges[EdgeKey(v[k], v[(k + 1) % 3])].push_back(t);
    }
  }
  std::vector<Rwg> out;
  for (const auto &[key, tris] : edges)
  {
    if (tris.size() == 1)
    {
      continue;
    }
    const int a = static_cast<int>(key >> 32);
    const int b = static_cast<int>(key & 0xffffffffULL);
    if (tris.size() > 2)
    {
      throw AssemblyError("edge (" + std::to_string(a) + ", " + std::to_string(b) + ") has " +
                          std::to_string(tris.size()) +
                          " triangles bounding one region; cannot define a basis");
    }
    Rwg f;
    f.v0 = a;
    f.v1 = b;
    const bool first_plus =
        SortedVertices(mesh.Tri(tris[0])) < SortedVertices(mesh.Tri(tris[1]));
    f.tri = first_plus ? std::array<int, 2>{tris[0], tris[1]}
                       : std::array<int, 2>{tris[1], tris[0]};
    f.free = {FreeVertex(mesh.Tri(f.tri[0]), a, b), FreeVertex(mesh.Tri(f.tri[1]), a, b)};
    f.length = (mesh.Vertex(a) - mesh.Vertex(b)).norm();
    f.orientation = RunsForward(mesh.Tri(f.tri[0]), a, b) ? 1.0 : -1.0;
    out.push_back(f);
  }
  return out;
}

std::vector<std::vector<TriangleBasis>> TriangleIncidence(const TriMesh &mesh,
                                                          const std::vector<Rwg> &rwgs)
{
  std::vector<std::vector<TriangleBasis>> out(mesh.NumTriangles());
  for (int n = 0; n < static_cast<int>(rwgs.size()); n++)
  {
    for (int h = 0; h < 2; h++)
    {
      const int t = rwgs[n].tri[h];
      const auto &v = mesh.Tri(t).v;
      const int local = static_cast<int>(std::find(v.begin(), v.end(), rwgs[n].free[h]) -
                                         v.begin());
      out[t].push_back({n, local, h == 0 ? 1.0 : -1.0});
    }
  }
  return out;
}

Vec3 EvaluateRwg(const TriMesh &mesh, const Rwg &f, int half, const Vec3 &r)
{
  const double s = half == 0 ? 1.0 : -1.0;
  return s * f.length / (2.0 * mesh.Area(f.tri[half])) * (r - mesh.Vertex(f.free[half]));
}

std::vector<BasisMatch> MatchBases(const TriMesh &ma, const std::vector<Rwg> &ba,
                                   const TriMesh &mb, const std::vector<Rwg> &bb,
                                   const Vec3 &shift_b, double tolerance)
{
  PointIndex index(mb, shift_b, tolerance);
  std::unordered_map<std::uint64_t, int> b_by_edge;
  for (int i = 0; i < static_cast<int>(bb.size()); i++)
  {
    b_by_edge[EdgeKey(bb[i].v0, bb[i].v1)] = i;
  }
  std::vector<BasisMatch> out;
  for (int i = 0; i < static_cast<int>(ba.size()); i++)
  {
    const Rwg &fa = ba[i];
    const int e0 = index.Find(ma.Vertex(fa.v0));
    const int e1 = index.Find(ma.Vertex(fa.v1));
    if (e0 < 0 || e1 < 0)
    {
      continue;
    }
    auto it = b_by_edge.find(EdgeKey(e0, e1));
    if (it == b_by_edge.end())
    {
      continue;
    }
    const Rwg &fb = bb[it->second];
    for (int ha = 0; ha < 2; ha++)
    {
      const int pa = index.Find(ma.Vertex(fa.free[ha]));
      if (pa < 0)
      {
        continue;
      }
      int hb = -1;
      for (int h = 0; h < 2; h++)
      {
        if (fb.free[h] == pa)
        {
          hb = h;
        }
      }
      if (hb < 0)
      {
        continue;
      }
      const double sa = ha == 0 ? 1.0 : -1.0;
      const double sb = hb == 0 ? 1.0 : -1.0;
      out.push_back({i, it->second, sa * sb});
      break;
    }
  }
  return out;
}

}  // namespace macrosurf
