// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <map>
#include <set>
#include <tuple>
#include <catch_amalgamated.hpp>
#include "macrosurf/error.hpp"
#include "macrosurf/mesh.hpp"

using namespace macrosurf;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{

const char *kTetra = R"(emesh 1
# unit tetrahedron filled with region 1
r 1 2.5 -0.1
v 0 0 0
v 1 0 0
v 0 1 0
v 0 0 1
t 0 2 1 DIELECTRIC_INTERFACE 0 1
t 0 1 3 DIELECTRIC_INTERFACE 0 1
t 0 3 2 DIELECTRIC_INTERFACE 0 1
t 1 2 3 DIELECTRIC_INTERFACE 0 1
)";

int LineOf(const std::string &text)
{
  try
  {
    LoadMesh(text);
  }
  catch (const ParseError &e)
  {
    return e.Line();
  }
  return -1;
}

// Counts, per edge, the triangles of a triangle subset.
std::map<std::uint64_t, int> EdgeCounts(const TriMesh &m, const std::vector<int> &tris)
{
  std::map<std::uint64_t, int> c;
  for (int t : tris)
  {
    const auto &v = m.Tri(t).v;
    for (int k = 0; k < 3; k++)
    {
      c[EdgeKey(v[k], v[(k + 1) % 3])]++;
    }
  }
  return c;
}

std::vector<int> RegionTriangles(const TriMesh &m, int region)
{
  std::vector<int> out;
  for (int t = 0; t < m.NumTriangles(); t++)
  {
    if (m.Tri(t).tag.front == region || m.Tri(t).tag.back == region)
    {
      out.push_back(t);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("Text mesh loads and round-trips", "[mesh]")
{
  const TriMesh m = LoadMesh(kTetra);
  CHECK(m.NumVertices() == 4);
  CHECK(m.NumTriangles() == 4);
  CHECK(m.Permittivity(1) == cplx(2.5, -0.1));
  CHECK(m.Permittivity(0) == cplx(1.0));
  // Outward normals on all four faces.
  const Vec3 centre(0.25, 0.25, 0.25);
  for (int t = 0; t < 4; t++)
  {
    CHECK(m.Normal(t).dot(m.Centroid(t) - centre) > 0.0);
  }
  const TriMesh again = LoadMesh(WriteMesh(m));
  CHECK(again.Hash() == m.Hash());
  CHECK(m.Translated(Vec3(1e-3, 0, 0)).Hash() != m.Hash());
}

TEST_CASE("Text mesh errors carry line numbers", "[mesh]")
{
  CHECK(LineOf("mesh 2\n") == 1);
  CHECK(LineOf("emesh 1\nv 0 0 0\nv 1 0 0\nt 0 1 7 PEC 0 -1\n") == 4);
  CHECK(LineOf("emesh 1\nv 0 0 0\nv 1 0 0\nv 0 1 0\n\nt 0 1 2 FOO 0 1\n") == 6);
  CHECK(LineOf("emesh 1\nv 0 0 0\nv 1 0 x\n") == 3);
  // Collinear vertices: zero area is reported on the triangle's line.
  CHECK(LineOf("emesh 1\nv 0 0 0\nv 1 0 0\nv 2 0 0\nv 0 1 0\nt 0 1 3 PEC 0 -1\n"
               "t 0 1 2 PEC 0 -1\n") == 7);
  // Three triangles of one surface on a single edge.
  CHECK(LineOf("emesh 1\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 -1 0\nv 0 0 1\n"
               "t 0 1 2 PEC 0 -1\nt 0 3 1 PEC 0 -1\nt 0 1 4 PEC 0 -1\n") == 9);
  CHECK(LineOf("emesh 1\nv 0 0 0\nv 1 0 0\nv 0 1 0\nt 0 1 2 DIELECTRIC_INTERFACE 1 1\n") ==
        5);
  CHECK_THROWS_AS(LoadMeshFile("/nonexistent/mesh.emesh"), ParseError);
}

TEST_CASE("Gmsh 2.2 import maps physical groups to tags", "[mesh]")
{
  const char *msh = R"($MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
10 0 0 0
11 1 0 0
12 1 1 0
13 0 1 0
$EndNodes
$Elements
3
1 15 2 7 1 10
2 2 2 5 1 10 11 12
3 2 2 5 1 10 12 13
$EndElements
)";
  std::map<int, SurfaceTag> table = {{5, {SurfaceKind::Pec, 0, 0, -1}}};
  const TriMesh m = ImportMsh(msh, table);
  CHECK(m.NumTriangles() == 2);
  CHECK_THAT(m.Area(0) + m.Area(1), WithinRel(1.0, 1e-14));
  try
  {
    ImportMsh(msh, {});
    FAIL("missing tag accepted");
  }
  catch (const ParseError &e)
  {
    CHECK(e.Line() == 14);
  }
}

TEST_CASE("Unit cell geometry is closed and correctly tagged", "[mesh]")
{
  UnitCellParams p;
  p.layer_heights = {0.4e-3, 0.362e-3};
  p.permittivities = {3.66, cplx(2.2, -0.01)};
  const UnitCellGeometry g = GenerateUnitCell(p);
  const TriMesh &m = *g.mesh;
  const double w = p.width, H = p.box_height, a = p.patch_width;
  CHECK(g.air_region == 3);

  double box_area = 0.0, patch_area = 0.0, ring_area = 0.0;
  std::vector<int> box;
  for (int t = 0; t < m.NumTriangles(); t++)
  {
    const auto &tag = m.Tri(t).tag;
    const Vec3 c = m.Centroid(t);
    if (BoxFaceOf(m, t) >= 0)
    {
      box.push_back(t);
      box_area += m.Area(t);
      if (tag.kind == SurfaceKind::FictitiousFace)
      {
        // Normal points into the exterior.
        CHECK(m.Normal(t).dot(c - Vec3(0, 0, 0.5 * H)) > 0.0);
      }
      else
      {
        CHECK(m.Normal(t).z() > 0.99);
      }
    }
    else if (tag.kind == SurfaceKind::Pec)
    {
      patch_area += m.Area(t);
      CHECK(tag.front == 3);
      CHECK(tag.back == 2);
    }
    else if (std::abs(c.z() - g.interface_z.back()) < 1e-12)
    {
      ring_area += m.Area(t);
      CHECK(m.Normal(t).z() > 0.99);
    }
  }
  CHECK_THAT(box_area, WithinRel(2 * w * w + 4 * w * H, 1e-12));
  CHECK_THAT(patch_area, WithinRel(a * a, 1e-12));
  CHECK_THAT(ring_area, WithinRel(w * w - a * a, 1e-12));

  // The box and every interior region are closed surfaces.
  for (const auto &[key, n] : EdgeCounts(m, box))
  {
    CHECK(n == 2);
  }
  for (int region : {1, 2, 3})
  {
    for (const auto &[key, n] : EdgeCounts(m, RegionTriangles(m, region)))
    {
      CHECK(n == 2);
    }
  }
  // Box vertices are numbered first.
  std::set<int> box_vertices;
  for (int t : box)
  {
    box_vertices.insert(m.Tri(t).v.begin(), m.Tri(t).v.end());
  }
  CHECK(*box_vertices.rbegin() == static_cast<int>(box_vertices.size()) - 1);
}

TEST_CASE("Opposite box faces are translated copies", "[mesh]")
{
  const UnitCellGeometry g = GenerateUnitCell(UnitCellParams{});
  const TriMesh &m = *g.mesh;
  const double w = g.width;
  for (auto [plus, minus, shift] :
       {std::tuple{kFacePlusX, kFaceMinusX, Vec3(-w, 0, 0)},
        std::tuple{kFacePlusY, kFaceMinusY, Vec3(0, -w, 0)}})
  {
    int matched = 0, total = 0;
    for (int t = 0; t < m.NumTriangles(); t++)
    {
      if (BoxFaceOf(m, t) != plus)
      {
        continue;
      }
      total++;
      for (int s = 0; s < m.NumTriangles(); s++)
      {
        if (BoxFaceOf(m, s) != minus)
        {
          continue;
        }
        int same = 0;
        for (int a : m.Tri(t).v)
        {
          for (int b : m.Tri(s).v)
          {
            same += (m.Vertex(a) + shift - m.Vertex(b)).norm() == 0.0;
          }
        }
        if (same == 3)
        {
          matched++;
          CHECK(m.Normal(t).dot(m.Normal(s)) < -0.999);
        }
      }
    }
    CHECK(total > 0);
    CHECK(matched == total);
  }
}

TEST_CASE("Unit cell parameter errors", "[mesh]")
{
  UnitCellParams p;
  p.patch_width = p.width;
  CHECK_THROWS_AS(GenerateUnitCell(p), GeometryError);
  p = {};
  p.mesh_length_patch = 2.0 * p.patch_width;
  CHECK_THROWS_AS(GenerateUnitCell(p), RefinementError);
  p = {};
  p.mesh_length_box = 2.0 * p.width;
  CHECK_THROWS_AS(GenerateUnitCell(p), RefinementError);
  p = {};
  p.box_height = 0.5e-3;
  CHECK_THROWS_AS(GenerateUnitCell(p), GeometryError);
  p = {};
  p.permittivities = {};
  CHECK_THROWS_AS(GenerateUnitCell(p), GeometryError);
}

TEST_CASE("Cell without ground plane has a fictitious bottom face", "[mesh]")
{
  UnitCellParams p;
  p.ground_plane = false;
  const TriMesh &m = *GenerateUnitCell(p).mesh;
  int bottom = 0;
  for (int t = 0; t < m.NumTriangles(); t++)
  {
    CHECK(m.Tri(t).tag.kind != SurfaceKind::GroundPlane);
    if (BoxFaceOf(m, t) == kFaceBottom)
    {
      bottom++;
      CHECK(m.Normal(t).z() < -0.99);
    }
  }
  CHECK(bottom > 0);
}

TEST_CASE("Icosphere converges to the sphere area", "[mesh]")
{
  const SurfaceTag tag{SurfaceKind::Pec, 0, -1, -1};
  double prev = 1.0;
  for (int level = 1; level <= 4; level++)
  {
    const TriMesh m = GenerateSphere(0.5, level, tag);
    double area = 0.0;
    for (int t = 0; t < m.NumTriangles(); t++)
    {
      area += m.Area(t);
      CHECK(m.Normal(t).dot(m.Centroid(t)) > 0.0);
    }
    const double err = std::abs(area - pi) / pi;
    CHECK(err < prev);
    prev = err;
    CHECK(m.NumTriangles() == 20 * (1 << (2 * level)));
  }
  CHECK(prev < 2e-3);
}

TEST_CASE("Mesh merging fuses shared vertices", "[mesh]")
{
  const SurfaceTag tag{SurfaceKind::Pec, 0, 0, -1};
  const TriMesh a = GeneratePlate(1.0, 1.0, 2, 2, tag);
  const TriMesh b = a.Translated(Vec3(1.0, 0, 0));
  const TriMesh m = MergeMeshes({&a, &b}, 1e-9);
  CHECK(m.NumVertices() == 2 * 9 - 3);
  CHECK(m.NumTriangles() == 16);
}
