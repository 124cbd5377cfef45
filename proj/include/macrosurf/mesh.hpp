// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_MESH_HPP
#define MACROSURF_MESH_HPP

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>
#include <Eigen/Core>
#include <Eigen/Geometry>
#include "macrosurf/constants.hpp"

namespace macrosurf
{

using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

// Region ids: 0 is the unbounded exterior (free space); -1 marks the field-free
// inside of a closed conductor.
inline constexpr int kExteriorRegion = 0;
inline constexpr int kVoidRegion = -1;

enum class SurfaceKind
{
  Pec,
  DielectricInterface,
  FictitiousFace,
  GroundPlane
};

std::string_view ToString(SurfaceKind kind);

// Tag attached to every triangle. The stored normal points into the front
// region. Fictitious faces always have the exterior in front; ground planes
// have the cell interior in front and the exterior behind.
struct SurfaceTag
{
  SurfaceKind kind = SurfaceKind::Pec;
  int front = kExteriorRegion;
  int back = kVoidRegion;
  int face_id = -1;

  bool IsConductor() const
  {
    return kind == SurfaceKind::Pec || kind == SurfaceKind::GroundPlane;
  }
  bool operator==(const SurfaceTag &) const = default;
};

struct Triangle
{
  std::array<int, 3> v;
  SurfaceTag tag;
};

inline std::uint64_t EdgeKey(int a, int b)
{
  const auto lo = static_cast<std::uint64_t>(a < b ? a : b);
  const auto hi = static_cast<std::uint64_t>(a < b ? b : a);
  return (lo << 32) | hi;
}

struct MeshIssue
{
  int triangle = -1;  // offending triangle, or -1 for mesh-wide problems
  std::string message;
};

// Triangulated surface set with tagged subsurfaces. Immutable after
// construction; the constructor validates every invariant and throws
// GeometryError on failure.
class TriMesh
{
public:
  TriMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles,
          std::map<int, cplx> region_permittivity = {});

  // Returns the first invariant violation, if any, without constructing.
  static std::optional<MeshIssue> Validate(const std::vector<Vec3> &vertices,
                                           const std::vector<Triangle> &triangles);

  const std::vector<Vec3> &Vertices() const { return vertices_; }
  const std::vector<Triangle> &Triangles() const { return triangles_; }
  int NumVertices() const { return static_cast<int>(vertices_.size()); }
  int NumTriangles() const { return static_cast<int>(triangles_.size()); }

  const Vec3 &Vertex(int i) const { return vertices_[i]; }
  const Triangle &Tri(int t) const { return triangles_[t]; }
  Vec3 Normal(int t) const { return normals_[t]; }
  double Area(int t) const { return areas_[t]; }
  Vec3 Centroid(int t) const;

  // Triangles sharing the edge (a, b), in ascending index order.
  const std::vector<int> &TrianglesOnEdge(int a, int b) const;
  bool EdgeTouchesConductor(int a, int b) const;

  // Relative permittivity of a region; the exterior is free space and regions
  // without an explicit entry default to 1.
  cplx Permittivity(int region) const;
  const std::map<int, cplx> &RegionPermittivity() const { return region_eps_; }
  // Sorted ids of all regions referenced by triangle sides (void excluded).
  std::vector<int> Regions() const;

  // FNV-1a hash over coordinates, connectivity and tags.
  std::uint64_t Hash() const;
  // Hash restricted to fictitious-face and ground-plane triangles.
  std::uint64_t EnclosureHash() const;

  TriMesh Translated(const Vec3 &offset) const;
  double MaxEdgeLength() const;

private:
  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  std::map<int, cplx> region_eps_;
  std::vector<Vec3> normals_;
  std::vector<double> areas_;
  std::unordered_map<std::uint64_t, std::vector<int>> edges_;
};

// Plain-text mesh format:
//   emesh 1
//   r <region> <eps_re> <eps_im>
//   v <x> <y> <z>
//   t <i> <j> <k> PEC <front> <back>
//   t <i> <j> <k> DIELECTRIC_INTERFACE <front> <back>
//   t <i> <j> <k> FICTITIOUS_FACE <face_id> <interior>
//   t <i> <j> <k> GROUND_PLANE <interior>
// Indices are 0-based; '#' starts a comment.
TriMesh LoadMesh(std::string_view text);
TriMesh LoadMeshFile(const std::string &path);
std::string WriteMesh(const TriMesh &mesh);

// Gmsh ASCII 2.2 surface mesh import. Triangles (element type 2) are tagged via
// their physical group id.
TriMesh ImportMsh(std::string_view text, const std::map<int, SurfaceTag> &tag_table,
                  const std::map<int, cplx> &region_permittivity = {});

// Parametric grounded-substrate cell with a centred square patch, enclosed by
// a box-shaped fictitious surface.
struct UnitCellParams
{
  std::string template_id = "cell";
  double width = 13.5e-3;
  std::vector<double> layer_heights = {0.762e-3};
  std::vector<cplx> permittivities = {3.66};
  double box_height = 2.0e-3;
  double patch_width = 5.4e-3;
  double mesh_length_patch = 0.8e-3;
  double mesh_length_box = 2.5e-3;
  bool ground_plane = true;
};

// Face ids of the enclosing box.
enum BoxFace : int
{
  kFaceMinusX = 0,
  kFacePlusX = 1,
  kFaceMinusY = 2,
  kFacePlusY = 3,
  kFaceTop = 4,
  kFaceBottom = 5
};

struct UnitCellGeometry
{
  std::string template_id;
  double width = 0.0;
  double box_height = 0.0;
  std::vector<double> interface_z;  // top of each dielectric layer
  std::vector<cplx> permittivities;
  double patch_width = 0.0;
  bool ground_plane = true;
  std::shared_ptr<const TriMesh> mesh;
  // Region ids: 1..L for the layers, L+1 for the air gap under the box lid.
  int air_region = 0;
};

UnitCellGeometry GenerateUnitCell(const UnitCellParams &params);

// Face id of a triangle on the enclosing box, or -1.
int BoxFaceOf(const TriMesh &mesh, int triangle);

// Icosahedron subdivided `levels` times and projected onto the sphere.
TriMesh GenerateSphere(double radius, int levels, SurfaceTag tag,
                       std::map<int, cplx> region_permittivity = {});

// Flat rectangle in the z = 0 plane, centred at the origin, normal +z.
TriMesh GeneratePlate(double lx, double ly, int nx, int ny, SurfaceTag tag);

// Concatenate meshes, merging vertices closer than `tolerance`.
TriMesh MergeMeshes(const std::vector<const TriMesh *> &meshes, double tolerance);

}  // namespace macrosurf

#endif  // MACROSURF_MESH_HPP
