// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include "macrosurf/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>
#include <Eigen/Geometry>
#include "macrosurf/error.hpp"

namespace macrosurf
{

namespace
{

class Fnv1a
{
public:
  void Bytes(const void *data, std::size_t n)
  {
    const auto *p = static_cast<const unsigned char *>(data);
    for (std::size_t i = 0; i < n; i++)
    {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void Value(const T &v)
  {
    Bytes(&v, sizeof(T));
  }
  std::uint64_t Digest() const { return h_; }

private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

void HashTriangle(Fnv1a &h, const std::vector<Vec3> &vertices, const Triangle &t)
{
  for (int i : t.v)
  {
    h.Value(i);
    h.Value(vertices[i].x());
    h.Value(vertices[i].y());
    h.Value(vertices[i].z());
  }
  h.Value(static_cast<int>(t.tag.kind));
  h.Value(t.tag.front);
  h.Value(t.tag.back);
  h.Value(t.tag.face_id);
}

std::optional<std::string> CheckTag(const SurfaceTag &tag)
{
  switch (tag.kind)
  {
    case SurfaceKind::Pec:
      if (tag.front < kVoidRegion || tag.back < kVoidRegion)
      {
        return "PEC region ids must be >= -1";
      }
      if (tag.front == kVoidRegion && tag.back == kVoidRegion)
      {
        return "PEC surface has no region on either side";
      }
      return std::nullopt;
    case SurfaceKind::DielectricInterface:
      if (tag.front < 0 || tag.back < 0)
      {
        return "dielectric interface region ids must be >= 0";
      }
      if (tag.front == tag.back)
      {
        return "dielectric interface has the same region on both sides";
      }
      return std::nullopt;
    case SurfaceKind::FictitiousFace:
      if (tag.front != kExteriorRegion || tag.back <= 0)
      {
        return "fictitious face must separate the exterior from an interior region";
      }
      if (tag.face_id < 0)
      {
        return "fictitious face id must be >= 0";
      }
      return std::nullopt;
    case SurfaceKind::GroundPlane:
      if (tag.front <= 0 || tag.back != kExteriorRegion)
      {
        return "ground plane must have an interior region in front and the exterior behind";
      }
      return std::nullopt;
  }
  return "unknown surface kind";
}

// Key identifying one tagged subsurface for the manifold check.
std::tuple<int, int, int, int> SurfaceIdentity(const SurfaceTag &tag)
{
  return {static_cast<int>(tag.kind), tag.front, tag.back, tag.face_id};
}

}  // namespace

std::string_view ToString(SurfaceKind kind)
{
  switch (kind)
  {
    case SurfaceKind::Pec:
      return "PEC";
    case SurfaceKind::DielectricInterface:
      return "DIELECTRIC_INTERFACE";
    case SurfaceKind::FictitiousFace:
      return "FICTITIOUS_FACE";
    case SurfaceKind::GroundPlane:
      return "GROUND_PLANE";
  }
  return "UNKNOWN";
}

std::optional<MeshIssue> TriMesh::Validate(const std::vector<Vec3> &vertices,
                                           const std::vector<Triangle> &triangles)
{
  if (triangles.empty())
  {
    return MeshIssue{-1, "mesh has no triangles"};
  }
  for (std::size_t i = 0; i < vertices.size(); i++)
  {
    if (!vertices[i].allFinite())
    {
      return MeshIssue{-1, "vertex " + std::to_string(i) + " has a non-finite coordinate"};
    }
  }
  const int nv = static_cast<int>(vertices.size());
  std::unordered_map<std::uint64_t, std::map<std::tuple<int, int, int, int>, int>> edge_use;
  for (std::size_t t = 0; t < triangles.size(); t++)
  {
    const auto &tri = triangles[t];
    const int ti = static_cast<int>(t);
    for (int i : tri.v)
    {
      if (i < 0 || i >= nv)
      {
        return MeshIssue{ti, "vertex index " + std::to_string(i) + " out of range"};
      }
    }
    if (tri.v[0] == tri.v[1] || tri.v[1] == tri.v[2] || tri.v[0] == tri.v[2])
    {
      return MeshIssue{ti, "triangle repeats a vertex"};
    }
    const Vec3 e1 = vertices[tri.v[1]] - vertices[tri.v[0]];
    const Vec3 e2 = vertices[tri.v[2]] - vertices[tri.v[0]];
    const double scale = std::max({e1.squaredNorm(), e2.squaredNorm(),
                                   (e2 - e1).squaredNorm()});
    if (!(0.5 * e1.cross(e2).norm() > 1e-10 * scale))
    {
      return MeshIssue{ti, "triangle has zero area"};
    }
    if (auto msg = CheckTag(tri.tag))
    {
      return MeshIssue{ti, *msg};
    }
    for (int k = 0; k < 3; k++)
    {
      auto &count = edge_use[EdgeKey(tri.v[k], tri.v[(k + 1) % 3])][SurfaceIdentity(tri.tag)];
      if (++count > 2)
      {
        return MeshIssue{ti, "tagged surface is non-manifold at edge (" +
                                 std::to_string(tri.v[k]) + ", " +
                                 std::to_string(tri.v[(k + 1) % 3]) + ")"};
      }
    }
  }
  return std::nullopt;
}

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles,
                 std::map<int, cplx> region_permittivity)
  : vertices_(std::move(vertices)), triangles_(std::move(triangles)),
    region_eps_(std::move(region_permittivity))
{
  if (auto issue = Validate(vertices_, triangles_))
  {
    throw GeometryError(issue->triangle >= 0
                            ? "triangle " + std::to_string(issue->triangle) + ": " + issue->message
                            : issue->message);
  }
  for (const auto &[region, eps] : region_eps_)
  {
    if (region <= 0)
    {
      throw GeometryError("permittivity may only be assigned to interior regions (got region " +
                          std::to_string(region) + ")");
    }
    if (!std::isfinite(eps.real()) || !std::isfinite(eps.imag()) || eps.real() <= 0.0)
    {
      throw GeometryError("region " + std::to_string(region) +
                          " has an invalid relative permittivity");
    }
  }
  normals_.resize(triangles_.size());
  areas_.resize(triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); t++)
  {
    const auto &v = triangles_[t].v;
    const Vec3 c = (vertices_[v[1]] - vertices_[v[0]]).cross(vertices_[v[2]] - vertices_[v[0]]);
    areas_[t] = 0.5 * c.norm();
    normals_[t] = c.normalized();
    for (int k = 0; k < 3; k++)
    {
      edges_[EdgeKey(v[k], v[(k + 1) % 3])].push_back(static_cast<int>(t));
    }
  }
}

Vec3 TriMesh::Centroid(int t) const
{
  const auto &v = triangles_[t].v;
  return (vertices_[v[0]] + vertices_[v[1]] + vertices_[v[2]]) / 3.0;
}

const std::vector<int> &TriMesh::TrianglesOnEdge(int a, int b) const
{
  static const std::vector<int> empty;
  auto it = edges_.find(EdgeKey(a, b));
  return it == edges_.end() ? empty : it->second;
}

bool TriMesh::EdgeTouchesConductor(int a, int b) const
{
  for (int t : TrianglesOnEdge(a, b))
  {
    if (triangles_[t].tag.IsConductor())
    {
      return true;
    }
  }
  return false;
}

cplx TriMesh::Permittivity(int region) const
{
  if (region == kExteriorRegion)
  {
    return 1.0;
  }
  auto it = region_eps_.find(region);
  return it == region_eps_.end() ? cplx(1.0) : it->second;
}

std::vector<int> TriMesh::Regions() const
{
  std::set<int> ids;
  for (const auto &t : triangles_)
  {
    if (t.tag.front != kVoidRegion)
    {
      ids.insert(t.tag.front);
    }
    if (t.tag.back != kVoidRegion)
    {
      ids.insert(t.tag.back);
    }
  }
  return {ids.begin(), ids.end()};
}

std::uint64_t TriMesh::Hash() const
{
  Fnv1a h;
  for (const auto &t : triangles_)
  {
    HashTriangle(h, vertices_, t);
  }
  for (const auto &[region, eps] : region_eps_)
  {
    h.Value(region);
    h.Value(eps.real());
    h.Value(eps.imag());
  }
  return h.Digest();
}

std::uint64_t TriMesh::EnclosureHash() const
{
  Fnv1a h;
  for (const auto &t : triangles_)
  {
    if (t.tag.kind == SurfaceKind::FictitiousFace || t.tag.kind == SurfaceKind::GroundPlane)
    {
      HashTriangle(h, vertices_, t);
    }
  }
  return h.Digest();
}

TriMesh TriMesh::Translated(const Vec3 &offset) const
{
  std::vector<Vec3> moved(vertices_);
  for (auto &v : moved)
  {
    v += offset;
  }
  return TriMesh(std::move(moved), triangles_, region_eps_);
}

double TriMesh::MaxEdgeLength() const
{
  double longest = 0.0;
  for (const auto &t : triangles_)
  {
    for (int k = 0; k < 3; k++)
    {
      longest = std::max(longest, (vertices_[t.v[k]] - vertices_[t.v[(k + 1) % 3]]).norm());
    }
  }
  return longest;
}

// ---------------------------------------------------------------------------
// Text I/O

namespace
{

std::vector<std::string> Tokens(const std::string &line)
{
  std::vector<std::string> out;
  std::istringstream in(line.substr(0, line.find('#')));
  std::string tok;
  while (in >> tok)
  {
    out.push_back(tok);
  }
  return out;
}

double ParseDouble(const std::string &s, int line)
{
  try
  {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size())
    {
      throw ParseError("malformed number '" + s + "'", line);
    }
    return v;
  }
  catch (const std::logic_error &)
  {
    throw ParseError("malformed number '" + s + "'", line);
  }
}

int ParseInt(const std::string &s, int line)
{
  try
  {
    std::size_t used = 0;
    long v = std::stol(s, &used);
    if (used != s.size() || v < std::numeric_limits<int>::min() ||
        v > std::numeric_limits<int>::max())
    {
      throw ParseError("malformed integer '" + s + "'", line);
    }
    return static_cast<int>(v);
  }
  catch (const std::logic_error &)
  {
    throw ParseError("malformed integer '" + s + "'", line);
  }
}

TriMesh BuildChecked(std::vector<Vec3> vertices, std::vector<Triangle> triangles,
                     std::map<int, cplx> eps, const std::vector<int> &tri_lines, int last_line)
{
  if (auto issue = TriMesh::Validate(vertices, triangles))
  {
    const int line = issue->triangle >= 0 ? tri_lines[issue->triangle] : last_line;
    throw ParseError(issue->message, line);
  }
  try
  {
    return TriMesh(std::move(vertices), std::move(triangles), std::move(eps));
  }
  catch (const GeometryError &e)
  {
    throw ParseError(e.what(), last_line);
  }
}

}  // namespace

TriMesh LoadMesh(std::string_view text)
{
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  bool header = false;
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<int> tri_lines;
  std::map<int, cplx> eps;
  while (std::getline(in, line))
  {
    lineno++;
    const auto tok = Tokens(line);
    if (tok.empty())
    {
      continue;
    }
    if (!header)
    {
      if (tok.size() != 2 || tok[0] != "emesh" || tok[1] != "1")
      {
        throw ParseError("expected header 'emesh 1'", lineno);
      }
      header = true;
      continue;
    }
    if (tok[0] == "v")
    {
      if (tok.size() != 4)
      {
        throw ParseError("vertex needs 3 coordinates", lineno);
      }
      Vec3 p(ParseDouble(tok[1], lineno), ParseDouble(tok[2], lineno),
             ParseDouble(tok[3], lineno));
      if (!p.allFinite())
      {
        throw ParseError("non-finite vertex coordinate", lineno);
      }
      vertices.push_back(p);
    }
    else if (tok[0] == "r")
    {
      if (tok.size() != 4)
      {
        throw ParseError("region line needs id, eps_re, eps_im", lineno);
      }
      const int id = ParseInt(tok[1], lineno);
      if (id <= 0)
      {
        throw ParseError("permittivity may only be assigned to interior regions", lineno);
      }
      const cplx e(ParseDouble(tok[2], lineno), ParseDouble(tok[3], lineno));
      if (!std::isfinite(e.real()) || !std::isfinite(e.imag()) || e.real() <= 0.0)
      {
        throw ParseError("invalid relative permittivity", lineno);
      }
      if (!eps.emplace(id, e).second)
      {
        throw ParseError("region " + std::to_string(id) + " defined twice", lineno);
      }
    }
    else if (tok[0] == "t")
    {
      if (tok.size() < 5)
      {
        throw ParseError("triangle needs 3 vertex indices and a tag", lineno);
      }
      Triangle t;
      for (int k = 0; k < 3; k++)
      {
        t.v[k] = ParseInt(tok[1 + k], lineno);
        if (t.v[k] < 0 || t.v[k] >= static_cast<int>(vertices.size()))
        {
          throw ParseError("vertex index " + tok[1 + k] + " out of range", lineno);
        }
      }
      const std::string &kind = tok[4];
      auto need = [&](std::size_t n)
      {
        if (tok.size() != 5 + n)
        {
          throw ParseError(kind + " tag expects " + std::to_string(n) + " argument(s)", lineno);
        }
      };
      if (kind == "PEC")
      {
        need(2);
        t.tag = {SurfaceKind::Pec, ParseInt(tok[5], lineno), ParseInt(tok[6], lineno), -1};
      }
      else if (kind == "DIELECTRIC_INTERFACE")
      {
        need(2);
        t.tag = {SurfaceKind::DielectricInterface, ParseInt(tok[5], lineno),
                 ParseInt(tok[6], lineno), -1};
      }
      else if (kind == "FICTITIOUS_FACE")
      {
        need(2);
        t.tag = {SurfaceKind::FictitiousFace, kExteriorRegion, ParseInt(tok[6], lineno),
                 ParseInt(tok[5], lineno)};
      }
      else if (kind == "GROUND_PLANE")
      {
        need(1);
        t.tag = {SurfaceKind::GroundPlane, ParseInt(tok[5], lineno), kExteriorRegion, -1};
      }
      else
      {
        throw ParseError("unknown surface tag '" + kind + "'", lineno);
      }
      triangles.push_back(t);
      tri_lines.push_back(lineno);
    }
    else
    {
      throw ParseError("unknown record '" + tok[0] + "'", lineno);
    }
  }
  if (!header)
  {
    throw ParseError("empty mesh file", lineno);
  }
  return BuildChecked(std::move(vertices), std::move(triangles), std::move(eps), tri_lines,
                      lineno);
}

TriMesh LoadMeshFile(const std::string &path)
{
  std::ifstream f(path);
  if (!f)
  {
    throw ParseError("cannot open mesh file '" + path + "'", 0);
  }
  std::stringstream ss;
  ss << f.rdbuf();
  return LoadMesh(ss.str());
}

std::string WriteMesh(const TriMesh &mesh)
{
  std::ostringstream out;
  out.precision(17);
  out << "emesh 1\n";
  for (const auto &[region, eps] : mesh.RegionPermittivity())
  {
    out << "r " << region << ' ' << eps.real() << ' ' << eps.imag() << '\n';
  }
  for (const auto &v : mesh.Vertices())
  {
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  for (const auto &t : mesh.Triangles())
  {
    out << "t " << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << ' ' << ToString(t.tag.kind);
    switch (t.tag.kind)
    {
      case SurfaceKind::Pec:
      case SurfaceKind::DielectricInterface:
        out << ' ' << t.tag.front << ' ' << t.tag.back;
        break;
      case SurfaceKind::FictitiousFace:
        out << ' ' << t.tag.face_id << ' ' << t.tag.back;
        break;
      case SurfaceKind::GroundPlane:
        out << ' ' << t.tag.front;
        break;
    }
    out << '\n';
  }
  return out.str();
}

TriMesh ImportMsh(std::string_view text, const std::map<int, SurfaceTag> &tag_table,
                  const std::map<int, cplx> &region_permittivity)
{
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto next = [&]() -> std::vector<std::string>
  {
    while (std::getline(in, line))
    {
      lineno++;
      auto tok = Tokens(line);
      if (!tok.empty())
      {
        return tok;
      }
    }
    throw ParseError("unexpected end of file", lineno);
  };

  std::vector<Vec3> vertices;
  std::unordered_map<long, int> node_index;
  std::vector<Triangle> triangles;
  std::vector<int> tri_lines;
  bool have_format = false;
  while (std::getline(in, line))
  {
    lineno++;
    const auto tok = Tokens(line);
    if (tok.empty())
    {
      continue;
    }
    if (tok[0] == "$MeshFormat")
    {
      auto fmt = next();
      if (fmt.size() < 3 || fmt[0].rfind("2.", 0) != 0 || fmt[1] != "0")
      {
        throw ParseError("only ASCII MSH 2.x files are supported", lineno);
      }
      if (next()[0] != "$EndMeshFormat")
      {
        throw ParseError("expected $EndMeshFormat", lineno);
      }
      have_format = true;
    }
    else if (tok[0] == "$Nodes")
    {
      const int n = ParseInt(next()[0], lineno);
      for (int i = 0; i < n; i++)
      {
        auto t = next();
        if (t.size() != 4)
        {
          throw ParseError("node needs id and 3 coordinates", lineno);
        }
        const long id = ParseInt(t[0], lineno);
        if (!node_index.emplace(id, static_cast<int>(vertices.size())).second)
        {
          throw ParseError("duplicate node id " + t[0], lineno);
        }
        vertices.emplace_back(ParseDouble(t[1], lineno), ParseDouble(t[2], lineno),
                              ParseDouble(t[3], lineno));
      }
      if (next()[0] != "$EndNodes")
      {
        throw ParseError("expected $EndNodes", lineno);
      }
    }
    else if (tok[0] == "$Elements")
    {
      const int n = ParseInt(next()[0], lineno);
      for (int i = 0; i < n; i++)
      {
        auto t = next();
        if (t.size() < 3)
        {
          throw ParseError("malformed element", lineno);
        }
        const int type = ParseInt(t[1], lineno);
        const int ntags = ParseInt(t[2], lineno);
        if (type != 2)
        {
          continue;
        }
        if (ntags < 1 || static_cast<int>(t.size()) != 3 + ntags + 3)
        {
          throw ParseError("triangle element needs a physical tag and 3 nodes", lineno);
        }
        const int phys = ParseInt(t[3], lineno);
        auto it = tag_table.find(phys);
        if (it == tag_table.end())
        {
          throw ParseError("physical group " + std::to_string(phys) + " has no surface tag",
                           lineno);
        }
        Triangle tri;
        tri.tag = it->second;
        for (int k = 0; k < 3; k++)
        {
          auto nit = node_index.find(ParseInt(t[3 + ntags + k], lineno));
          if (nit == node_index.end())
          {
            throw ParseError("element references unknown node " + t[3 + ntags + k], lineno);
          }
          tri.v[k] = nit->second;
        }
        triangles.push_back(tri);
        tri_lines.push_back(lineno);
      }
      if (next()[0] != "$EndElements")
      {
        throw ParseError("expected $EndElements", lineno);
      }
    }
    else if (tok[0][0] == '$' && tok[0].rfind("$End", 0) != 0)
    {
      // Skip unknown sections.
      const std::string end = "$End" + tok[0].substr(1);
      while (next()[0] != end)
      {
      }
    }
  }
  if (!have_format)
  {
    throw ParseError("missing $MeshFormat section", lineno);
  }
  return BuildChecked(std::move(vertices), std::move(triangles), region_permittivity, tri_lines,
                      lineno);
}

// ---------------------------------------------------------------------------
// Generators

namespace
{

double Lin(double lo, double hi, int i, int n)
{
  if (i == 0)
  {
    return lo;
  }
  if (i == n)
  {
    return hi;
  }
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
}

// Vertex pool that merges points with bit-identical coordinates.
class VertexPool
{
public:
  int Add(const Vec3 &p)
  {
    auto key = std::make_tuple(p.x() + 0.0, p.y() + 0.0, p.z() + 0.0);
    auto [it, inserted] = index_.emplace(key, static_cast<int>(points_.size()));
    if (inserted)
    {
      points_.push_back(p);
    }
    return it->second;
  }
  std::vector<Vec3> Take() { return std::move(points_); }

private:
  std::map<std::tuple<double, double, double>, int> index_;
  std::vector<Vec3> points_;
};

void AddOriented(std::vector<Triangle> &tris, const std::vector<Vec3> &pts,
                 std::array<int, 3> v, const Vec3 &want, const SurfaceTag &tag)
{
  const Vec3 n = (pts[v[1]] - pts[v[0]]).cross(pts[v[2]] - pts[v[0]]);
  if (n.dot(want) < 0.0)
  {
    std::swap(v[1], v[2]);
  }
  tris.push_back({v, tag});
}

int Divisions(double length, double h)
{
  return std::max(1, static_cast<int>(std::ceil(length / h - 1e-9)));
}

}  // namespace

UnitCellGeometry GenerateUnitCell(const UnitCellParams &p)
{
  const int L = static_cast<int>(p.layer_heights.size());
  if (L == 0)
  {
    throw GeometryError("unit cell needs at least one dielectric layer");
  }
  if (p.permittivities.size() != p.layer_heights.size())
  {
    throw GeometryError("one permittivity per layer is required");
  }
  if (!(p.width > 0.0) || !(p.box_height > 0.0))
  {
    throw GeometryError("cell width and box height must be positive");
  }
  if (!(p.patch_width > 0.0) || p.patch_width >= p.width)
  {
    throw GeometryError("patch width must be positive and smaller than the cell width");
  }
  if (!(p.mesh_length_patch > 0.0) || !(p.mesh_length_box > 0.0))
  {
    throw RefinementError("mesh lengths must be positive");
  }
  if (p.mesh_length_patch > p.patch_width)
  {
    throw RefinementError("patch mesh length exceeds the patch width");
  }
  if (p.mesh_length_box > p.width)
  {
    throw RefinementError("box mesh length exceeds the cell width");
  }
  std::vector<double> zl = {0.0};
  for (int i = 0; i < L; i++)
  {
    if (!(p.layer_heights[i] > 0.0))
    {
      throw GeometryError("layer heights must be positive");
    }
    if (p.permittivities[i].real() <= 0.0)
    {
      throw GeometryError("layer permittivity must have a positive real part");
    }
    zl.push_back(zl.back() + p.layer_heights[i]);
  }
  if (zl.back() >= p.box_height * (1.0 - 1e-9))
  {
    throw GeometryError("box height must exceed the total substrate thickness");
  }
  zl.push_back(p.box_height);

  const double w = p.width;
  const double hw = 0.5 * w;
  const int nb = Divisions(w, p.mesh_length_box);
  const int air = L + 1;

  // z-levels of wall vertices and the region of each wall strip.
  std::vector<double> wz = {0.0};
  std::vector<int> strip_region;
  for (int s = 0; s + 1 < static_cast<int>(zl.size()); s++)
  {
    const int n = Divisions(zl[s + 1] - zl[s], p.mesh_length_box);
    for (int k = 1; k <= n; k++)
    {
      wz.push_back(k == n ? zl[s + 1] : Lin(zl[s], zl[s + 1], k, n));
      strip_region.push_back(s + 1);
    }
  }
  const int nz = static_cast<int>(wz.size()) - 1;

  VertexPool pool;
  std::vector<std::array<int, 3>> raw;
  std::vector<SurfaceTag> raw_tags;
  std::vector<Vec3> raw_want;
  auto quad = [&](int a, int b, int c, int d, const Vec3 &want, const SurfaceTag &tag)
  {
    // a-b-c-d around the quad; split along a-c.
    raw.push_back({a, b, c});
    raw.push_back({a, c, d});
    for (int k = 0; k < 2; k++)
    {
      raw_tags.push_back(tag);
      raw_want.push_back(want);
    }
  };

  // Bottom and top faces.
  const SurfaceTag bottom_tag =
      p.ground_plane ? SurfaceTag{SurfaceKind::GroundPlane, 1, kExteriorRegion, -1}
                     : SurfaceTag{SurfaceKind::FictitiousFace, kExteriorRegion, 1, kFaceBottom};
  const Vec3 bottom_want = p.ground_plane ? Vec3(0, 0, 1) : Vec3(0, 0, -1);
  for (int level : {0, 1})
  {
    const double z = level == 0 ? 0.0 : p.box_height;
    std::vector<int> id((nb + 1) * (nb + 1));
    for (int j = 0; j <= nb; j++)
    {
      for (int i = 0; i <= nb; i++)
      {
        id[j * (nb + 1) + i] = pool.Add(Vec3(Lin(-hw, hw, i, nb), Lin(-hw, hw, j, nb), z));
      }
    }
    for (int j = 0; j < nb; j++)
    {
      for (int i = 0; i < nb; i++)
      {
        const int a = id[j * (nb + 1) + i], b = id[j * (nb + 1) + i + 1];
        const int c = id[(j + 1) * (nb + 1) + i + 1], d = id[(j + 1) * (nb + 1) + i];
        if (level == 0)
        {
          quad(a, b, c, d, bottom_want, bottom_tag);
        }
        else
        {
          quad(a, b, c, d, Vec3(0, 0, 1),
               {SurfaceKind::FictitiousFace, kExteriorRegion, air, kFaceTop});
        }
      }
    }
  }

  // Side walls. The -x and -y walls reuse the (u, z) pattern of the opposite
  // wall so that neighbouring cells see identical triangles.
  for (int face : {kFacePlusX, kFaceMinusX, kFacePlusY, kFaceMinusY})
  {
    auto point = [&](int i, int k) -> Vec3
    {
      const double u = Lin(-hw, hw, i, nb);
      switch (face)
      {
        case kFacePlusX:
          return {hw, u, wz[k]};
        case kFaceMinusX:
          return {-hw, u, wz[k]};
        case kFacePlusY:
          return {u, hw, wz[k]};
        default:
          return {u, -hw, wz[k]};
      }
    };
    Vec3 want = Vec3::Zero();
    want[face / 2] = (face % 2 == 1) ? 1.0 : -1.0;
    for (int k = 0; k < nz; k++)
    {
      for (int i = 0; i < nb; i++)
      {
        const int a = pool.Add(point(i, k)), b = pool.Add(point(i + 1, k));
        const int c = pool.Add(point(i + 1, k + 1)), d = pool.Add(point(i, k + 1));
        quad(a, b, c, d, want,
             {SurfaceKind::FictitiousFace, kExteriorRegion, strip_region[k], face});
      }
    }
  }

  // Interior interfaces below the patch plane.
  for (int l = 1; l < L; l++)
  {
    const double z = zl[l];
    std::vector<int> id((nb + 1) * (nb + 1));
    for (int j = 0; j <= nb; j++)
    {
      for (int i = 0; i <= nb; i++)
      {
        id[j * (nb + 1) + i] = pool.Add(Vec3(Lin(-hw, hw, i, nb), Lin(-hw, hw, j, nb), z));
      }
    }
    for (int j = 0; j < nb; j++)
    {
      for (int i = 0; i < nb; i++)
      {
        quad(id[j * (nb + 1) + i], id[j * (nb + 1) + i + 1], id[(j + 1) * (nb + 1) + i + 1],
             id[(j + 1) * (nb + 1) + i], Vec3(0, 0, 1),
             {SurfaceKind::DielectricInterface, l + 1, l, -1});
      }
    }
  }

  // Patch plane: square rings graded from the box spacing to the patch
  // spacing, then a tensor grid on the patch.
  {
    const double z = zl[L];
    const double ha = 0.5 * p.patch_width;
    const int np = Divisions(p.patch_width, p.mesh_length_patch);
    const double gap = hw - ha;
    const int nr = Divisions(gap, 0.5 * (p.mesh_length_box + p.mesh_length_patch));
    const SurfaceTag ring_tag{SurfaceKind::DielectricInterface, air, L, -1};
    auto ring = [&](int r)
    {
      const double s = (r == nr) ? ha : hw + (ha - hw) * static_cast<double>(r) / nr;
      const int n = (r == 0) ? nb
                    : (r == nr)
                        ? np
                        : std::max(1, static_cast<int>(std::lround(
                                          nb + (np - nb) * static_cast<double>(r) / nr)));
      std::vector<int> loop;
      for (int k = 0; k < n; k++)
      {
        loop.push_back(pool.Add(Vec3(Lin(-s, s, k, n), -s, z)));
      }
      for (int k = 0; k < n; k++)
      {
        loop.push_back(pool.Add(Vec3(s, Lin(-s, s, k, n), z)));
      }
      for (int k = 0; k < n; k++)
      {
        loop.push_back(pool.Add(Vec3(Lin(-s, s, n - k, n), s, z)));
      }
      for (int k = 0; k < n; k++)
      {
        loop.push_back(pool.Add(Vec3(-s, Lin(-s, s, n - k, n), z)));
      }
      return loop;
    };
    std::vector<int> outer = ring(0);
    for (int r = 1; r <= nr; r++)
    {
      std::vector<int> inner = ring(r);
      const int no = static_cast<int>(outer.size());
      const int ni = static_cast<int>(inner.size());
      int io = 0, ii = 0;
      while (io < no || ii < ni)
      {
        const double to = static_cast<double>(io + 1) / no;
        const double ti = static_cast<double>(ii + 1) / ni;
        if (ii >= ni || (io < no && to <= ti + 1e-12))
        {
          raw.push_back({outer[io % no], outer[(io + 1) % no], inner[ii % ni]});
          io++;
        }
        else
        {
          raw.push_back({outer[io % no], inner[(ii + 1) % ni], inner[ii % ni]});
          ii++;
        }
        raw_tags.push_back(ring_tag);
        raw_want.push_back(Vec3(0, 0, 1));
      }
      outer = std::move(inner);
    }
    std::vector<int> id((np + 1) * (np + 1));
    for (int j = 0; j <= np; j++)
    {
      for (int i = 0; i <= np; i++)
      {
        id[j * (np + 1) + i] = pool.Add(Vec3(Lin(-ha, ha, i, np), Lin(-ha, ha, j, np), z));
      }
    }
    for (int j = 0; j < np; j++)
    {
      for (int i = 0; i < np; i++)
      {
        quad(id[j * (np + 1) + i], id[j * (np + 1) + i + 1], id[(j + 1) * (np + 1) + i + 1],
             id[(j + 1) * (np + 1) + i], Vec3(0, 0, 1), {SurfaceKind::Pec, air, L, -1});
      }
    }
  }

  std::vector<Vec3> pts = pool.Take();
  std::vector<Triangle> tris;
  tris.reserve(raw.size());
  for (std::size_t t = 0; t < raw.size(); t++)
  {
    AddOriented(tris, pts, raw[t], raw_want[t], raw_tags[t]);
  }
  std::map<int, cplx> eps;
  for (int l = 0; l < L; l++)
  {
    eps[l + 1] = p.permittivities[l];
  }

  UnitCellGeometry g;
  g.template_id = p.template_id;
  g.width = w;
  g.box_height = p.box_height;
  g.interface_z.assign(zl.begin() + 1, zl.end() - 1);
  g.permittivities = p.permittivities;
  g.patch_width = p.patch_width;
  g.ground_plane = p.ground_plane;
  g.air_region = air;
  g.mesh = std::make_shared<const TriMesh>(std::move(pts), std::move(tris), std::move(eps));
  return g;
}

int BoxFaceOf(const TriMesh &mesh, int triangle)
{
  const auto &tag = mesh.Tri(triangle).tag;
  if (tag.kind == SurfaceKind::FictitiousFace)
  {
    return tag.face_id;
  }
  if (tag.kind == SurfaceKind::GroundPlane)
  {
    return kFaceBottom;
  }
  return -1;
}

TriMesh GenerateSphere(double radius, int levels, SurfaceTag tag,
                       std::map<int, cplx> region_permittivity)
{
  if (!(radius > 0.0) || levels < 0)
  {
    throw GeometryError("sphere needs a positive radius and non-negative refinement level");
  }
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<Vec3> pts = {{-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
                           {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
                           {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1}};
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (auto &v : pts)
  {
    v.normalize();
  }
  for (int l = 0; l < levels; l++)
  {
    std::map<std::uint64_t, int> mid;
    auto midpoint = [&](int a, int b)
    {
      auto [it, inserted] = mid.emplace(EdgeKey(a, b), static_cast<int>(pts.size()));
      if (inserted)
      {
        pts.push_back((pts[a] + pts[b]).normalized());
      }
      return it->second;
    };
    std::vector<std::array<int, 3>> next;
    for (const auto &f : faces)
    {
      const int a = midpoint(f[0], f[1]), b = midpoint(f[1], f[2]), c = midpoint(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
  }
  std::vector<Triangle> tris;
  for (auto &v : pts)
  {
    v *= radius;
  }
  for (const auto &f : faces)
  {
    const Vec3 c = (pts[f[0]] + pts[f[1]] + pts[f[2]]) / 3.0;
    AddOriented(tris, pts, f, c, tag);
  }
  return TriMesh(std::move(pts), std::move(tris), std::move(region_permittivity));
}

TriMesh GeneratePlate(double lx, double ly, int nx, int ny, SurfaceTag tag)
{
  if (!(lx > 0.0) || !(ly > 0.0) || nx < 1 || ny < 1)
  {
    throw GeometryError("plate needs positive size and at least one division per side");
  }
  std::vector<Vec3> pts;
  for (int j = 0; j <= ny; j++)
  {
    for (int i = 0; i <= nx; i++)
    {
      pts.emplace_back(Lin(-0.5 * lx, 0.5 * lx, i, nx), Lin(-0.5 * ly, 0.5 * ly, j, ny), 0.0);
    }
  }
  std::vector<Triangle> tris;
  for (int j = 0; j < ny; j++)
  {
    for (int i = 0; i < nx; i++)
    {
      const int a = j * (nx + 1) + i, b = a + 1, c = a + nx + 2, d = a + nx + 1;
      tris.push_back({{a, b, c}, tag});
      tris.push_back({{a, c, d}, tag});
    }
  }
  return TriMesh(std::move(pts), std::move(tris));
}

TriMesh MergeMeshes(const std::vector<const TriMesh *> &meshes, double tolerance)
{
  std::vector<Vec3> pts;
  std::vector<Triangle> tris;
  std::map<int, cplx> eps;
  std::map<std::tuple<long, long, long>, std::vector<int>> grid;
  auto cell = [&](const Vec3 &v)
  {
    return std::make_tuple(std::lround(std::floor(v.x() / tolerance)),
                           std::lround(std::floor(v.y() / tolerance)),
                           std::lround(std::floor(v.z() / tolerance)));
  };
  auto add = [&](const Vec3 &v)
  {
    const auto [cx, cy, cz] = cell(v);
    for (long dx = -1; dx <= 1; dx++)
    {
      for (long dy = -1; dy <= 1; dy++)
      {
        for (long dz = -1; dz <= 1; dz++)
        {
          auto it = grid.find({cx + dx, cy + dy, cz + dz});
          if (it == grid.end())
          {
            continue;
          }
          for (int idx : it->second)
          {
            if ((pts[idx] - v).norm() <= tolerance)
            {
              return idx;
            }
          }
        }
      }
    }
    const int idx = static_cast<int>(pts.size());
    pts.push_back(v);
    grid[{cx, cy, cz}].push_back(idx);
    return idx;
  };
  for (const TriMesh *m : meshes)
  {
    std::vector<int> map(m->NumVertices());
    for (int i = 0; i < m->NumVertices(); i++)
    {
      map[i] = add(m->Vertex(i));
    }
    for (const auto &t : m->Triangles())
    {
      tris.push_back({{map[t.v[0]], map[t.v[1]], map[t.v[2]]}, t.tag});
    }
    for (const auto &[r, e] : m->RegionPermittivity())
    {
      eps[r] = e;
    }
  }
  return TriMesh(std::move(pts), std::move(tris), std::move(eps));
}

}  // namespace macrosurf
