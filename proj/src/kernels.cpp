// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include "macrosurf/kernels.hpp"

#include <cmath>
#include <map>
#include <algorithm>
#include <tuple>
#include <Eigen/Geometry>
#include "macrosurf/quadrature.hpp"
#include "macrosurf/singular.hpp"

namespace macrosurf
{

namespace
{

constexpr double kSeriesLimit = 0.1;
constexpr double kInv4Pi = 1.0 / (4.0 * pi);
// Structured meshes put many pairs exactly on the near/far and subdivision
// thresholds; the margin resolves such ties the same way wherever the pair
// sits, so that assembly is translation invariant.
constexpr double kTieMargin = 1.0 + 1e-9;


// Eigen's cross() conjugates complex results; this one does not.
CVec3 Cross(const CVec3 &a, const Vec3 &b)
{
  return {a.y() * b.z() - a.z() * b.y(), a.z() * b.x() - a.x() * b.z(),
          a.x() * b.y() - a.y() * b.x()};
}

}  // namespace

cplx Green(cplx k, double R)
{
  return std::exp(-j_unit * k * R) * kInv4Pi / R;
}

cplx GreenGradFactor(cplx k, double R)
{
  const cplx jkr = j_unit * k * R;
  return -(1.0 + jkr) * std::exp(-jkr) * kInv4Pi / (R * R * R);
}

cplx GreenSmooth(cplx k, double R)
{
  const cplx x = k * R;
  if (std::abs(x) < kSeriesLimit)
  {
    // (exp(-jx) - 1)/R = k sum_{m>=1} (-jx)^m / (m! x)
    cplx term = -j_unit;  // (-j)^1 x^0 / 1!
    cplx sum = term;
    for (int m = 2; m <= 12; m++)
    {
      term *= -j_unit * x / static_cast<double>(m);
      sum += term;
    }
    return k * sum * kInv4Pi;
  }
  return (std::exp(-j_unit * x) - 1.0) * kInv4Pi / R;
}

cplx GreenGradFactorSmooth(cplx k, double R)
{
  const cplx x = k * R;
  if (std::abs(x) < kSeriesLimit)
  {
    // 4 pi R^3 f_s = sum_{m>=3} (-j)^m (m-1)/m! x^m
    cplx power = -j_unit * -j_unit * -j_unit / 6.0;  // (-j)^3 / 3!
    cplx sum = 2.0 * power;
    for (int m = 4; m <= 14; m++)
    {
      power *= -j_unit * x / static_cast<double>(m);
      sum += static_cast<double>(m - 1) * power;
    }
    return sum * k * k * k * kInv4Pi;
  }
  return GreenGradFactor(k, R) + kInv4Pi / (R * R * R) + k * k / (8.0 * pi * R);
}

std::vector<int> BasisSurface::Triangles() const
{
  std::vector<int> out;
  for (int t = 0; t < static_cast<int>(normal_sign.size()); t++)
  {
    if (normal_sign[t] != 0.0)
    {
      out.push_back(t);
    }
  }
  return out;
}

BasisSurface MakeRegionSurface(const TriMesh &mesh, int region)
{
  BasisSurface s;
  s.mesh = &mesh;
  s.normal_sign.assign(mesh.NumTriangles(), 0.0);
  for (int t = 0; t < mesh.NumTriangles(); t++)
  {
    const auto &tag = mesh.Tri(t).tag;
    if (tag.front == region)
    {
      s.normal_sign[t] = 1.0;
    }
    else if (tag.back == region)
    {
      s.normal_sign[t] = -1.0;
    }
  }
  s.rwgs = BuildRwgs(mesh, s.Triangles());
  return s;
}

std::vector<std::pair<int, int>> CoincidentTriangles(const BasisSurface &test,
                                                     const BasisSurface &src,
                                                     const Vec3 &shift)
{
  const double tol = geometric_tolerance * std::max(1.0, test.mesh->MaxEdgeLength());
  std::map<std::tuple<long, long, long>, std::vector<int>> cells;
  auto cell = [&](const Vec3 &p)
  {
    return std::make_tuple(std::lround(std::floor(p.x() / tol)),
                           std::lround(std::floor(p.y() / tol)),
                           std::lround(std::floor(p.z() / tol)));
  };
  for (int t : test.Triangles())
  {
    cells[cell(test.mesh->Centroid(t))].push_back(t);
  }
  std::vector<std::pair<int, int>> out;
  for (int s : src.Triangles())
  {
    const Vec3 c = src.mesh->Centroid(s) + shift;
    const auto [cx, cy, cz] = cell(c);
    bool found = false;
    for (long dx = -1; dx <= 1 && !found; dx++)
    {
      for (long dy = -1; dy <= 1 && !found; dy++)
      {
        for (long dz = -1; dz <= 1 && !found; dz++)
        {
          auto it = cells.find({cx + dx, cy + dy, cz + dz});
          if (it == cells.end())
          {
            continue;
          }
          for (int t : it->second)
          {
            if ((test.mesh->Centroid(t) - c).norm() > tol)
            {
              continue;
            }
            int matched = 0;
            for (int a : test.mesh->Tri(t).v)
            {
              for (int b : src.mesh->Tri(s).v)
              {
                if ((test.mesh->Vertex(a) - src.mesh->Vertex(b) - shift).norm() <= tol)
                {
                  matched++;
                }
              }
            }
            if (matched == 3)
            {
              out.emplace_back(t, s);
              found = true;
              break;
            }
          }
        }
      }
    }
  }
  return out;
}

namespace
{

struct TriGeom
{
  std::array<Vec3, 3> v;
  Vec3 centroid;
  double area;
  double diameter;
  std::vector<Vec3> far_pts, near_pts;
  std::vector<double> far_w, near_w;  // weight * area
};

TriGeom MakeGeom(const TriMesh &mesh, int t, const Vec3 &shift, const QuadratureOptions &q)
{
  TriGeom g;
  for (int i = 0; i < 3; i++)
  {
    g.v[i] = mesh.Vertex(mesh.Tri(t).v[i]) + shift;
  }
  g.centroid = (g.v[0] + g.v[1] + g.v[2]) / 3.0;
  g.area = mesh.Area(t);
  g.diameter = std::max({(g.v[0] - g.v[1]).norm(), (g.v[1] - g.v[2]).norm(),
                         (g.v[2] - g.v[0]).norm()});
  auto fill = [&](int n, std::vector<Vec3> &pts, std::vector<double> &w)
  {
    const auto &rule = TriangleQuadrature(n);
    for (int k = 0; k < rule.Size(); k++)
    {
      const auto &b = rule.bary[k];
      pts.push_back(b[0] * g.v[0] + b[1] * g.v[1] + b[2] * g.v[2]);
      w.push_back(rule.weight[k] * g.area);
    }
  };
  fill(q.far_points, g.far_pts, g.far_w);
  fill(q.near_points, g.near_pts, g.near_w);
  return g;
}

// Source potentials at one observation point: S = int G, Sv = int G r',
// V = int f (r - r').
struct Potentials
{
  cplx S;
  CVec3 Sv;
  CVec3 V;
};

Potentials SourcePotentials(const Vec3 &r, const TriGeom &s, cplx k, bool near)
{
  Potentials p{0.0, CVec3::Zero(), CVec3::Zero()};
  if (!near)
  {
    for (std::size_t q = 0; q < s.far_pts.size(); q++)
    {
      const Vec3 d = r - s.far_pts[q];
      const double R = d.norm();
      const cplx g = Green(k, R) * s.far_w[q];
      p.S += g;
      p.Sv += g * s.far_pts[q].cast<cplx>();
      p.V += (GreenGradFactor(k, R) * s.far_w[q]) * d.cast<cplx>();
    }
    return p;
  }
  for (std::size_t q = 0; q < s.near_pts.size(); q++)
  {
    const Vec3 d = r - s.near_pts[q];
    const double R = d.norm();
    const cplx g = GreenSmooth(k, R) * s.near_w[q];
    p.S += g;
    p.Sv += g * s.near_pts[q].cast<cplx>();
    p.V += (GreenGradFactorSmooth(k, R) * s.near_w[q]) * d.cast<cplx>();
  }
  const StaticIntegrals st = TriangleStaticIntegrals(r, s.v[0], s.v[1], s.v[2]);
  p.S += st.i1 * kInv4Pi;
  p.Sv += ((st.i_rho + r * st.i1) * kInv4Pi).cast<cplx>();
  p.V += (st.grad_i1 * kInv4Pi).cast<cplx>() + (k * k / (8.0 * pi)) * st.i_rho.cast<cplx>();
  return p;
}

// Outer rule for a near pair: the test triangle is split recursively while a
// piece is close to the source triangle compared with its own size.
void NearOuterRule(const std::array<Vec3, 3> &v, const TriGeom &src, int depth,
                   const TriangleRule &rule, std::vector<Vec3> &pts, std::vector<double> &w)
{
  const Vec3 c = (v[0] + v[1] + v[2]) / 3.0;
  const double diam =
      std::max({(v[0] - v[1]).norm(), (v[1] - v[2]).norm(), (v[2] - v[0]).norm()});
  const double gap = (c - src.centroid).norm() - 0.5 * src.diameter;
  if (depth > 0 && gap < diam * kTieMargin)
  {
    const Vec3 ab = 0.5 * (v[0] + v[1]), bc = 0.5 * (v[1] + v[2]), ca = 0.5 * (v[2] + v[0]);
    NearOuterRule({v[0], ab, ca}, src, depth - 1, rule, pts, w);
    NearOuterRule({ab, v[1], bc}, src, depth - 1, rule, pts, w);
    NearOuterRule({ca, bc, v[2]}, src, depth - 1, rule, pts, w);
    NearOuterRule({ab, bc, ca}, src, depth - 1, rule, pts, w);
    return;
  }
  const double area = 0.5 * (v[1] - v[0]).cross(v[2] - v[0]).norm();
  for (int k = 0; k < rule.Size(); k++)
  {
    const auto &b = rule.bary[k];
    pts.push_back(b[0] * v[0] + b[1] * v[1] + b[2] * v[2]);
    w.push_back(rule.weight[k] * area);
  }
}

// Local 3x3 blocks of one triangle pair, rows by test free vertex, columns by
// source free vertex, without the l/(2A) factors.
void PairBlocks(const TriGeom &T, const TriGeom &S, cplx k, bool near, int subdivision,
                const TriangleRule &near_rule, Eigen::Matrix3cd &locL, Eigen::Matrix3cd &locK)
{
  thread_local std::vector<Vec3> sub_pts;
  thread_local std::vector<double> sub_w;
  const std::vector<Vec3> *pts = &T.far_pts;
  const std::vector<double> *wts = &T.far_w;
  if (near)
  {
    sub_pts.clear();
    sub_w.clear();
    NearOuterRule(T.v, S, subdivision, near_rule, sub_pts, sub_w);
    pts = &sub_pts;
    wts = &sub_w;
  }
  const cplx inv_k2 = 4.0 / (k * k);
  locL.setZero();
  locK.setZero();
  for (std::size_t a = 0; a < pts->size(); a++)
  {
    const Vec3 &r = (*pts)[a];
    const Potentials P = SourcePotentials(r, S, k, near);
    for (int i = 0; i < 3; i++)
    {
      const CVec3 ri = (r - T.v[i]).cast<cplx>();
      for (int j = 0; j < 3; j++)
      {
        const CVec3 qj = S.v[j].cast<cplx>();
        locL(i, j) += (*wts)[a] * (ri.dot(P.Sv - qj * P.S) - inv_k2 * P.S);
        locK(i, j) += (*wts)[a] * ri.dot(Cross(P.V, r - S.v[j]));
      }
    }
  }
}

// Greedy colouring so that triangles of one colour share no basis function;
// rows of the result are then written by one triangle at a time per colour.
std::vector<std::vector<int>> ColourTriangles(const std::vector<int> &tris,
                                              const std::vector<std::vector<TriangleBasis>> &inc,
                                              int nbasis)
{
  std::vector<std::vector<int>> basis_colours(nbasis);
  std::vector<std::vector<int>> colours;
  for (int i = 0; i < static_cast<int>(tris.size()); i++)
  {
    int c = 0;
    for (;; c++)
    {
      bool used = false;
      for (const auto &fb : inc[tris[i]])
      {
        const auto &bc = basis_colours[fb.basis];
        used = used || std::find(bc.begin(), bc.end(), c) != bc.end();
      }
      if (!used)
      {
        break;
      }
    }
    if (c >= static_cast<int>(colours.size()))
    {
      colours.resize(c + 1);
    }
    colours[c].push_back(i);
    for (const auto &fb : inc[tris[i]])
    {
      basis_colours[fb.basis].push_back(c);
    }
  }
  return colours;
}

}  // namespace

OperatorBlocks AssembleOperators(const BasisSurface &test, const BasisSurface &src,
                                 const Vec3 &shift, cplx k, const QuadratureOptions &q)
{
  const int nt = test.Size();
  const int ns = src.Size();
  OperatorBlocks out;
  out.L = Eigen::MatrixXcd::Zero(nt, ns);
  out.K = Eigen::MatrixXcd::Zero(nt, ns);
  out.C = Eigen::MatrixXcd::Zero(nt, ns);

  const auto test_inc = TriangleIncidence(*test.mesh, test.rwgs);
  const auto src_inc = TriangleIncidence(*src.mesh, src.rwgs);
  std::vector<int> test_tris, src_tris;
  for (int t : test.Triangles())
  {
    if (!test_inc[t].empty())
    {
      test_tris.push_back(t);
    }
  }
  for (int s : src.Triangles())
  {
    if (!src_inc[s].empty())
    {
      src_tris.push_back(s);
    }
  }
  std::vector<TriGeom> tg(test_tris.size()), sg(src_tris.size());
  for (std::size_t i = 0; i < test_tris.size(); i++)
  {
    tg[i] = MakeGeom(*test.mesh, test_tris[i], Vec3::Zero(), q);
  }
  for (std::size_t i = 0; i < src_tris.size(); i++)
  {
    sg[i] = MakeGeom(*src.mesh, src_tris[i], shift, q);
  }
  std::map<int, std::vector<int>> coincident;  // test triangle -> source triangles
  for (const auto &[t, s] : CoincidentTriangles(test, src, shift))
  {
    coincident[t].push_back(s);
  }
  std::vector<int> src_pos(src.mesh->NumTriangles(), -1);
  for (std::size_t i = 0; i < src_tris.size(); i++)
  {
    src_pos[src_tris[i]] = static_cast<int>(i);
  }

  const auto colours = ColourTriangles(test_tris, test_inc, nt);
  const TriangleRule &near_rule = TriangleQuadrature(q.near_points);

  for (const auto &colour : colours)
  {
#pragma omp parallel
    {
      Eigen::MatrixXcd accL(3, ns), accK(3, ns), accC(3, ns);
#pragma omp for schedule(dynamic, 4)
      for (int ci = 0; ci < static_cast<int>(colour.size()); ci++)
      {
        const int ti = colour[ci];
        const int t = test_tris[ti];
        const TriGeom &T = tg[ti];
        accL.setZero();
        accK.setZero();
        accC.setZero();
        for (std::size_t si = 0; si < src_tris.size(); si++)
        {
          const TriGeom &S = sg[si];
          const bool near = (T.centroid - S.centroid).norm() <
                            q.near_factor * std::max(T.diameter, S.diameter) * kTieMargin;
          Eigen::Matrix3cd locL, locK;
          PairBlocks(T, S, k, near, q.near_subdivision, near_rule, locL, locK);
          if (near)
          {
            // Average with the pair integrated the other way round so that the
            // singular treatment does not break the Galerkin symmetry.
            Eigen::Matrix3cd swapL, swapK;
            PairBlocks(S, T, k, near, q.near_subdivision, near_rule, swapL, swapK);
            locL = 0.5 * (locL + swapL.transpose());
            locK = 0.5 * (locK + swapK.transpose());
          }
          const int s = src_tris[si];
          for (const auto &fb : src_inc[s])
          {
            const double fac = fb.sign * src.rwgs[fb.basis].length / (2.0 * S.area);
            for (int i = 0; i < 3; i++)
            {
              accL(i, fb.basis) += fac * locL(i, fb.local_vertex);
              accK(i, fb.basis) += fac * locK(i, fb.local_vertex);
            }
          }
        }
        if (auto it = coincident.find(t); it != coincident.end())
        {
          const auto &rule = TriangleQuadrature(6);
          for (int s : it->second)
          {
            if (src_pos[s] < 0)
            {
              continue;
            }
            const TriGeom &S = sg[src_pos[s]];
            const Vec3 n = test.normal_sign[t] * test.mesh->Normal(t);
            Eigen::Matrix3d locC = Eigen::Matrix3d::Zero();
            for (int a = 0; a < rule.Size(); a++)
            {
              const auto &b = rule.bary[a];
              const Vec3 r = b[0] * T.v[0] + b[1] * T.v[1] + b[2] * T.v[2];
              for (int i = 0; i < 3; i++)
              {
                for (int jv = 0; jv < 3; jv++)
                {
                  locC(i, jv) += rule.weight[a] * T.area * (r - T.v[i]).dot(n.cross(r - S.v[jv]));
                }
              }
            }
            for (const auto &fb : src_inc[s])
            {
              const double fac = fb.sign * src.rwgs[fb.basis].length / (2.0 * S.area);
              for (int i = 0; i < 3; i++)
              {
                accC(i, fb.basis) += fac * locC(i, fb.local_vertex);
              }
            }
          }
        }
        for (const auto &fa : test_inc[t])
        {
          const double fac = fa.sign * test.rwgs[fa.basis].length / (2.0 * T.area);
          out.L.row(fa.basis) += fac * accL.row(fa.local_vertex);
          out.K.row(fa.basis) += fac * accK.row(fa.local_vertex);
          out.C.row(fa.basis) += fac * accC.row(fa.local_vertex);
        }
      }
    }
  }
  return out;
}

Eigen::MatrixXcd ComposeBlock(const OperatorBlocks &ops, const std::vector<int> &j_test,
                              const std::vector<int> &m_test, const std::vector<int> &j_src,
                              const std::vector<int> &m_src, double k0, cplx eps_r)
{
  const int nj = static_cast<int>(j_test.size()), nm = static_cast<int>(m_test.size());
  const int cj = static_cast<int>(j_src.size()), cm = static_cast<int>(m_src.size());
  Eigen::MatrixXcd Z(nj + nm, cj + cm);
  const cplx jk0 = j_unit * k0;
  for (int a = 0; a < nj; a++)
  {
    for (int b = 0; b < cj; b++)
    {
      Z(a, b) = -jk0 * ops.L(j_test[a], j_src[b]);
    }
    for (int b = 0; b < cm; b++)
    {
      Z(a, cj + b) = -(ops.K(j_test[a], m_src[b]) + 0.5 * ops.C(j_test[a], m_src[b]));
    }
  }
  for (int a = 0; a < nm; a++)
  {
    for (int b = 0; b < cj; b++)
    {
      Z(nj + a, b) = ops.K(m_test[a], j_src[b]) + 0.5 * ops.C(m_test[a], j_src[b]);
    }
    for (int b = 0; b < cm; b++)
    {
      Z(nj + a, cj + b) = -jk0 * eps_r * ops.L(m_test[a], m_src[b]);
    }
  }
  return Z;
}

TrianglePotentials TriangleFieldPotentials(cplx k, const Vec3 &r, const Vec3 &a, const Vec3 &b,
                                           const Vec3 &c, int points)
{
  const TriangleRule &rule = TriangleQuadrature(points);
  const double area = 0.5 * (b - a).cross(c - a).norm();
  TrianglePotentials p;
  for (int q = 0; q < rule.Size(); q++)
  {
    const auto &w = rule.bary[q];
    const Vec3 rp = w[0] * a + w[1] * b + w[2] * c;
    const Vec3 d = r - rp;
    const double R = d.norm();
    const double wa = rule.weight[q] * area;
    const cplx g = GreenSmooth(k, R) * wa;
    p.s += g;
    p.sv += g * rp.cast<cplx>();
    p.v += (GreenGradFactorSmooth(k, R) * wa) * d.cast<cplx>();
  }
  // int r'/R = i_rho + r i1; int (r - r')/R^3 = -grad i1; int (r - r')/R = -i_rho.
  const StaticIntegrals st = TriangleStaticIntegrals(r, a, b, c);
  p.s += kInv4Pi * st.i1;
  p.sv += (kInv4Pi * (st.i_rho + r * st.i1)).cast<cplx>();
  p.v += (kInv4Pi * st.grad_i1).cast<cplx>() + (k * k / (8.0 * pi)) * st.i_rho.cast<cplx>();
  return p;
}

}  // namespace macrosurf
