// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include "macrosurf/post.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include "macrosurf/error.hpp"
#include "macrosurf/quadrature.hpp"

namespace macrosurf
{

namespace
{

// Cross product without Eigen's conjugation of complex operands.
CVec3 Cross(const CVec3 &a, const CVec3 &b)
{
  return {a.y() * b.z() - a.z() * b.y(), a.z() * b.x() - a.x() * b.z(),
          a.x() * b.y() - a.y() * b.x()};
}

CVec3 C(const Vec3 &v) { return v.cast<cplx>(); }

}  // namespace

std::vector<CurrentSet> ExpandArrayCurrents(const ArraySystem &system,
                                            const Eigen::VectorXcd &merged)
{
  if (merged.size() != system.NumUnknowns())
  {
    throw DimensionError("solution length " + std::to_string(merged.size()) + ", expected " +
                         std::to_string(system.NumUnknowns()));
  }
  const ExteriorBasis &eb = *system.basis;
  const int ne = eb.Size();
  const Eigen::VectorXcd stacked = system.overlap.Uo * merged;
  std::vector<CurrentSet> sets;
  for (int m = 0; m < system.layout.NumCells(); m++)
  {
    CurrentSet s;
    s.mesh = eb.mesh;
    s.rwgs = eb.surface.rwgs;
    s.j = Eigen::VectorXcd::Zero(eb.surface.Size());
    s.m = Eigen::VectorXcd::Zero(eb.surface.Size());
    for (std::size_t i = 0; i < eb.j_rwg.size(); i++)
    {
      s.j(eb.j_rwg[i]) = stacked(m * ne + eb.j_eq[i]);
    }
    for (std::size_t i = 0; i < eb.m_rwg.size(); i++)
    {
      s.m(eb.m_rwg[i]) = stacked(m * ne + eb.m_eq[i]);
    }
    s.shift = system.layout.CellCenter(m);
    sets.push_back(std::move(s));
  }
  return sets;
}

Vec3 SphericalDirection(double theta, double phi)
{
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

Vec3 ThetaHat(double theta, double phi)
{
  return {std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi), -std::sin(theta)};
}

Vec3 PhiHat(double /*theta*/, double phi) { return {-std::sin(phi), std::cos(phi), 0.0}; }

CVec3 FarField(const std::vector<CurrentSet> &sets, double frequency, const Vec3 &dir)
{
  const double k = FreeSpaceWavenumber(frequency);
  const TriangleRule &rule = TriangleQuadrature(12);
  CVec3 N = CVec3::Zero(), L = CVec3::Zero();
  for (const CurrentSet &s : sets)
  {
    const TriMesh &mesh = *s.mesh;
    for (std::size_t n = 0; n < s.rwgs.size(); n++)
    {
      const cplx cj = s.j(n), cm = s.m(n);
      if (cj == 0.0 && cm == 0.0)
      {
        continue;
      }
      const Rwg &f = s.rwgs[n];
      for (int h = 0; h < 2; h++)
      {
        const auto &v = mesh.Tri(f.tri[h]).v;
        const double area = mesh.Area(f.tri[h]);
        CVec3 acc = CVec3::Zero();
        for (int q = 0; q < rule.Size(); q++)
        {
          const auto &w = rule.bary[q];
          const Vec3 r =
              w[0] * mesh.Vertex(v[0]) + w[1] * mesh.Vertex(v[1]) + w[2] * mesh.Vertex(v[2]);
          const cplx phase = std::exp(j_unit * k * dir.dot(r + s.shift));
          acc += (rule.weight[q] * area * phase) * C(EvaluateRwg(mesh, f, h, r));
        }
        N += cj * acc;
        L += cm * acc;
      }
    }
  }
  const CVec3 d = C(dir);
  const CVec3 Nt = N - d * d.dot(N);
  return (-j_unit * k * eta0 / (4.0 * pi)) * (Nt - Cross(d, L));
}

SphereGrid MakeSphereGrid(int order)
{
  const int nt = order + 1, np = 2 * (order + 1);
  const GaussLegendreRule gl = GaussLegendre(nt);
  SphereGrid g;
  for (int i = 0; i < nt; i++)
  {
    const double theta = std::acos(gl.node[i]);
    for (int p = 0; p < np; p++)
    {
      g.theta.push_back(theta);
      g.phi.push_back(2.0 * pi * p / np);
      g.weight.push_back(gl.weight[i] * 2.0 * pi / np);
    }
  }
  return g;
}

int SphereGridOrder(double frequency, double radius)
{
  return static_cast<int>(std::ceil(2.0 * FreeSpaceWavenumber(frequency) * radius)) + 10;
}

double Intensity(const CVec3 &e) { return e.squaredNorm() / (2.0 * eta0); }

std::vector<double> Directivity(const SphereGrid &grid, const std::vector<double> &intensity,
                                double *radiated_power)
{
  if (static_cast<int>(intensity.size()) != grid.Size())
  {
    throw DimensionError("intensity samples do not match the sphere grid");
  }
  double p = 0.0;
  for (int i = 0; i < grid.Size(); i++)
  {
    p += grid.weight[i] * intensity[i];
  }
  if (!(p > 0.0))
  {
    throw Error("radiated power is zero; directivity undefined");
  }
  std::vector<double> d(intensity.size());
  for (std::size_t i = 0; i < d.size(); i++)
  {
    d[i] = 4.0 * pi * intensity[i] / p;
  }
  if (radiated_power)
  {
    *radiated_power = p;
  }
  return d;
}

FarFieldCut ComputeCut(const std::vector<CurrentSet> &sets, double frequency, double phi_deg,
                       const std::vector<double> &theta_deg, double radiated_power)
{
  FarFieldCut cut;
  cut.phi_deg = phi_deg;
  cut.theta_deg = theta_deg;
  const double phi = phi_deg * pi / 180.0;
  cut.e_theta.resize(theta_deg.size());
  cut.e_phi.resize(theta_deg.size());
  cut.d_dbi.resize(theta_deg.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < static_cast<int>(theta_deg.size()); i++)
  {
    const double theta = theta_deg[i] * pi / 180.0;
    const CVec3 e = FarField(sets, frequency, SphericalDirection(theta, phi));
    cut.e_theta[i] = C(ThetaHat(theta, phi)).dot(e);
    cut.e_phi[i] = C(PhiHat(theta, phi)).dot(e);
    cut.d_dbi[i] = 10.0 * std::log10(4.0 * pi * Intensity(e) / radiated_power);
  }
  return cut;
}

std::string CutCsv(const FarFieldCut &cut)
{
  std::ostringstream os;
  os << "theta_deg,E_theta_re,E_theta_im,E_phi_re,E_phi_im,D_dBi\n";
  char line[256];
  for (std::size_t i = 0; i < cut.theta_deg.size(); i++)
  {
    std::snprintf(line, sizeof line, "%.6g,%.10e,%.10e,%.10e,%.10e,%.6f\n", cut.theta_deg[i],
                  cut.e_theta[i].real(), cut.e_theta[i].imag(), cut.e_phi[i].real(),
                  cut.e_phi[i].imag(), cut.d_dbi[i]);
    os << line;
  }
  return os.str();
}

double PointTriangleDistance(const Vec3 &p, const Vec3 &a, const Vec3 &b, const Vec3 &c)
{
  // Closest point by Voronoi regions of the triangle.
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0)
  {
    return ap.norm();
  }
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3)
  {
    return bp.norm();
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0)
  {
    return (p - (a + d1 / (d1 - d3) * ab)).norm();
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6)
  {
    return cp.norm();
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0)
  {
    return (p - (a + d2 / (d2 - d6) * ac)).norm();
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
  {
    return (p - (b + (d4 - d3) / ((d4 - d3) + (d5 - d6)) * (c - b))).norm();
  }
  const double denom = 1.0 / (va + vb + vc);
  return (p - (a + ab * (vb * denom) + ac * (vc * denom))).norm();
}

void NearField(const std::vector<CurrentSet> &sets, double frequency, const Vec3 &point,
               double min_distance, CVec3 &E, CVec3 &H)
{
  const double k = FreeSpaceWavenumber(frequency);
  E = CVec3::Zero();
  H = CVec3::Zero();
  for (const CurrentSet &s : sets)
  {
    const TriMesh &mesh = *s.mesh;
    // Source coordinates are the mesh displaced by `shift`; work in the
    // mesh frame instead.
    const Vec3 r = point - s.shift;
    std::map<int, TrianglePotentials> cache;
    auto potentials = [&](int t) -> const TrianglePotentials &
    {
      auto it = cache.find(t);
      if (it != cache.end())
      {
        return it->second;
      }
      const auto &v = mesh.Tri(t).v;
      const Vec3 &a = mesh.Vertex(v[0]), &b = mesh.Vertex(v[1]), &c = mesh.Vertex(v[2]);
      const double d = PointTriangleDistance(r, a, b, c);
      if (d < min_distance)
      {
        throw ProximityError("probe point (" + std::to_string(point.x()) + ", " +
                             std::to_string(point.y()) + ", " + std::to_string(point.z()) +
                             ") is " + std::to_string(d) + " m from a source triangle");
      }
      return cache.emplace(t, TriangleFieldPotentials(k, r, a, b, c)).first->second;
    };
    for (std::size_t n = 0; n < s.rwgs.size(); n++)
    {
      const cplx cj = s.j(n), cm = s.m(n);
      if (cj == 0.0 && cm == 0.0)
      {
        continue;
      }
      const Rwg &f = s.rwgs[n];
      for (int h = 0; h < 2; h++)
      {
        const TrianglePotentials &p = potentials(f.tri[h]);
        const double scale = (h == 0 ? 1.0 : -1.0) * f.length / (2.0 * mesh.Area(f.tri[h]));
        const Vec3 &pv = mesh.Vertex(f.free[h]);
        // int G f = scale (sv - p s); int div f grad G = 2 scale v;
        // int grad G x f = scale v x (r - p).
        const CVec3 a = scale * (p.sv - C(pv) * p.s + (2.0 / (k * k)) * p.v);
        const CVec3 curl = scale * Cross(p.v, C(r - pv));
        E += (-j_unit * k * eta0 * cj) * a - (eta0 * cm) * curl;
        H += (-j_unit * k * cm) * a + cj * curl;
      }
    }
  }
}

}  // namespace macrosurf
