// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include "macrosurf/excitation.hpp"

#include "macrosurf/error.hpp"
#include "macrosurf/quadrature.hpp"

namespace macrosurf
{

Excitation Excitation::PlaneWave(const Vec3 &direction, const Vec3 &polarization, cplx amplitude)
{
  Excitation e;
  e.kind = Kind::PlaneWave;
  e.direction = direction;
  e.polarization = polarization;
  e.amplitude = amplitude;
  return e;
}

Excitation Excitation::Dipole(const Vec3 &position, const Vec3 &orientation, cplx moment)
{
  Excitation e;
  e.kind = Kind::Dipole;
  e.position = position;
  e.orientation = orientation;
  e.moment = moment;
  return e;
}

void ValidateExcitation(const Excitation &exc)
{
  auto unit = [](const Vec3 &v) { return std::abs(v.norm() - 1.0) < 1e-9; };
  if (exc.kind == Excitation::Kind::PlaneWave)
  {
    if (!unit(exc.direction) || !unit(exc.polarization))
    {
      throw ExcitationError("plane-wave direction and polarization must be unit vectors");
    }
    if (std::abs(exc.direction.dot(exc.polarization)) > 1e-9)
    {
      throw ExcitationError("plane-wave polarization must be transverse to the direction");
    }
  }
  else if (!unit(exc.orientation))
  {
    throw ExcitationError("dipole orientation must be a unit vector");
  }
}

void IncidentField(const Excitation &exc, double frequency, const Vec3 &r, CVec3 &E, CVec3 &H)
{
  const double k = FreeSpaceWavenumber(frequency);
  if (exc.kind == Excitation::Kind::PlaneWave)
  {
    const cplx phase = exc.amplitude * std::exp(-j_unit * k * exc.direction.dot(r));
    E = phase * exc.polarization.cast<cplx>();
    H = (phase / eta0) * exc.direction.cross(exc.polarization).cast<cplx>();
    return;
  }
  const Vec3 d = r - exc.position;
  const double R = d.norm();
  if (R == 0.0)
  {
    throw ExcitationError("field requested at the dipole position");
  }
  const Vec3 u = exc.orientation;
  const Vec3 rh = d / R;
  const double cu = u.dot(rh);
  const cplx jkR = j_unit * k * R;
  const cplx g = exc.moment * std::exp(-jkR) / (4.0 * pi);
  const cplx a = 1.0 + 1.0 / jkR;
  const cplx b = 1.0 + 1.0 / jkR - 1.0 / (k * R * k * R);
  E = eta0 * g *
      ((2.0 * cu / (R * R)) * a * rh.cast<cplx>() +
       (j_unit * k / R) * b * (cu * rh - u).cast<cplx>());
  H = g * (j_unit * k / R) * a * u.cross(rh).cast<cplx>();
}

namespace
{

template <bool Magnetic>
Eigen::VectorXcd TestField(const Excitation &exc, double frequency, const TriMesh &mesh,
                           const std::vector<Rwg> &rwgs, const std::vector<int> &which,
                           const Vec3 &shift)
{
  const TriangleRule &rule = TriangleQuadrature(12);
  Eigen::VectorXcd out(which.size());
  for (std::size_t i = 0; i < which.size(); i++)
  {
    const Rwg &f = rwgs[which[i]];
    cplx sum = 0.0;
    for (int h = 0; h < 2; h++)
    {
      const auto &v = mesh.Tri(f.tri[h]).v;
      const double area = mesh.Area(f.tri[h]);
      for (int q = 0; q < rule.Size(); q++)
      {
        const auto &w = rule.bary[q];
        const Vec3 r =
            w[0] * mesh.Vertex(v[0]) + w[1] * mesh.Vertex(v[1]) + w[2] * mesh.Vertex(v[2]);
        CVec3 E, H;
        IncidentField(exc, frequency, r + shift, E, H);
        const CVec3 fr = EvaluateRwg(mesh, f, h, r).cast<cplx>();
        sum += rule.weight[q] * area * fr.dot(Magnetic ? H : E);
      }
    }
    out(i) = sum;
  }
  return out;
}

}  // namespace

Eigen::VectorXcd TestElectric(const Excitation &exc, double frequency, const TriMesh &mesh,
                              const std::vector<Rwg> &rwgs, const std::vector<int> &which,
                              const Vec3 &shift)
{
  return TestField<false>(exc, frequency, mesh, rwgs, which, shift);
}

Eigen::VectorXcd TestMagnetic(const Excitation &exc, double frequency, const TriMesh &mesh,
                              const std::vector<Rwg> &rwgs, const std::vector<int> &which,
                              const Vec3 &shift)
{
  return TestField<true>(exc, frequency, mesh, rwgs, which, shift);
}

}  // namespace macrosurf
