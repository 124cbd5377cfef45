// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include "macrosurf/singular.hpp"

#include <cmath>
#include <Eigen/Geometry>

namespace macrosurf
{

StaticIntegrals TriangleStaticIntegrals(const Vec3 &r, const Vec3 &a, const Vec3 &b,
                                        const Vec3 &c)
{
  const Vec3 nc = (b - a).cross(c - a);
  const Vec3 n = nc.normalized();
  const double scale = std::sqrt(nc.norm());
  const double tiny = 1e-12 * scale;

  const double d = n.dot(r - a);
  const double ad = std::abs(d);
  const double sd = ad <= tiny ? 0.0 : (d > 0.0 ? 1.0 : -1.0);

  const Vec3 verts[3] = {a, b, c};
  double i1_edge = 0.0;
  double omega = 0.0;
  Vec3 rho_part = Vec3::Zero();
  Vec3 grad_part = Vec3::Zero();
  for (int e = 0; e < 3; e++)
  {
    const Vec3 &p0 = verts[e];
    const Vec3 &p1 = verts[(e + 1) % 3];
    const Vec3 s = (p1 - p0).normalized();
    const Vec3 m = s.cross(n);  // outward in-plane edge normal
    const double lp = (p1 - r).dot(s);
    const double lm = (p0 - r).dot(s);
    const double t0 = (p0 - r).dot(m);
    const double rp = (p1 - r).norm();
    const double rm = (p0 - r).norm();
    const double r02 = t0 * t0 + d * d;

    double f = 0.0;
    if (std::sqrt(r02) > tiny)
    {
      // ln((R+ + l+)/(R- + l-)); the second form avoids cancellation when the
      // projected point lies behind the edge.
      if (rm + lm > rp - lp)
      {
        f = std::log((rp + lp) / (rm + lm));
      }
      else
      {
        f = std::log((rm - lm) / (rp - lp));
      }
    }
    double beta = 0.0;
    if (std::abs(t0) > tiny)
    {
      beta = std::atan(t0 * lp / (r02 + ad * rp)) - std::atan(t0 * lm / (r02 + ad * rm));
    }
    i1_edge += t0 * f;
    omega += beta;
    rho_part += 0.5 * m * (r02 * f + lp * rp - lm * rm);
    grad_part -= m * f;
  }

  StaticIntegrals out;
  out.i1 = i1_edge - ad * omega;
  out.i_rho = rho_part - d * n * out.i1;
  out.grad_i1 = grad_part - sd * n * omega;
  return out;
}

}  // namespace macrosurf
