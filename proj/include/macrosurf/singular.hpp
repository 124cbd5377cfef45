// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_SINGULAR_HPP
#define MACROSURF_SINGULAR_HPP

#include "macrosurf/mesh.hpp"

namespace macrosurf
{

// Closed-form integrals of the static kernel over a flat triangle (a, b, c)
// for an observation point r, R = |r - r'|:
//   i1      = int 1/R dS'
//   i_rho   = int (r' - r)/R dS'
//   grad_i1 = grad_r int 1/R dS'
// For r in the plane of the triangle the normal part of grad_i1 is the
// principal value (zero).
struct StaticIntegrals
{
  double i1 = 0.0;
  Vec3 i_rho = Vec3::Zero();
  Vec3 grad_i1 = Vec3::Zero();
};

StaticIntegrals TriangleStaticIntegrals(const Vec3 &r, const Vec3 &a, const Vec3 &b,
                                        const Vec3 &c);

}  // namespace macrosurf

#endif  // MACROSURF_SINGULAR_HPP
