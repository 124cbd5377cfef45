// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_KERNELS_HPP
#define MACROSURF_KERNELS_HPP

#include <utility>
#include <vector>
#include <Eigen/Core>
#include "macrosurf/rwg.hpp"

namespace macrosurf
{

// Homogeneous-medium Green's function exp(-jkR)/(4 pi R).
cplx Green(cplx k, double R);
// Radial factor f of grad G = f(R) (r - r').
cplx GreenGradFactor(cplx k, double R);
// Remainders after removing the static singular terms; finite at R = 0.
//   G - 1/(4 pi R)
//   f + 1/(4 pi R^3) + k^2/(8 pi R)
cplx GreenSmooth(cplx k, double R);
cplx GreenGradFactorSmooth(cplx k, double R);

struct QuadratureOptions
{
  int far_points = 6;
  int near_points = 12;
  // Pairs whose centroid distance is below near_factor times the larger
  // triangle diameter get singularity extraction.
  double near_factor = 2.0;
  // Maximum number of bisection levels of the test triangle for near pairs.
  int near_subdivision = 2;
};

// Bases on the triangles bounding one region. normal_sign[t] is +1 or -1 so
// that normal_sign[t] * mesh.Normal(t) points into the region, 0 for
// triangles not on the region boundary.
struct BasisSurface
{
  const TriMesh *mesh = nullptr;
  std::vector<Rwg> rwgs;
  std::vector<double> normal_sign;

  int Size() const { return static_cast<int>(rwgs.size()); }
  std::vector<int> Triangles() const;
};

BasisSurface MakeRegionSurface(const TriMesh &mesh, int region);

// Galerkin matrices between test and source bases, the source mesh being
// displaced by `shift`:
//   L(m,n) = int int G (f_m . f_n - div f_m div f_n / k^2)
//   K(m,n) = int int f_m . (grad G x f_n)        (principal value)
//   C(m,n) = int f_m . (n x f_n)                (coincident triangles only)
// where n is the test-side normal, i.e. the observation limit is taken from
// the region the test surface's normal_sign points into.
struct OperatorBlocks
{
  Eigen::MatrixXcd L;
  Eigen::MatrixXcd K;
  Eigen::MatrixXcd C;
};

OperatorBlocks AssembleOperators(const BasisSurface &test, const BasisSurface &src,
                                 const Vec3 &shift, cplx k, const QuadratureOptions &q = {});

// Pairs (test triangle, source triangle) occupying the same place.
std::vector<std::pair<int, int>> CoincidentTriangles(const BasisSurface &test,
                                                     const BasisSurface &src,
                                                     const Vec3 &shift);

// Scaled interaction block of one region, electric currents J and normalised
// magnetic currents M/eta0, EFIE rows for J tests and MFIE rows for M tests:
//   [ -j k0 L            -(K + C/2)       ]
//   [  K + C/2           -j k0 eps_r L    ]
// j_*/m_* select rows/columns from the test/source basis lists.
Eigen::MatrixXcd ComposeBlock(const OperatorBlocks &ops, const std::vector<int> &j_test,
                              const std::vector<int> &m_test, const std::vector<int> &j_src,
                              const std::vector<int> &m_src, double k0, cplx eps_r);

// Potential integrals of one flat triangle (a, b, c) seen from a point r off
// the triangle, static parts in closed form:
//   s  = int G dS'
//   sv = int G r' dS'
//   v  = int grad_r G dS' = int f(R) (r - r') dS'
struct TrianglePotentials
{
  cplx s = 0.0;
  CVec3 sv = CVec3::Zero();
  CVec3 v = CVec3::Zero();
};

TrianglePotentials TriangleFieldPotentials(cplx k, const Vec3 &r, const Vec3 &a, const Vec3 &b,
                                           const Vec3 &c, int points = 16);

}  // namespace macrosurf

#endif  // MACROSURF_KERNELS_HPP
