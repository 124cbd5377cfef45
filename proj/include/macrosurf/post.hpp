// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_POST_HPP
#define MACROSURF_POST_HPP

#include <memory>
#include <string>
#include <vector>
#include "macrosurf/array.hpp"

namespace macrosurf
{

// Radiating currents on one mesh displaced by `shift`: electric coefficients
// j (A/m) and normalised magnetic coefficients m (M/eta0), one per rwg.
struct CurrentSet
{
  std::shared_ptr<const TriMesh> mesh;
  std::vector<Rwg> rwgs;
  Eigen::VectorXcd j, m;
  Vec3 shift = Vec3::Zero();
};

// Per-cell equivalent currents of a merged solution vector.
std::vector<CurrentSet> ExpandArrayCurrents(const ArraySystem &system,
                                            const Eigen::VectorXcd &merged);

// Far field E(r) r exp(jkr) in direction `dir` (unit), phase referenced to the
// origin:  E = -j k eta0/(4 pi) [N_t - dir x L], N and L the radiation
// integrals of j and m.
CVec3 FarField(const std::vector<CurrentSet> &sets, double frequency, const Vec3 &dir);

Vec3 SphericalDirection(double theta, double phi);
Vec3 ThetaHat(double theta, double phi);
Vec3 PhiHat(double theta, double phi);

// Gauss-Legendre in theta times uniform in phi: (L+1) x 2(L+1) directions.
struct SphereGrid
{
  std::vector<double> theta, phi;  // radians
  std::vector<double> weight;      // per direction, sum 4 pi
  int Size() const { return static_cast<int>(theta.size()); }
};

SphereGrid MakeSphereGrid(int order);
// Order resolving currents within `radius` of the origin.
int SphereGridOrder(double frequency, double radius);

// Radiated power per unit r^2 eta0-normalised intensity:
// U = (|E_theta|^2 + |E_phi|^2) / (2 eta0).
double Intensity(const CVec3 &e);

// D = 4 pi U / P_rad over the grid; throws Error if the power is zero.
std::vector<double> Directivity(const SphereGrid &grid, const std::vector<double> &intensity,
                                double *radiated_power = nullptr);

struct FarFieldCut
{
  double phi_deg = 0.0;
  std::vector<double> theta_deg;
  std::vector<cplx> e_theta, e_phi;
  std::vector<double> d_dbi;
};

// Cut at fixed phi with directivity normalised by `radiated_power`.
FarFieldCut ComputeCut(const std::vector<CurrentSet> &sets, double frequency, double phi_deg,
                       const std::vector<double> &theta_deg, double radiated_power);

std::string CutCsv(const FarFieldCut &cut);

// Fields of the currents at a point, full kernel. Throws ProximityError if
// the point is within `min_distance` of any source triangle.
void NearField(const std::vector<CurrentSet> &sets, double frequency, const Vec3 &point,
               double min_distance, CVec3 &E, CVec3 &H);

// Distance from a point to a triangle.
double PointTriangleDistance(const Vec3 &p, const Vec3 &a, const Vec3 &b, const Vec3 &c);

}  // namespace macrosurf

#endif  // MACROSURF_POST_HPP
