// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_EXCITATION_HPP
#define MACROSURF_EXCITATION_HPP

#include <Eigen/Core>
#include "macrosurf/rwg.hpp"

namespace macrosurf
{

struct Excitation
{
  enum class Kind
  {
    PlaneWave,
    Dipole
  };
  Kind kind = Kind::PlaneWave;
  // Plane wave E = amplitude * polarization * exp(-j k direction . r).
  Vec3 direction = -Vec3::UnitZ();
  Vec3 polarization = Vec3::UnitX();
  cplx amplitude = 1.0;  // V/m
  // Hertzian dipole of current moment I l (A m) along `orientation`.
  Vec3 position = Vec3::Zero();
  Vec3 orientation = Vec3::UnitZ();
  cplx moment = 1.0;

  static Excitation PlaneWave(const Vec3 &direction, const Vec3 &polarization,
                              cplx amplitude = 1.0);
  static Excitation Dipole(const Vec3 &position, const Vec3 &orientation, cplx moment = 1.0);
};

// Checks unit vectors and transversality; throws ExcitationError.
void ValidateExcitation(const Excitation &exc);

// Free-space incident fields at r, E in V/m and H in A/m.
void IncidentField(const Excitation &exc, double frequency, const Vec3 &r, CVec3 &E, CVec3 &H);

// Tested incident fields <f_n, E_inc> and <f_n, H_inc> on a basis list,
// mesh displaced by `shift`.
Eigen::VectorXcd TestElectric(const Excitation &exc, double frequency, const TriMesh &mesh,
                              const std::vector<Rwg> &rwgs, const std::vector<int> &which,
                              const Vec3 &shift);
Eigen::VectorXcd TestMagnetic(const Excitation &exc, double frequency, const TriMesh &mesh,
                              const std::vector<Rwg> &rwgs, const std::vector<int> &which,
                              const Vec3 &shift);

}  // namespace macrosurf

#endif  // MACROSURF_EXCITATION_HPP
