// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_CONSTANTS_HPP
#define MACROSURF_CONSTANTS_HPP

#include <complex>
#include <numbers>

namespace macrosurf
{

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx j_unit{0.0, 1.0};

// SI constant set; eta0 is pinned and the others derived from it so the
// identities eta0 = sqrt(mu0/eps0) and c0 = 1/sqrt(mu0 eps0) hold exactly.
inline constexpr double c0 = 299792458.0;
inline constexpr double eta0 = 376.730313668;
inline constexpr double mu0 = eta0 / c0;
inline constexpr double eps0 = 1.0 / (eta0 * c0);

// Absolute tolerance for geometric coincidence tests, in meters.
inline constexpr double geometric_tolerance = 1e-9;

inline double FreeSpaceWavenumber(double frequency_hz)
{
  return 2.0 * pi * frequency_hz / c0;
}

inline double FreeSpaceWavelength(double frequency_hz)
{
  return c0 / frequency_hz;
}

}  // namespace macrosurf

#endif  // MACROSURF_CONSTANTS_HPP
