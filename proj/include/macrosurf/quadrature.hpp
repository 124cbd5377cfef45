// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_QUADRATURE_HPP
#define MACROSURF_QUADRATURE_HPP

#include <array>
#include <vector>

namespace macrosurf
{

// Symmetric rule on the reference triangle. Barycentric coordinates per point;
// weights sum to one, so integrals are area * sum(w f).
struct TriangleRule
{
  int degree = 0;
  std::vector<std::array<double, 3>> bary;
  std::vector<double> weight;

  int Size() const { return static_cast<int>(weight.size()); }
};

// Available sizes: 1, 3, 6, 7, 12, 16 points (degrees 1, 2, 4, 5, 6, 8).
const TriangleRule &TriangleQuadrature(int points);

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule
{
  std::vector<double> node;
  std::vector<double> weight;
};

GaussLegendreRule GaussLegendre(int n);

}  // namespace macrosurf

#endif  // MACROSURF_QUADRATURE_HPP
