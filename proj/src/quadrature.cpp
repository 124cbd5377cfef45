// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include "macrosurf/quadrature.hpp"

#include <cmath>
#include <string>
#include "macrosurf/constants.hpp"
#include "macrosurf/error.hpp"

namespace macrosurf
{

namespace
{

// Orbit generators for fully symmetric rules.
void Centroid(TriangleRule &r, double w)
{
  r.bary.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  r.weight.push_back(w);
}

void Orbit3(TriangleRule &r, double a, double w)
{
  const double b = 1.0 - 2.0 * a;
  r.bary.push_back({a, a, b});
  r.bary.push_back({a, b, a});
  r.bary.push_back({b, a, a});
  r.weight.insert(r.weight.end(), 3, w);
}

void Orbit6(TriangleRule &r, double a, double b, double w)
{
  const double c = 1.0 - a - b;
  r.bary.push_back({a, b, c});
  r.bary.push_back({a, c, b});
  r.bary.push_back({b, a, c});
  r.bary.push_back({b, c, a});
  r.bary.push_back({c, a, b});
  r.bary.push_back({c, b, a});
  r.weight.insert(r.weight.end(), 6, w);
}

TriangleRule Make(int points)
{
  TriangleRule r;
  switch (points)
  {
    case 1:
      r.degree = 1;
      Centroid(r, 1.0);
      break;
    case 3:
      r.degree = 2;
      Orbit3(r, 1.0 / 6.0, 1.0 / 3.0);
      break;
    case 6:
      r.degree = 4;
      Orbit3(r, 0.445948490915965, 0.223381589678011);
      Orbit3(r, 0.091576213509771, 0.109951743655322);
      break;
    case 7:
      r.degree = 5;
      Centroid(r, 0.225);
      Orbit3(r, 0.470142064105115, 0.132394152788506);
      Orbit3(r, 0.101286507323456, 0.125939180544827);
      break;
    case 12:
      r.degree = 6;
      Orbit3(r, 0.249286745170910, 0.116786275726379);
      Orbit3(r, 0.063089014491502, 0.050844906370207);
      Orbit6(r, 0.053145049844817, 0.310352451033784, 0.082851075618374);
      break;
    case 16:
      r.degree = 8;
      Centroid(r, 0.144315607677787);
      Orbit3(r, 0.459292588292723, 0.095091634267285);
      Orbit3(r, 0.170569307751760, 0.103217370534718);
      Orbit3(r, 0.050547228317031, 0.032458497623198);
      Orbit6(r, 0.008394777409958, 0.263112829634638, 0.027230314174435);
      break;
    default:
      throw Error("no triangle quadrature rule with " + std::to_string(points) + " points");
  }
  return r;
}

}  // namespace

const TriangleRule &TriangleQuadrature(int points)
{
  static const TriangleRule r1 = Make(1), r3 = Make(3), r6 = Make(6), r7 = Make(7),
                            r12 = Make(12), r16 = Make(16);
  switch (points)
  {
    case 1:
      return r1;
    case 3:
      return r3;
    case 6:
      return r6;
    case 7:
      return r7;
    case 12:
      return r12;
    case 16:
      return r16;
    default:
      throw Error("no triangle quadrature rule with " + std::to_string(points) + " points");
  }
}

GaussLegendreRule GaussLegendre(int n)
{
  if (n < 1)
  {
    throw Error("Gauss-Legendre rule needs at least one node");
  }
  GaussLegendreRule r;
  r.node.resize(n);
  r.weight.resize(n);
  for (int i = 0; i < (n + 1) / 2; i++)
  {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; it++)
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; k++)
      {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1)
      {
        p0 = 1.0;
        p1 = x;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
      {
        break;
      }
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; k++)
    {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    r.node[i] = -x;
    r.node[n - 1 - i] = x;
    r.weight[i] = r.weight[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

}  // namespace macrosurf
