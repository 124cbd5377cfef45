// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

// Slow reference integrators used as test oracles. They only rely on
// tensor-product Gauss-Legendre rules (built here by bisection on the Legendre
// recurrence) and the Duffy transform, never on library kernels.

#ifndef MACROSURF_TESTS_BRUTE_FORCE_HPP
#define MACROSURF_TESTS_BRUTE_FORCE_HPP

#include <cmath>
#include <type_traits>
#include <vector>
#include <Eigen/Core>
#include <Eigen/Geometry>

namespace oracle
{

using V3 = Eigen::Vector3d;

template <typename T>
T Zero()
{
  if constexpr (std::is_arithmetic_v<T>)
  {
    return T(0);
  }
  else if constexpr (requires { T::Zero(); })
  {
    return T::Zero();
  }
  else
  {
    return T(0);
  }
}

struct Rule1d
{
  std::vector<double> x, w;  // on [0, 1]
};

inline Rule1d GaussOnUnit(int n)
{
  Rule1d r;
  auto legendre = [n](double x, double &dp)
  {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; k++)
    {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    return p1;
  };
  // Bruns' bounds bracket the k-th root in angle: (k - 1/2) pi / (n + 1/2) <
  // theta_k < k pi / (n + 1/2). Bisection inside each bracket.
  for (int k = 1; k <= n; k++)
  {
    double lo = std::cos(k * M_PI / (n + 0.5));
    double hi = std::cos((k - 0.5) * M_PI / (n + 0.5));
    double dp = 0.0;
    double flo = legendre(lo, dp);
    for (int it = 0; it < 200; it++)
    {
      const double mid = 0.5 * (lo + hi);
      const double fm = legendre(mid, dp);
      if ((fm < 0) == (flo < 0))
      {
        lo = mid;
        flo = fm;
      }
      else
      {
        hi = mid;
      }
    }
    const double x = 0.5 * (lo + hi);
    legendre(x, dp);
    r.x.push_back(0.5 * (x + 1.0));
    r.w.push_back(1.0 / ((1.0 - x * x) * dp * dp));
  }
  return r;
}

// Integral over triangle (a, b, c) of g(r'), with the integrand allowed to be
// weakly singular at the projection of `apex` onto the triangle plane. The
// triangle is split into three sub-triangles meeting at that projection and
// each is mapped with a Duffy transform.
template <typename T, typename F>
T DuffyIntegral(const V3 &apex, const V3 &a, const V3 &b, const V3 &c, F g, int order)
{
  const V3 n = (b - a).cross(c - a).normalized();
  const V3 p = apex - n * n.dot(apex - a);
  const Rule1d r = GaussOnUnit(order);
  T sum = Zero<T>();
  const V3 v[3] = {a, b, c};
  for (int e = 0; e < 3; e++)
  {
    const V3 &q0 = v[e];
    const V3 &q1 = v[(e + 1) % 3];
    // Signed area so that sub-triangles outside the triangle cancel.
    const double jac2 = (q0 - p).cross(q1 - p).dot(n);
    if (std::abs(jac2) < 1e-300)
    {
      continue;
    }
    for (std::size_t i = 0; i < r.x.size(); i++)
    {
      for (std::size_t j = 0; j < r.x.size(); j++)
      {
        const double u = r.x[i], s = r.x[j];
        const V3 x = p + u * ((q0 - p) + s * (q1 - q0));
        sum += g(x) * (r.w[i] * r.w[j] * u * jac2);
      }
    }
  }
  return sum;
}

// Plain product rule on a triangle refined `levels` times by midpoint
// subdivision, with a Duffy-mapped rule on every sub-triangle.
template <typename T, typename F>
T RefinedIntegral(const V3 &a, const V3 &b, const V3 &c, F g, int levels, int order)
{
  if (levels == 0)
  {
    const V3 centre = (a + b + c) / 3.0;
    return DuffyIntegral<T>(centre, a, b, c, g, order);
  }
  const V3 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
  return RefinedIntegral<T>(a, ab, ca, g, levels - 1, order) +
         RefinedIntegral<T>(ab, b, bc, g, levels - 1, order) +
         RefinedIntegral<T>(ca, bc, c, g, levels - 1, order) +
         RefinedIntegral<T>(ab, bc, ca, g, levels - 1, order);
}

}  // namespace oracle

#endif  // MACROSURF_TESTS_BRUTE_FORCE_HPP
