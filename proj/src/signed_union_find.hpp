// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_SIGNED_UNION_FIND_HPP
#define MACROSURF_SIGNED_UNION_FIND_HPP

#include <numeric>
#include <utility>
#include <vector>

namespace macrosurf
{

// Union-find over coefficients with a relative sign: c_x = parity * c_root.
class SignedUnionFind
{
 public:
  explicit SignedUnionFind(int n) : parent_(n), parity_(n, 1.0)
  {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  std::pair<int, double> Find(int x)
  {
    double p = 1.0;
    int r = x;
    while (parent_[r] != r)
    {
      p *= parity_[r];
      r = parent_[r];
    }
    // Path compression.
    double q = p;
    while (parent_[x] != r)
    {
      const int next = parent_[x];
      const double px = parity_[x];
      parent_[x] = r;
      parity_[x] = q;
      q *= px;
      x = next;
    }
    return {r, p};
  }

  // Impose c_b = s c_a. Returns false on a sign conflict.
  bool Union(int a, int b, double s)
  {
    const auto [ra, pa] = Find(a);
    const auto [rb, pb] = Find(b);
    if (ra == rb)
    {
      return pa * s * pb == 1.0;
    }
    parent_[rb] = ra;
    parity_[rb] = pb * s * pa;
    return true;
  }

 private:
  std::vector<int> parent_;
  std::vector<double> parity_;
};

}  // namespace macrosurf

#endif  // MACROSURF_SIGNED_UNION_FIND_HPP
