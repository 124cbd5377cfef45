// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_FFTACCEL_HPP
#define MACROSURF_FFTACCEL_HPP

#include <atomic>
#include <cstdint>
#include <vector>
#include <Eigen/Core>
#include "macrosurf/constants.hpp"

namespace macrosurf
{

// Smallest integer >= n whose only prime factors are 2, 3 and 5.
int NextSmoothLength(int n);

// Block-Toeplitz operator over an mx x my lattice with n x n blocks that
// depend only on the offset (dx, dy) = (ix_test - ix_src, iy_test - iy_src).
// Each local pair (r, c) carries one generator sequence embedded in a
// circulant of padded length Lx x Ly; only its spectrum is kept.
// Vectors are cell-major: entry m * n + i, m = iy * mx + ix.
class BlockToeplitzOperator
{
public:
  // `blocks` indexed as (dx + mx - 1) + (2 mx - 1) (dy + my - 1).
  BlockToeplitzOperator(int mx, int my, const std::vector<Eigen::MatrixXcd> &blocks);
  ~BlockToeplitzOperator();
  BlockToeplitzOperator(const BlockToeplitzOperator &) = delete;
  BlockToeplitzOperator &operator=(const BlockToeplitzOperator &) = delete;

  int Mx() const { return mx_; }
  int My() const { return my_; }
  int BlockSize() const { return n_; }
  int NumCells() const { return mx_ * my_; }
  int Size() const { return n_ * mx_ * my_; }
  int Lx() const { return lx_; }
  int Ly() const { return ly_; }
  int Dimension() const { return (mx_ > 1 && my_ > 1) ? 2 : 1; }
  std::uint64_t GeneratorHash() const { return hash_; }

  // Complex numbers held by the cached spectra.
  std::size_t StorageCount() const { return spectra_.size(); }
  // Bound 2^(d+1) n^2 M.
  std::size_t StorageBound() const;

  Eigen::VectorXcd Apply(const Eigen::VectorXcd &x) const;
  // Explicit matrix, rebuilt from the spectra; throws DimensionError above cap.
  Eigen::MatrixXcd Densify(int cap = 20000) const;

  // Transforms executed so far (one per local sequence and direction).
  long ForwardTransforms() const { return forward_count_; }
  long InverseTransforms() const { return inverse_count_; }

private:
  int mx_, my_, n_, lx_, ly_;
  std::uint64_t hash_ = 0;
  std::vector<cplx> spectra_;  // [(r * n + c) * L + k]
  void *forward_plan_ = nullptr;
  void *inverse_plan_ = nullptr;
  mutable std::atomic<long> forward_count_{0};
  mutable std::atomic<long> inverse_count_{0};

  int L() const { return lx_ * ly_; }
  void Forward(cplx *data) const;
  void Inverse(cplx *data) const;
};

}  // namespace macrosurf

#endif  // MACROSURF_FFTACCEL_HPP
