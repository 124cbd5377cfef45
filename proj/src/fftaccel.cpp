// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include "macrosurf/fftaccel.hpp"

#include <cstring>
#include <mutex>
#include <fftw3.h>
#include "macrosurf/error.hpp"

namespace macrosurf
{

int NextSmoothLength(int n)
{
  for (int m = std::max(n, 1);; m++)
  {
    int r = m;
    for (int p : {2, 3, 5})
    {
      while (r % p == 0)
      {
        r /= p;
      }
    }
    if (r == 1)
    {
      return m;
    }
  }
}

namespace
{

// FFTW planning is not thread-safe; execution on new arrays is.
std::mutex &PlannerMutex()
{
  static std::mutex m;
  return m;
}

fftw_complex *Fftw(cplx *p) { return reinterpret_cast<fftw_complex *>(p); }

}  // namespace

BlockToeplitzOperator::BlockToeplitzOperator(int mx, int my,
                                             const std::vector<Eigen::MatrixXcd> &blocks)
  : mx_(mx), my_(my)
{
  if (mx < 1 || my < 1)
  {
    throw DimensionError("lattice dimensions must be positive");
  }
  const std::size_t count = static_cast<std::size_t>(2 * mx - 1) * (2 * my - 1);
  if (blocks.size() != count)
  {
    throw DimensionError("block-Toeplitz operator needs " + std::to_string(count) +
                         " offset blocks, got " + std::to_string(blocks.size()));
  }
  n_ = static_cast<int>(blocks[0].rows());
  for (std::size_t s = 0; s < count; s++)
  {
    if (blocks[s].rows() != n_ || blocks[s].cols() != n_)
    {
      throw DimensionError("offset block " + std::to_string(s) + " is missing or not " +
                           std::to_string(n_) + " x " + std::to_string(n_));
    }
  }
  lx_ = mx > 1 ? NextSmoothLength(2 * mx - 1) : 1;
  ly_ = my > 1 ? NextSmoothLength(2 * my - 1) : 1;

  hash_ = 1469598103934665603ull;
  for (const auto &b : blocks)
  {
    const auto *bytes = reinterpret_cast<const unsigned char *>(b.data());
    for (std::size_t i = 0; i < sizeof(cplx) * b.size(); i++)
    {
      hash_ = (hash_ ^ bytes[i]) * 1099511628211ull;
    }
  }

  {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    std::vector<cplx> scratch(L());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_plan_ = fftw_plan_dft_2d(ly_, lx_, Fftw(scratch.data()), Fftw(scratch.data()),
                                     FFTW_FORWARD, flags);
    inverse_plan_ = fftw_plan_dft_2d(ly_, lx_, Fftw(scratch.data()), Fftw(scratch.data()),
                                     FFTW_BACKWARD, flags);
  }

  const int l = L();
  spectra_.assign(static_cast<std::size_t>(n_) * n_ * l, cplx(0.0));
#pragma omp parallel for schedule(static)
  for (int rc = 0; rc < n_ * n_; rc++)
  {
    const int r = rc / n_, c = rc % n_;
    cplx *seq = spectra_.data() + static_cast<std::size_t>(rc) * l;
    for (int dy = -(my - 1); dy <= my - 1; dy++)
    {
      for (int dx = -(mx - 1); dx <= mx - 1; dx++)
      {
        const int kx = (dx + lx_) % lx_, ky = (dy + ly_) % ly_;
        const int slot = (dx + mx - 1) + (2 * mx - 1) * (dy + my - 1);
        seq[ky * lx_ + kx] = blocks[slot](r, c);
      }
    }
    fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), Fftw(seq), Fftw(seq));
  }
}

BlockToeplitzOperator::~BlockToeplitzOperator()
{
  std::lock_guard<std::mutex> lock(PlannerMutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

std::size_t BlockToeplitzOperator::StorageBound() const
{
  return (std::size_t{1} << (Dimension() + 1)) * n_ * n_ * NumCells();
}

void BlockToeplitzOperator::Forward(cplx *data) const
{
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), Fftw(data), Fftw(data));
  forward_count_++;
}

void BlockToeplitzOperator::Inverse(cplx *data) const
{
  fftw_execute_dft(static_cast<fftw_plan>(inverse_plan_), Fftw(data), Fftw(data));
  inverse_count_++;
}

Eigen::VectorXcd BlockToeplitzOperator::Apply(const Eigen::VectorXcd &x) const
{
  if (x.size() != Size())
  {
    throw DimensionError("block-Toeplitz apply: vector length " + std::to_string(x.size()) +
                         ", expected " + std::to_string(Size()));
  }
  const int l = L();
  const int cells = NumCells();
  std::vector<cplx> xs(static_cast<std::size_t>(n_) * l, cplx(0.0));
#pragma omp parallel for schedule(static)
  for (int c = 0; c < n_; c++)
  {
    cplx *seq = xs.data() + static_cast<std::size_t>(c) * l;
    for (int m = 0; m < cells; m++)
    {
      seq[(m / mx_) * lx_ + m % mx_] = x(static_cast<Eigen::Index>(m) * n_ + c);
    }
    Forward(seq);
  }

  Eigen::VectorXcd y(Size());
  const double scale = 1.0 / l;
#pragma omp parallel
  {
    std::vector<cplx> acc(l);
#pragma omp for schedule(static)
    for (int r = 0; r < n_; r++)
    {
      std::fill(acc.begin(), acc.end(), cplx(0.0));
      const cplx *row = spectra_.data() + static_cast<std::size_t>(r) * n_ * l;
      for (int c = 0; c < n_; c++)
      {
        const cplx *s = row + static_cast<std::size_t>(c) * l;
        const cplx *xc = xs.data() + static_cast<std::size_t>(c) * l;
        for (int k = 0; k < l; k++)
        {
          acc[k] += s[k] * xc[k];
        }
      }
      Inverse(acc.data());
      for (int m = 0; m < cells; m++)
      {
        y(static_cast<Eigen::Index>(m) * n_ + r) = scale * acc[(m / mx_) * lx_ + m % mx_];
      }
    }
  }
  return y;
}

Eigen::MatrixXcd BlockToeplitzOperator::Densify(int cap) const
{
  if (Size() > cap)
  {
    throw DimensionError("densify: operator size " + std::to_string(Size()) +
                         " exceeds cap " + std::to_string(cap));
  }
  const int l = L();
  // Generator sequences recovered from the spectra.
  std::vector<cplx> gen(spectra_);
  for (int rc = 0; rc < n_ * n_; rc++)
  {
    fftw_execute_dft(static_cast<fftw_plan>(inverse_plan_),
                     Fftw(gen.data() + static_cast<std::size_t>(rc) * l),
                     Fftw(gen.data() + static_cast<std::size_t>(rc) * l));
  }
  const int cells = NumCells();
  Eigen::MatrixXcd dense(Size(), Size());
  for (int mt = 0; mt < cells; mt++)
  {
    for (int ms = 0; ms < cells; ms++)
    {
      const int dx = mt % mx_ - ms % mx_, dy = mt / mx_ - ms / mx_;
      const int k = ((dy + ly_) % ly_) * lx_ + (dx + lx_) % lx_;
      for (int r = 0; r < n_; r++)
      {
        for (int c = 0; c < n_; c++)
        {
          dense(static_cast<Eigen::Index>(mt) * n_ + r, static_cast<Eigen::Index>(ms) * n_ + c) =
              gen[static_cast<std::size_t>(r * n_ + c) * l + k] / static_cast<double>(l);
        }
      }
    }
  }
  return dense;
}

}  // namespace macrosurf
