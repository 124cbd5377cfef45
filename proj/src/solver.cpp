// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include "macrosurf/solver.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include "macrosurf/error.hpp"

namespace macrosurf
{

void GmresConfig::Validate() const
{
  if (!(tolerance > 0.0 && tolerance < 1.0))
  {
    throw ConfigError("GMRES tolerance must lie in (0, 1)");
  }
  if (restart < 1)
  {
    throw ConfigError("GMRES restart length must be at least 1");
  }
  if (max_iterations < 1)
  {
    throw ConfigError("GMRES iteration limit must be at least 1");
  }
}

Eigen::VectorXcd GmresSolve(const LinearMap &apply, const LinearMap &precondition,
                            const Eigen::VectorXcd &b, const GmresConfig &config,
                            SolveReport &report)
{
  config.Validate();
  const auto start = std::chrono::steady_clock::now();
  const int n = static_cast<int>(b.size());
  auto M = [&](const Eigen::VectorXcd &v) { return precondition ? precondition(v) : v; };
  auto A = [&](const Eigen::VectorXcd &v)
  {
    report.matvecs++;
    Eigen::VectorXcd out = apply(v);
    if (out.size() != n)
    {
      throw DimensionError("operator returned " + std::to_string(out.size()) +
                           " entries, expected " + std::to_string(n));
    }
    return out;
  };

  report.iterations = 0;
  report.matvecs = 0;
  report.history.assign(1, 1.0);
  report.converged = false;
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);
  const double bnorm = b.norm();
  auto finish = [&]()
  {
    report.iteration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  if (bnorm == 0.0)
  {
    report.relative_residual = 0.0;
    report.converged = true;
    finish();
    return x;
  }

  const int m = std::min(config.restart, std::max(n, 1));
  Eigen::VectorXcd r = b;
  double rel = 1.0;
  std::vector<Eigen::VectorXcd> V;
  Eigen::MatrixXcd H(m + 1, m);
  std::vector<cplx> cs(m), sn(m);
  Eigen::VectorXcd g(m + 1);
  while (true)
  {
    const double beta = r.norm();
    V.assign(1, r / beta);
    H.setZero();
    g.setZero();
    g(0) = beta;
    int k = 0;
    bool stop = false;
    for (; k < m && !stop; k++)
    {
      Eigen::VectorXcd w = A(M(V[k]));
      for (int i = 0; i <= k; i++)
      {
        H(i, k) = V[i].dot(w);
        w -= H(i, k) * V[i];
      }
      const double h = w.norm();
      H(k + 1, k) = h;
      for (int i = 0; i < k; i++)
      {
        const cplx t = std::conj(cs[i]) * H(i, k) + std::conj(sn[i]) * H(i + 1, k);
        H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
        H(i, k) = t;
      }
      const double den = std::hypot(std::abs(H(k, k)), h);
      if (den == 0.0)
      {
        cs[k] = 1.0;
        sn[k] = 0.0;
      }
      else
      {
        cs[k] = H(k, k) / den;
        sn[k] = h / den;
      }
      H(k, k) = std::conj(cs[k]) * H(k, k) + std::conj(sn[k]) * H(k + 1, k);
      H(k + 1, k) = 0.0;
      g(k + 1) = -sn[k] * g(k);
      g(k) = std::conj(cs[k]) * g(k);
      report.iterations++;
      rel = std::abs(g(k + 1)) / bnorm;
      report.history.push_back(rel);
      // Lucky breakdown: the Krylov space is invariant.
      if (h <= 1e-14 * den || rel <= config.tolerance ||
          report.iterations >= config.max_iterations)
      {
        stop = true;
      }
      else
      {
        V.push_back(w / h);
      }
    }
    // y = H^{-1} g on the leading k x k triangle.
    const Eigen::VectorXcd y =
        H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    Eigen::VectorXcd z = Eigen::VectorXcd::Zero(n);
    for (int i = 0; i < k; i++)
    {
      z += y(i) * V[i];
    }
    x += M(z);
    r = b - A(x);
    rel = r.norm() / bnorm;
    if (rel <= config.tolerance)
    {
      report.converged = true;
      break;
    }
    if (report.iterations >= config.max_iterations)
    {
      report.relative_residual = rel;
      finish();
      std::ostringstream os;
      os << "GMRES did not converge in " << report.iterations << " iterations (relative residual "
         << rel << ", tolerance " << config.tolerance << ")";
      throw ConvergenceError(os.str(), report.history);
    }
  }
  report.relative_residual = rel;
  finish();
  return x;
}

ArrayOperator::ArrayOperator(const ArraySystem &system)
    : system_(system),
      coupling_(std::make_unique<BlockToeplitzOperator>(system.layout.mx, system.layout.my,
                                                        system.generators.blocks)),
      uo_(system.overlap.Uo.cast<cplx>()),
      uo_t_(uo_.transpose())
{
}

Eigen::VectorXcd ArrayOperator::Apply(const Eigen::VectorXcd &merged) const
{
  if (merged.size() != Size())
  {
    throw DimensionError("merged vector has " + std::to_string(merged.size()) +
                         " entries, expected " + std::to_string(Size()));
  }
  const Eigen::VectorXcd x = uo_ * merged;
  Eigen::VectorXcd y = coupling_->Apply(x);
  const int ne = system_.CellSize();
  const int cells = system_.layout.NumCells();
#pragma omp parallel for schedule(static)
  for (int c = 0; c < cells; c++)
  {
    y.segment(c * ne, ne).noalias() += system_.CellModelOf(c).Z * x.segment(c * ne, ne);
  }
  return uo_t_ * y;
}

std::vector<Vec3> EqMidpoints(const ExteriorBasis &eb)
{
  std::vector<Vec3> mid(eb.Size(), Vec3::Zero());
  const TriMesh &mesh = *eb.mesh;
  auto at = [&](const Rwg &f) { return 0.5 * (mesh.Vertex(f.v0) + mesh.Vertex(f.v1)); };
  for (std::size_t i = 0; i < eb.j_eq.size(); i++)
  {
    mid[eb.j_eq[i]] = at(eb.surface.rwgs[eb.j_rwg[i]]);
  }
  for (std::size_t i = 0; i < eb.m_eq.size(); i++)
  {
    mid[eb.m_eq[i]] = at(eb.surface.rwgs[eb.m_rwg[i]]);
  }
  for (std::size_t i = 0; i < eb.p_eq.size(); i++)
  {
    mid[eb.p_eq[i]] = at(eb.p_rwg[i]);
  }
  return mid;
}

double DefaultNearFieldRadius(double frequency)
{
  return 2.0 * pi / FreeSpaceWavenumber(frequency) / 8.0;
}

Eigen::SparseMatrix<cplx> NearFieldMatrix(const ArraySystem &system, double radius)
{
  if (!(radius > 0.0))
  {
    throw ConfigError("near-field radius must be positive");
  }
  const ArrayLayout &layout = system.layout;
  const ExteriorBasis &eb = *system.basis;
  const int ne = eb.Size();
  const std::vector<Vec3> mid = EqMidpoints(eb);
  const Vec3 extent = eb.box_max - eb.box_min;
  // Offsets beyond these cannot hold a pair closer than the radius.
  const int rx = std::min(layout.mx - 1,
                          static_cast<int>(std::ceil((radius + extent.x()) / layout.px)));
  const int ry = std::min(layout.my - 1,
                          static_cast<int>(std::ceil((radius + extent.y()) / layout.py)));

  std::vector<Eigen::Triplet<cplx>> trip;
  for (int dy = -ry; dy <= ry; dy++)
  {
    for (int dx = -rx; dx <= rx; dx++)
    {
      // Near pairs of this offset; the source box sits at -offset.
      const Vec3 shift(-dx * layout.px, -dy * layout.py, 0.0);
      std::vector<std::pair<int, int>> pairs;
      for (int i = 0; i < ne; i++)
      {
        for (int j = 0; j < ne; j++)
        {
          if ((mid[i] - mid[j] - shift).norm() < radius)
          {
            pairs.emplace_back(i, j);
          }
        }
      }
      if (pairs.empty())
      {
        continue;
      }
      const Eigen::MatrixXcd &G = system.generators.At(dx, dy);
      for (int m = 0; m < layout.NumCells(); m++)
      {
        const int sx = layout.Ix(m) - dx, sy = layout.Iy(m) - dy;
        if (sx < 0 || sx >= layout.mx || sy < 0 || sy >= layout.my)
        {
          continue;
        }
        const int n = layout.Index(sx, sy);
        const Eigen::MatrixXcd *Zeq = (n == m) ? &system.CellModelOf(m).Z : nullptr;
        for (const auto &[i, j] : pairs)
        {
          const cplx v = G(i, j) + (Zeq ? (*Zeq)(i, j) : cplx(0.0));
          if (v != 0.0)
          {
            trip.emplace_back(m * ne + i, n * ne + j, v);
          }
        }
      }
    }
  }
  const int total = layout.NumCells() * ne;
  Eigen::SparseMatrix<cplx> S(total, total);
  S.setFromTriplets(trip.begin(), trip.end());
  const Eigen::SparseMatrix<cplx> U = system.overlap.Uo.cast<cplx>();
  Eigen::SparseMatrix<cplx> P = U.transpose() * S * U;
  P.makeCompressed();
  return P;
}

NearFieldPreconditioner::NearFieldPreconditioner(const ArraySystem &system, double radius)
    : radius_(radius), p_(NearFieldMatrix(system, radius))
{
  // SparseLU does not terminate on an empty row or column; catch those first.
  std::vector<char> row_used(p_.rows(), 0), col_used(p_.cols(), 0);
  for (int c = 0; c < p_.outerSize(); c++)
  {
    for (Eigen::SparseMatrix<cplx>::InnerIterator it(p_, c); it; ++it)
    {
      if (it.value() != 0.0)
      {
        row_used[it.row()] = 1;
        col_used[it.col()] = 1;
      }
    }
  }
  for (Eigen::Index i = 0; i < p_.rows(); i++)
  {
    if (!row_used[i] || !col_used[i])
    {
      throw FactorizationError("near-field preconditioner has an empty row or column (unknown " +
                               std::to_string(i) + "); try a larger near-field radius");
    }
  }
  lu_.analyzePattern(p_);
  lu_.factorize(p_);
  if (lu_.info() != Eigen::Success)
  {
    throw FactorizationError("near-field preconditioner is singular (" + lu_.lastErrorMessage() +
                             "); try a larger near-field radius");
  }
}

Eigen::VectorXcd NearFieldPreconditioner::Solve(const Eigen::VectorXcd &v) const
{
  if (v.size() != p_.rows())
  {
    throw DimensionError("preconditioner input has " + std::to_string(v.size()) +
                         " entries, expected " + std::to_string(p_.rows()));
  }
  Eigen::VectorXcd out = lu_.solve(v);
  return out;
}

}  // namespace macrosurf
