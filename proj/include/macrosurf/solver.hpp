// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_SOLVER_HPP
#define MACROSURF_SOLVER_HPP

#include <functional>
#include <memory>
#include <vector>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include "macrosurf/array.hpp"
#include "macrosurf/fftaccel.hpp"

namespace macrosurf
{

using LinearMap = std::function<Eigen::VectorXcd(const Eigen::VectorXcd &)>;

struct GmresConfig
{
  double tolerance = 1e-4;  // on ||b - A x|| / ||b||
  int restart = 100;
  int max_iterations = 1000;

  // Throws ConfigError.
  void Validate() const;
};

struct SolveReport
{
  int iterations = 0;
  int matvecs = 0;
  double relative_residual = 0.0;  // true residual of the returned solution
  std::vector<double> history;     // residual estimate after each iteration, [0] = 1
  bool converged = false;
  double fill_seconds = 0.0;
  double factorization_seconds = 0.0;
  double iteration_seconds = 0.0;
};

// Restarted GMRES (modified Gram-Schmidt, Givens rotations) for A x = b,
// right-preconditioned: A M^{-1} y = b, x = M^{-1} y. `precondition` applies
// M^{-1} and may be empty. The true residual is recomputed at every restart
// and at the end; iteration stops only once it meets the tolerance. Throws
// ConvergenceError with the history when max_iterations is reached first.
Eigen::VectorXcd GmresSolve(const LinearMap &apply, const LinearMap &precondition,
                            const Eigen::VectorXcd &b, const GmresConfig &config,
                            SolveReport &report);

// Merged array operator U_o^T (Z_eq + Z_o) U_o: Z_eq blockwise per cell,
// Z_o through the block-Toeplitz FFT operator.
class ArrayOperator
{
public:
  explicit ArrayOperator(const ArraySystem &system);

  int Size() const { return system_.NumUnknowns(); }
  Eigen::VectorXcd Apply(const Eigen::VectorXcd &merged) const;
  const BlockToeplitzOperator &Coupling() const { return *coupling_; }

private:
  const ArraySystem &system_;
  std::unique_ptr<BlockToeplitzOperator> coupling_;
  Eigen::SparseMatrix<cplx> uo_, uo_t_;
};

// Edge midpoint of every equivalent-surface unknown in the box frame.
std::vector<Vec3> EqMidpoints(const ExteriorBasis &eb);

// Default near-field radius lambda0 / 8.
double DefaultNearFieldRadius(double frequency);

// P = U_o^T (Z_eq^NF + Z_o^NF) U_o, keeping entries whose unknowns' edge
// midpoints are closer than `radius`.
Eigen::SparseMatrix<cplx> NearFieldMatrix(const ArraySystem &system, double radius);

// P factored by sparse LU with COLAMD ordering. Throws FactorizationError if
// P is singular.
class NearFieldPreconditioner
{
public:
  NearFieldPreconditioner(const ArraySystem &system, double radius);

  Eigen::VectorXcd Solve(const Eigen::VectorXcd &v) const;
  const Eigen::SparseMatrix<cplx> &Matrix() const { return p_; }
  long NonZeros() const { return p_.nonZeros(); }
  double Radius() const { return radius_; }

private:
  double radius_;
  Eigen::SparseMatrix<cplx> p_;
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>, Eigen::COLAMDOrdering<int>> lu_;
};

}  // namespace macrosurf

#endif  // MACROSURF_SOLVER_HPP
