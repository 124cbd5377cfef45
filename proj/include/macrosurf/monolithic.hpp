// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_MONOLITHIC_HPP
#define MACROSURF_MONOLITHIC_HPP

#include <memory>
#include "macrosurf/post.hpp"

namespace macrosurf
{

// Plain PMCHWT/EFIE system of a whole structure: every region is a row, no
// equivalent surface, no reduction. Used as the reference solver.
struct MonolithicSystem
{
  std::shared_ptr<const TriMesh> mesh;
  std::shared_ptr<const Incidence> incidence;
  Eigen::MatrixXcd Z;  // U^T A U

  int NumUnknowns() const { return incidence->num_columns; }
  int NumRaw() const { return static_cast<int>(incidence->raw.size()); }
};

MonolithicSystem AssembleMonolithic(std::shared_ptr<const TriMesh> mesh, double frequency,
                                    const QuadratureOptions &q = {});

// U^T V with V the incident fields tested on the exterior region's bases.
Eigen::VectorXcd MonolithicExcitation(const MonolithicSystem &system, const Excitation &exc,
                                      double frequency);

Eigen::VectorXcd SolveMonolithic(const MonolithicSystem &system, const Eigen::VectorXcd &rhs);

// Currents on the exterior region's boundary, as seen from the exterior.
CurrentSet MonolithicExteriorCurrents(const MonolithicSystem &system, const Eigen::VectorXcd &x);

}  // namespace macrosurf

#endif  // MACROSURF_MONOLITHIC_HPP
