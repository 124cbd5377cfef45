// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_ARRAY_HPP
#define MACROSURF_ARRAY_HPP

#include <memory>
#include <string>
#include <vector>
#include <Eigen/SparseCore>
#include "macrosurf/excitation.hpp"
#include "macrosurf/macromodel.hpp"

namespace macrosurf
{

// Rectangular lattice of cells, row-major in (x, y), centred on `origin`.
struct ArrayLayout
{
  int mx = 1, my = 1;
  double px = 0.0, py = 0.0;
  std::vector<int> cell_template;  // template index per cell
  Vec3 origin = Vec3::Zero();

  int NumCells() const { return mx * my; }
  int Index(int ix, int iy) const { return iy * mx + ix; }
  int Ix(int m) const { return m % mx; }
  int Iy(int m) const { return m / mx; }
  Vec3 CellCenter(int m) const;
  int Dimension() const { return (mx > 1 && my > 1) ? 2 : 1; }
};

// Builds a layout and checks it against the templates: periods equal to the
// cell footprint, identical equivalent surfaces, a template for every cell.
ArrayLayout MakeLayout(int mx, int my, const std::vector<int> &cell_template,
                       const std::vector<const CellModel *> &templates);

// Equivalent-surface basis shared by all templates, in eq order. Junction
// unknowns are interior currents with no exterior function.
struct ExteriorBasis
{
  std::shared_ptr<const TriMesh> mesh;
  BasisSurface surface;        // exterior side of the box
  std::vector<int> j_rwg;      // surface rwg of each electric eq unknown
  std::vector<int> m_rwg;      // surface rwg of each magnetic eq unknown
  std::vector<int> j_eq, m_eq; // their eq indices
  std::vector<Rwg> p_rwg;      // junction unknowns, as functions on `mesh`
  std::vector<int> p_eq;
  std::vector<int> p_face;
  Vec3 box_min, box_max;
  int size = 0;

  int Size() const { return size; }
};

ExteriorBasis MakeExteriorBasis(const CellModel &cell);

// Exterior (free-space) interaction of the box at the origin (test) with a
// copy displaced by `shift` (source), in eq order; junction rows and columns
// are zero.
Eigen::MatrixXcd CouplingBlock(const ExteriorBasis &eb, const Vec3 &shift, double frequency,
                               const QuadratureOptions &q = {});

// One coupling block per lattice offset (dx, dy) = (ix_test - ix_src,
// iy_test - iy_src).
struct Generators
{
  int mx = 1, my = 1;
  std::vector<Eigen::MatrixXcd> blocks;

  int Count() const { return static_cast<int>(blocks.size()); }
  int Slot(int dx, int dy) const { return (dx + mx - 1) + (2 * mx - 1) * (dy + my - 1); }
  const Eigen::MatrixXcd &At(int dx, int dy) const { return blocks[Slot(dx, dy)]; }
};

Generators AssembleGenerators(const ArrayLayout &layout, const ExteriorBasis &eb,
                              double frequency, const QuadratureOptions &q = {});

// Merging of the stacked per-cell eq unknowns Y = U_o Y~.
struct OverlapIncidence
{
  Eigen::SparseMatrix<double> Uo;
  std::vector<int> column;    // per stacked unknown
  std::vector<double> sign;   // per stacked unknown
  std::vector<int> multiplicity;
  int num_merged = 0;
};

OverlapIncidence BuildOverlapIncidence(const ArrayLayout &layout, const ExteriorBasis &eb);

// Stacked exterior right-hand side, eq order per cell, junction rows zero.
Eigen::VectorXcd AssembleExcitation(const ArrayLayout &layout, const ExteriorBasis &eb,
                                    const Excitation &exc, double frequency);

// Everything needed to apply the merged system U_o^T (Z_eq + Z_o) U_o.
struct ArraySystem
{
  ArrayLayout layout;
  const ExteriorBasis *basis = nullptr;
  std::vector<const Macromodel *> cell_models;  // per template
  Generators generators;
  OverlapIncidence overlap;

  int NumUnknowns() const { return overlap.num_merged; }
  int CellSize() const { return basis->Size(); }
  const Macromodel &CellModelOf(int m) const
  {
    return *cell_models[layout.cell_template[m]];
  }
  // Dense merged matrix; small arrays only.
  Eigen::MatrixXcd Dense() const;
  // Stacked matrix Z_eq + Z_o before merging; small arrays only.
  Eigen::MatrixXcd DenseStacked() const;
};

// Monolithic mesh of the whole array: cell meshes translated to their
// positions, region ids made unique per cell, shared walls turned into
// dielectric interfaces between neighbouring cells.
TriMesh BuildArrayMesh(const ArrayLayout &layout, const std::vector<const TriMesh *> &cells);

}  // namespace macrosurf

#endif  // MACROSURF_ARRAY_HPP
