// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_MACROMODEL_HPP
#define MACROSURF_MACROMODEL_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>
#include <Eigen/Dense>
#include "macrosurf/incidence.hpp"

namespace macrosurf
{

// Block-diagonal system of the regions that are rows of an incidence: one
// dense block per row region, in slot order; off-diagonal blocks are zero.
struct RegionSystem
{
  std::vector<int> slots;
  std::vector<int> offsets;  // first row of each block
  std::vector<Eigen::MatrixXcd> blocks;

  int Size() const;
  Eigen::MatrixXcd Dense() const;
};

RegionSystem AssembleRegionSystem(const Incidence &inc, double frequency,
                                  const QuadratureOptions &q = {});

// U^T Z U without forming Z densely.
Eigen::MatrixXcd ProjectSystem(const Incidence &inc, const RegionSystem &z);

struct Macromodel
{
  std::string template_id;
  double frequency = 0.0;
  std::uint64_t mesh_hash = 0;
  Eigen::MatrixXcd Z;  // reduced matrix over the equivalent-surface unknowns

  // Interior recovery factors, absent for cached models.
  bool has_factors = false;
  std::shared_ptr<const Eigen::PartialPivLU<Eigen::MatrixXcd>> lu_ii;
  Eigen::MatrixXcd Z_ie;

  int Size() const { return static_cast<int>(Z.rows()); }
  bool HasRecovery() const { return has_factors; }
};

// Condition estimate of Z_ii beyond which reduction is refused.
inline constexpr double kMaxInteriorCondition = 1e13;

// Schur complement of the trailing (interior) block of A, whose first num_eq
// rows and columns are the equivalent-surface unknowns.
Macromodel SchurReduce(const Eigen::MatrixXcd &A, int num_eq, const std::string &template_id,
                       bool keep_factors = true);
Macromodel SchurReduce(const Eigen::MatrixXcd &Z, const Eigen::SparseMatrix<double> &U,
                       int num_eq, const std::string &template_id, bool keep_factors = true);

// x_int = -Z_ii^{-1} Z_ie x_eq.
Eigen::VectorXcd RecoverInterior(const Macromodel &model, const Eigen::VectorXcd &x_eq);

// Full pipeline for one cell mesh.
struct CellModel
{
  std::shared_ptr<const TriMesh> mesh;
  std::shared_ptr<const Incidence> incidence;
  Macromodel macromodel;
};

CellModel BuildCellModel(std::shared_ptr<const TriMesh> mesh, const std::string &template_id,
                         double frequency, const QuadratureOptions &q = {},
                         bool keep_factors = true);

// Binary file: magic, version, n, frequency, mesh hash, id, then n*n
// row-major complex doubles, all little-endian.
void WriteMacromodel(const Macromodel &model, const std::filesystem::path &path);
Macromodel ReadMacromodel(const std::filesystem::path &path);

// Macromodels keyed by (template id, frequency, mesh hash), in memory and
// optionally on disk.
class MacromodelCache
{
 public:
  explicit MacromodelCache(std::filesystem::path directory = {});

  const Macromodel &Get(const std::string &template_id, double frequency,
                        std::uint64_t mesh_hash, const std::function<Macromodel()> &build);

  int Builds() const { return builds_; }
  int DiskHits() const { return disk_hits_; }

 private:
  std::filesystem::path FileName(const std::string &template_id, double frequency,
                                 std::uint64_t mesh_hash) const;

  std::filesystem::path directory_;
  std::map<std::tuple<std::string, double, std::uint64_t>, std::unique_ptr<Macromodel>> models_;
  std::mutex mutex_;
  int builds_ = 0;
  int disk_hits_ = 0;
};

}  // namespace macrosurf

#endif  // MACROSURF_MACROMODEL_HPP
