// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include "macrosurf/macromodel.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include "macrosurf/error.hpp"

namespace macrosurf
{

int RegionSystem::Size() const
{
  int n = 0;
  for (const auto &b : blocks)
  {
    n += static_cast<int>(b.rows());
  }
  return n;
}

Eigen::MatrixXcd RegionSystem::Dense() const
{
  Eigen::MatrixXcd Z = Eigen::MatrixXcd::Zero(Size(), Size());
  for (std::size_t b = 0; b < blocks.size(); b++)
  {
    Z.block(offsets[b], offsets[b], blocks[b].rows(), blocks[b].cols()) = blocks[b];
  }
  return Z;
}

RegionSystem AssembleRegionSystem(const Incidence &inc, double frequency,
                                  const QuadratureOptions &q)
{
  const double k0 = FreeSpaceWavenumber(frequency);
  RegionSystem z;
  int offset = 0;
  for (int s = 0; s < static_cast<int>(inc.regions.size()); s++)
  {
    if (!inc.IsRowSlot(s))
    {
      continue;
    }
    const RegionBases &rb = inc.regions[s];
    const cplx k = k0 * std::sqrt(rb.eps);
    const OperatorBlocks ops = AssembleOperators(rb.surface, rb.surface, Vec3::Zero(), k, q);
    z.slots.push_back(s);
    z.offsets.push_back(offset);
    z.blocks.push_back(ComposeBlock(ops, rb.j, rb.m, rb.j, rb.m, k0, rb.eps));
    offset += rb.Size();
  }
  return z;
}

Eigen::MatrixXcd ProjectSystem(const Incidence &inc, const RegionSystem &z)
{
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(inc.num_columns, inc.num_columns);
  for (std::size_t b = 0; b < z.blocks.size(); b++)
  {
    const int base = inc.slot_offset[z.slots[b]];
    const Eigen::MatrixXcd &Zb = z.blocks[b];
    for (int c = 0; c < Zb.cols(); c++)
    {
      const int cc = inc.column[base + c];
      const double sc = inc.sign[base + c];
      for (int r = 0; r < Zb.rows(); r++)
      {
        A(inc.column[base + r], cc) += inc.sign[base + r] * sc * Zb(r, c);
      }
    }
  }
  return A;
}

Macromodel SchurReduce(const Eigen::MatrixXcd &A, int num_eq, const std::string &template_id,
                       bool keep_factors)
{
  if (A.rows() != A.cols() || num_eq < 0 || num_eq > A.rows())
  {
    throw DimensionError("Schur reduction needs a square matrix and 0 <= num_eq <= n");
  }
  const int ne = num_eq, ni = static_cast<int>(A.rows()) - num_eq;
  Macromodel m;
  m.template_id = template_id;
  if (ni == 0)
  {
    m.Z = A;
    if (keep_factors)
    {
      m.has_factors = true;
      m.Z_ie.resize(0, ne);
    }
    return m;
  }
  auto lu = std::make_shared<Eigen::PartialPivLU<Eigen::MatrixXcd>>(A.bottomRightCorner(ni, ni));
  // The LAPACK-style estimator misses exactly vanishing pivots, so the pivot
  // spread bounds the estimate from below as well.
  const Eigen::VectorXd pivots = lu->matrixLU().diagonal().cwiseAbs();
  const double spread = pivots.minCoeff() > 0.0 ? pivots.maxCoeff() / pivots.minCoeff() : INFINITY;
  const double rcond = lu->rcond();
  const double cond = std::max(rcond > 0.0 ? 1.0 / rcond : INFINITY, spread);
  if (!(cond < kMaxInteriorCondition))
  {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", cond);
    throw ReductionError("interior block of template '" + template_id +
                         "' is singular to working precision (condition estimate " + buf + ")");
  }
  const Eigen::MatrixXcd Z_ie = A.bottomLeftCorner(ni, ne);
  m.Z = A.topLeftCorner(ne, ne) - A.topRightCorner(ne, ni) * lu->solve(Z_ie);
  if (keep_factors)
  {
    m.has_factors = true;
    m.lu_ii = lu;
    m.Z_ie = Z_ie;
  }
  return m;
}

Macromodel SchurReduce(const Eigen::MatrixXcd &Z, const Eigen::SparseMatrix<double> &U,
                       int num_eq, const std::string &template_id, bool keep_factors)
{
  if (Z.rows() != U.rows() || Z.cols() != U.rows())
  {
    throw DimensionError("system and incidence dimensions differ");
  }
  const Eigen::MatrixXcd ZU = Z * U.cast<cplx>();
  const Eigen::MatrixXcd A = U.transpose().cast<cplx>() * ZU;
  return SchurReduce(A, num_eq, template_id, keep_factors);
}

Eigen::VectorXcd RecoverInterior(const Macromodel &model, const Eigen::VectorXcd &x_eq)
{
  if (!model.HasRecovery())
  {
    throw ReductionError("interior recovery factors of template '" + model.template_id +
                         "' were not retained");
  }
  if (x_eq.size() != model.Z_ie.cols())
  {
    throw DimensionError("equivalent-surface vector has the wrong length");
  }
  if (model.Z_ie.rows() == 0)
  {
    return Eigen::VectorXcd(0);
  }
  return -model.lu_ii->solve(model.Z_ie * x_eq);
}

CellModel BuildCellModel(std::shared_ptr<const TriMesh> mesh, const std::string &template_id,
                         double frequency, const QuadratureOptions &q, bool keep_factors)
{
  CellModel cell;
  cell.mesh = mesh;
  cell.incidence = std::make_shared<const Incidence>(BuildIncidence(*mesh, IncidenceMode::Cell));
  const RegionSystem z = AssembleRegionSystem(*cell.incidence, frequency, q);
  cell.macromodel =
      SchurReduce(ProjectSystem(*cell.incidence, z), cell.incidence->num_eq, template_id,
                  keep_factors);
  cell.macromodel.frequency = frequency;
  cell.macromodel.mesh_hash = mesh->Hash();
  return cell;
}

namespace
{

constexpr char kMagic[8] = {'M', 'S', 'M', 'A', 'C', 'R', 'O', '1'};

static_assert(std::endian::native == std::endian::little,
              "cache files are written in native order, which must be little-endian");

template <typename T>
void Put(std::ofstream &out, const T &v)
{
  out.write(reinterpret_cast<const char *>(&v), sizeof v);
}

template <typename T>
T Take(std::ifstream &in)
{
  T v{};
  in.read(reinterpret_cast<char *>(&v), sizeof v);
  if (!in)
  {
    throw ParseError("truncated macromodel file", 0);
  }
  return v;
}

}  // namespace

void WriteMacromodel(const Macromodel &model, const std::filesystem::path &path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
  {
    throw Error("cannot write " + path.string());
  }
  out.write(kMagic, sizeof kMagic);
  Put<std::uint32_t>(out, 1);
  Put<std::uint64_t>(out, static_cast<std::uint64_t>(model.Size()));
  Put<double>(out, model.frequency);
  Put<std::uint64_t>(out, model.mesh_hash);
  Put<std::uint64_t>(out, model.template_id.size());
  out.write(model.template_id.data(), static_cast<std::streamsize>(model.template_id.size()));
  for (int r = 0; r < model.Size(); r++)
  {
    for (int c = 0; c < model.Size(); c++)
    {
      Put<double>(out, model.Z(r, c).real());
      Put<double>(out, model.Z(r, c).imag());
    }
  }
  if (!out)
  {
    throw Error("failed writing " + path.string());
  }
}

Macromodel ReadMacromodel(const std::filesystem::path &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw Error("cannot read " + path.string());
  }
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
  {
    throw ParseError("not a macromodel file: " + path.string(), 0);
  }
  if (Take<std::uint32_t>(in) != 1)
  {
    throw ParseError("unsupported macromodel file version", 0);
  }
  Macromodel m;
  const auto n = Take<std::uint64_t>(in);
  m.frequency = Take<double>(in);
  m.mesh_hash = Take<std::uint64_t>(in);
  const auto len = Take<std::uint64_t>(in);
  if (len > 4096 || n > 1000000)
  {
    throw ParseError("corrupt macromodel header", 0);
  }
  m.template_id.resize(len);
  in.read(m.template_id.data(), static_cast<std::streamsize>(len));
  m.Z.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index r = 0; r < m.Z.rows(); r++)
  {
    for (Eigen::Index c = 0; c < m.Z.cols(); c++)
    {
      const double re = Take<double>(in);
      const double im = Take<double>(in);
      m.Z(r, c) = cplx(re, im);
    }
  }
  return m;
}

MacromodelCache::MacromodelCache(std::filesystem::path directory)
    : directory_(std::move(directory))
{
  if (!directory_.empty())
  {
    std::filesystem::create_directories(directory_);
  }
}

std::filesystem::path MacromodelCache::FileName(const std::string &template_id, double frequency,
                                                std::uint64_t mesh_hash) const
{
  std::string safe;
  for (char ch : template_id)
  {
    safe += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_') ? ch : '_';
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "_%a_%016llx.mm", frequency,
                static_cast<unsigned long long>(mesh_hash));
  return directory_ / (safe + buf);
}

const Macromodel &MacromodelCache::Get(const std::string &template_id, double frequency,
                                       std::uint64_t mesh_hash,
                                       const std::function<Macromodel()> &build)
{
  const auto key = std::make_tuple(template_id, frequency, mesh_hash);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = models_.find(key);
    if (it != models_.end())
    {
      return *it->second;
    }
  }
  std::unique_ptr<Macromodel> model;
  if (!directory_.empty())
  {
    const auto file = FileName(template_id, frequency, mesh_hash);
    if (std::filesystem::exists(file))
    {
      Macromodel m = ReadMacromodel(file);
      if (m.template_id == template_id && m.frequency == frequency && m.mesh_hash == mesh_hash)
      {
        model = std::make_unique<Macromodel>(std::move(m));
        std::lock_guard<std::mutex> lock(mutex_);
        disk_hits_++;
      }
    }
  }
  if (!model)
  {
    model = std::make_unique<Macromodel>(build());
    model->template_id = template_id;
    model->frequency = frequency;
    model->mesh_hash = mesh_hash;
    if (!directory_.empty())
    {
      WriteMacromodel(*model, FileName(template_id, frequency, mesh_hash));
    }
    std::lock_guard<std::mutex> lock(mutex_);
    builds_++;
  }
  std::lock_guard<std::mutex> lock(mutex_);
  auto [it, inserted] = models_.emplace(key, std::move(model));
  return *it->second;
}

}  // namespace macrosurf
