// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <random>
#include <set>
#include <catch_amalgamated.hpp>
#include "macrosurf/error.hpp"
#include "macrosurf/macromodel.hpp"

using namespace macrosurf;

namespace
{

Eigen::MatrixXcd RandomMatrix(int n, unsigned seed)
{
  std::mt19937 gen(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd A(n, n);
  for (int r = 0; r < n; r++)
  {
    for (int c = 0; c < n; c++)
    {
      A(r, c) = cplx(nd(gen), nd(gen));
    }
  }
  // Diagonal shift keeps every principal block well conditioned.
  A.diagonal().array() += cplx(3.0 * n, 0.0);
  return A;
}

Eigen::VectorXcd RandomVector(int n, unsigned seed)
{
  std::mt19937 gen(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; i++)
  {
    v(i) = cplx(nd(gen), nd(gen));
  }
  return v;
}

UnitCellParams CoarseCell()
{
  UnitCellParams p;
  p.template_id = "coarse";
  p.patch_width = 5.4e-3;
  p.mesh_length_patch = 2.7e-3;
  p.mesh_length_box = 4.5e-3;
  return p;
}

}  // namespace

TEST_CASE("Schur reduction of small systems", "[macromodel]")
{
  Eigen::MatrixXcd A(2, 2);
  A << 2.0, 1.0, 1.0, 2.0;
  CHECK(std::abs(SchurReduce(A, 1, "t").Z(0, 0) - 1.5) < 1e-15);

  // Decoupled interior: the reduced matrix is the eq block itself.
  Eigen::MatrixXcd D = RandomMatrix(6, 1);
  D.topRightCorner(2, 4).setZero();
  const Macromodel m = SchurReduce(D, 2, "t");
  CHECK(m.Z == D.topLeftCorner(2, 2));
  CHECK(RecoverInterior(m, Eigen::VectorXcd::Zero(2)).norm() == 0.0);
}

TEST_CASE("Reduced solve plus recovery equals the monolithic solve", "[macromodel]")
{
  const int n = 40, ne = 15;
  const Eigen::MatrixXcd A = RandomMatrix(n, 7);
  const Macromodel m = SchurReduce(A, ne, "random");
  REQUIRE(m.Size() == ne);
  // Right-hand side supported on the eq unknowns.
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(n);
  b.head(ne) = RandomVector(ne, 3);
  const Eigen::VectorXcd x = A.partialPivLu().solve(b);
  const Eigen::VectorXcd x_eq = m.Z.partialPivLu().solve(b.head(ne));
  const Eigen::VectorXcd x_int = RecoverInterior(m, x_eq);
  Eigen::VectorXcd y(n);
  y << x_eq, x_int;
  CHECK((y - x).norm() < 1e-10 * x.norm());

  // Defining equation of the recovery on an arbitrary eq vector.
  const Eigen::VectorXcd v = RandomVector(ne, 11);
  const Eigen::VectorXcd w = RecoverInterior(m, v);
  const Eigen::VectorXcd lhs = A.bottomLeftCorner(n - ne, ne) * v;
  CHECK((lhs + A.bottomRightCorner(n - ne, n - ne) * w).norm() < 1e-10 * lhs.norm());

  // Same through the sparse incidence overload with U = I.
  Eigen::SparseMatrix<double> I(n, n);
  I.setIdentity();
  CHECK((SchurReduce(A, I, ne, "random").Z - m.Z).norm() < 1e-13 * m.Z.norm());
}

TEST_CASE("Schur reduction errors", "[macromodel]")
{
  Eigen::MatrixXcd A = RandomMatrix(5, 2);
  A.bottomRightCorner(3, 3).setZero();
  A.bottomRightCorner(3, 3)(0, 0) = 1.0;
  try
  {
    SchurReduce(A, 2, "patch_7");
    FAIL("expected ReductionError");
  }
  catch (const ReductionError &e)
  {
    CHECK(std::string(e.what()).find("patch_7") != std::string::npos);
  }
  const Macromodel m = SchurReduce(RandomMatrix(5, 2), 2, "t", false);
  CHECK_THROWS_AS(RecoverInterior(m, Eigen::VectorXcd::Zero(2)), ReductionError);
  CHECK_THROWS_AS(SchurReduce(RandomMatrix(5, 2), 6, "t"), DimensionError);
}

TEST_CASE("Cell incidence structure", "[macromodel]")
{
  const UnitCellGeometry g = GenerateUnitCell(CoarseCell());
  const TriMesh &mesh = *g.mesh;
  const Incidence inc = BuildIncidence(mesh, IncidenceMode::Cell);

  // One nonzero of magnitude one per row.
  for (int k = 0; k < inc.U.outerSize(); k++)
  {
    for (Eigen::SparseMatrix<double>::InnerIterator it(inc.U, k); it; ++it)
    {
      CHECK(std::abs(it.value()) == 1.0);
    }
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(inc.U.cols());
  const Eigen::SparseMatrix<double> Ut = inc.U.transpose();
  Eigen::VectorXd row_nnz = Eigen::VectorXd::Zero(inc.U.rows());
  for (int k = 0; k < Ut.outerSize(); k++)
  {
    for (Eigen::SparseMatrix<double>::InnerIterator it(Ut, k); it; ++it)
    {
      row_nnz(it.col())++;
    }
  }
  CHECK(row_nnz.minCoeff() == 1.0);
  CHECK(row_nnz.maxCoeff() == 1.0);

  // Eq unknowns: every exterior J and M basis, plus one interior current per
  // bottom edge of the side walls.
  const RegionBases &ext = inc.regions[0];
  REQUIRE(ext.region == kExteriorRegion);
  int bottom_edges = 0;
  for (const Rwg &f : ext.surface.rwgs)
  {
    const bool a = mesh.Tri(f.tri[0]).tag.kind == SurfaceKind::GroundPlane;
    const bool b = mesh.Tri(f.tri[1]).tag.kind == SurfaceKind::GroundPlane;
    bottom_edges += (a != b) ? 1 : 0;
  }
  CHECK(bottom_edges > 0);
  int nj = 0, nm = 0, np = 0;
  for (const EqUnknown &e : inc.eq)
  {
    nj += e.kind == EqKind::Electric;
    nm += e.kind == EqKind::Magnetic;
    np += e.kind == EqKind::Junction;
  }
  CHECK(nj == static_cast<int>(ext.j.size()));
  CHECK(nm == static_cast<int>(ext.m.size()));
  CHECK(np == bottom_edges);
  CHECK(inc.num_eq == nj + nm + np);

  // Canonical order: kind, then face, then edge key.
  for (int i = 1; i < inc.num_eq; i++)
  {
    const EqUnknown &a = inc.eq[i - 1], &b = inc.eq[i];
    CHECK(std::tie(a.kind, a.face, a.v0, a.v1) < std::tie(b.kind, b.face, b.v0, b.v1));
  }

  // Interior columns are all referenced by a row of U.
  std::set<int> used;
  for (int r = 0; r < static_cast<int>(inc.raw.size()); r++)
  {
    if (inc.row[r] >= 0)
    {
      used.insert(inc.column[r]);
    }
  }
  for (int c = inc.num_eq; c < inc.num_columns; c++)
  {
    CHECK(used.count(c) == 1);
  }

  // The patch carries separate currents on its two sides; a dielectric
  // interface edge maps two raw currents onto one column.
  std::map<int, std::vector<int>> by_column;
  for (int r = 0; r < static_cast<int>(inc.raw.size()); r++)
  {
    by_column[inc.column[r]].push_back(r);
  }
  int pec_pairs_split = 0, dielectric_merged = 0;
  for (int r = 0; r < static_cast<int>(inc.raw.size()); r++)
  {
    const RawUnknown &u = inc.raw[r];
    if (u.boundary == BoundaryCase::PecInterface)
    {
      CHECK(by_column[inc.column[r]].size() == 1);
      pec_pairs_split++;
    }
    if (u.boundary == BoundaryCase::DielectricInterface && !u.magnetic)
    {
      CHECK(by_column[inc.column[r]].size() == 2);
      dielectric_merged++;
    }
  }
  CHECK(pec_pairs_split > 0);
  CHECK(dielectric_merged > 0);

  // The same template meshed with a different patch keeps the eq ordering.
  UnitCellParams p2 = CoarseCell();
  p2.patch_width = 8.1e-3;
  const Incidence inc2 = BuildIncidence(*GenerateUnitCell(p2).mesh, IncidenceMode::Cell);
  REQUIRE(inc2.num_eq == inc.num_eq);
  for (int i = 0; i < inc.num_eq; i++)
  {
    CHECK(std::tie(inc.eq[i].kind, inc.eq[i].face, inc.eq[i].v0, inc.eq[i].v1) ==
          std::tie(inc2.eq[i].kind, inc2.eq[i].face, inc2.eq[i].v0, inc2.eq[i].v1));
  }
}

TEST_CASE("Monolithic incidence has full column rank", "[macromodel]")
{
  // Dielectric sphere: every interface edge gives one J and one M column.
  const TriMesh sphere =
      GenerateSphere(0.1, 1, SurfaceTag{SurfaceKind::DielectricInterface, 0, 1, -1}, {{1, 4.0}});
  const Incidence inc = BuildIncidence(sphere, IncidenceMode::Monolithic);
  const int edges = static_cast<int>(inc.regions[0].surface.rwgs.size());
  CHECK(inc.num_columns == 2 * edges);
  CHECK(inc.U.rows() == 4 * edges);
  CHECK(inc.num_eq == 0);
  const Eigen::MatrixXd U = Eigen::MatrixXd(inc.U);
  CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(U).rank() == inc.num_columns);
  CHECK_THROWS_AS(BuildIncidence(sphere, IncidenceMode::Cell), IncidenceError);
}

TEST_CASE("Cell macromodel", "[macromodel]")
{
  const UnitCellGeometry g = GenerateUnitCell(CoarseCell());
  const double f = 9.6e9;
  const CellModel cell = BuildCellModel(g.mesh, "coarse", f);
  const Incidence &inc = *cell.incidence;
  const RegionSystem z = AssembleRegionSystem(inc, f);
  int raw_rows = 0;
  for (const RegionBases &rb : inc.regions)
  {
    raw_rows += rb.region == kExteriorRegion ? 0 : rb.Size();
  }
  CHECK(z.Size() == raw_rows);
  CHECK(z.Size() == inc.NumRows());

  const Eigen::MatrixXcd Zd = z.Dense();
  const Eigen::MatrixXcd A = ProjectSystem(inc, z);
  const Eigen::MatrixXcd Ud = Eigen::MatrixXd(inc.U).cast<cplx>();
  CHECK((A - Ud.transpose() * Zd * Ud).norm() < 1e-13 * A.norm());
  CHECK(cell.macromodel.Size() == inc.num_eq);
  CHECK(cell.macromodel.Z.allFinite());

  // Two builds are bit-identical.
  CHECK(BuildCellModel(g.mesh, "coarse", f).macromodel.Z == cell.macromodel.Z);

  // Reduced solve plus recovery equals a solve of U^T Z U. Exterior-only
  // unknowns have no interior equation, so an arbitrary eq-eq term D stands
  // in for the exterior coupling; it passes through the reduction unchanged.
  const int ne = inc.num_eq;
  const Eigen::MatrixXcd D = RandomMatrix(ne, 4) * (A.norm() / ne);
  Eigen::MatrixXcd AD = A;
  AD.topLeftCorner(ne, ne) += D;
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(inc.num_columns);
  b.head(ne) = RandomVector(ne, 5);
  const Eigen::VectorXcd x = AD.partialPivLu().solve(b);
  const Eigen::VectorXcd x_eq = (cell.macromodel.Z + D).partialPivLu().solve(b.head(ne));
  Eigen::VectorXcd y(inc.num_columns);
  y << x_eq, RecoverInterior(cell.macromodel, x_eq);
  CHECK((y - x).norm() < 1e-10 * x.norm());
}

TEST_CASE("Macromodel reciprocity", "[macromodel]")
{
  // The residue terms of the fictitious faces are the only non-reciprocal
  // part of the reduced matrix; they cancel against the exterior residue
  // once the exterior equation is added. With P = diag(1 on J, -1 on M) the
  // sum P (Z + R_ext) must be symmetric. A cell without ground plane has no
  // wall-ground junction unknowns, whose exterior partner lives in a
  // neighbouring cell.
  UnitCellParams p = CoarseCell();
  p.ground_plane = false;
  const UnitCellGeometry g = GenerateUnitCell(p);
  const double f = 9.6e9, k0 = FreeSpaceWavenumber(f);
  const CellModel cell = BuildCellModel(g.mesh, "coarse", f);
  const Incidence &inc = *cell.incidence;
  const RegionBases &ext = inc.regions[0];
  OperatorBlocks ops = AssembleOperators(ext.surface, ext.surface, Vec3::Zero(), k0);
  ops.L.setZero();
  ops.K.setZero();
  const Eigen::MatrixXcd R = ComposeBlock(ops, ext.j, ext.m, ext.j, ext.m, k0, 1.0);
  const int ne = inc.num_eq;
  Eigen::MatrixXcd S(ne, ne);
  for (int a = 0; a < ne; a++)
  {
    REQUIRE(inc.eq[a].kind != EqKind::Junction);
    const double pa = inc.eq[a].kind == EqKind::Magnetic ? -1.0 : 1.0;
    for (int b = 0; b < ne; b++)
    {
      S(a, b) = pa * (cell.macromodel.Z(a, b) +
                      R(inc.eq[a].raw - inc.slot_offset[0], inc.eq[b].raw - inc.slot_offset[0]));
    }
  }
  CHECK((S - S.transpose()).norm() < 1e-6 * S.norm());
}

TEST_CASE("Macromodel cache", "[macromodel]")
{
  const auto dir = std::filesystem::temp_directory_path() / "macrosurf_cache_test";
  std::filesystem::remove_all(dir);
  Macromodel m = SchurReduce(RandomMatrix(7, 9), 4, "tmpl");
  m.frequency = 1.25e9;
  m.mesh_hash = 0x1234abcdULL;
  int calls = 0;
  auto build = [&]
  {
    calls++;
    return m;
  };
  {
    MacromodelCache cache(dir);
    const Macromodel &a = cache.Get("tmpl", 1.25e9, 0x1234abcdULL, build);
    const Macromodel &b = cache.Get("tmpl", 1.25e9, 0x1234abcdULL, build);
    CHECK(&a == &b);
    CHECK(calls == 1);
    cache.Get("tmpl", 1.5e9, 0x1234abcdULL, build);
    CHECK(calls == 2);
  }
  MacromodelCache again(dir);
  const Macromodel &c = again.Get("tmpl", 1.25e9, 0x1234abcdULL, build);
  CHECK(calls == 2);
  CHECK(again.DiskHits() == 1);
  CHECK(c.Z == m.Z);
  CHECK(c.template_id == "tmpl");
  CHECK_FALSE(c.HasRecovery());
  std::filesystem::remove_all(dir);
}
