// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <catch_amalgamated.hpp>
#include "macrosurf/error.hpp"
#include "macrosurf/monolithic.hpp"

using namespace macrosurf;

namespace
{

constexpr double kFrequency = 9.6e9;

UnitCellParams CoarseCell()
{
  UnitCellParams p;
  p.template_id = "coarse";
  p.patch_width = 5.4e-3;
  p.mesh_length_patch = 2.7e-3;
  p.mesh_length_box = 4.5e-3;
  return p;
}

const CellModel &Cell()
{
  static const CellModel cell = BuildCellModel(GenerateUnitCell(CoarseCell()).mesh, "coarse",
                                               kFrequency);
  return cell;
}

const ExteriorBasis &Basis()
{
  static const ExteriorBasis eb = MakeExteriorBasis(Cell());
  return eb;
}

// Copy of the exterior basis whose mesh is physically moved by `t`.
struct MovedBasis
{
  std::shared_ptr<TriMesh> mesh;
  BasisSurface surface;
};

MovedBasis Move(const ExteriorBasis &eb, const Vec3 &t)
{
  MovedBasis out;
  out.mesh = std::make_shared<TriMesh>(eb.mesh->Translated(t));
  out.surface = eb.surface;
  out.surface.mesh = out.mesh.get();
  return out;
}

}  // namespace

TEST_CASE("layout geometry and validation", "[array]")
{
  const ArrayLayout layout = MakeLayout(3, 2, {0, 0, 0, 0, 0, 0}, {&Cell()});
  CHECK(layout.px == Catch::Approx(13.5e-3));
  CHECK(layout.py == Catch::Approx(13.5e-3));
  CHECK(layout.NumCells() == 6);
  CHECK(layout.Dimension() == 2);
  CHECK((layout.CellCenter(0) - Vec3(-13.5e-3, -6.75e-3, 0.0)).norm() < 1e-15);
  CHECK((layout.CellCenter(5) - Vec3(13.5e-3, 6.75e-3, 0.0)).norm() < 1e-15);
  CHECK(MakeLayout(3, 1, {0, 0, 0}, {&Cell()}).Dimension() == 1);
  CHECK_THROWS_AS(MakeLayout(2, 2, {0, 0, 0}, {&Cell()}), LayoutError);
  CHECK_THROWS_AS(MakeLayout(2, 1, {0, 1}, {&Cell()}), LayoutError);
  CHECK_THROWS_AS(MakeLayout(0, 1, {}, {&Cell()}), LayoutError);

  // A template with a different box is rejected.
  UnitCellParams tall = CoarseCell();
  tall.box_height = 3.0e-3;
  const CellModel other =
      BuildCellModel(GenerateUnitCell(tall).mesh, "tall", kFrequency, {}, false);
  CHECK_THROWS_AS(MakeLayout(2, 1, {0, 1}, {&Cell(), &other}), LayoutError);
}

TEST_CASE("exterior basis partitions the equivalent unknowns", "[array]")
{
  const ExteriorBasis &eb = Basis();
  CHECK(eb.Size() == Cell().macromodel.Size());
  CHECK(eb.j_eq.size() + eb.m_eq.size() + eb.p_eq.size() == static_cast<std::size_t>(eb.Size()));
  std::vector<int> seen(eb.Size(), 0);
  for (int i : eb.j_eq)
  {
    seen[i]++;
  }
  for (int i : eb.m_eq)
  {
    seen[i]++;
  }
  for (int i : eb.p_eq)
  {
    seen[i]++;
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
  CHECK(!eb.p_eq.empty());
}

TEST_CASE("generator blocks", "[array]")
{
  const ArrayLayout layout = MakeLayout(3, 1, {0, 0, 0}, {&Cell()});
  const Generators g = AssembleGenerators(layout, Basis(), kFrequency);
  CHECK(g.Count() == 5);
  const Eigen::MatrixXcd self = CouplingBlock(Basis(), Vec3::Zero(), kFrequency);
  CHECK(g.At(0, 0) == self);
  // Reciprocity: B(d) = P B(-d)^T P with P = +1 on J and -1 on M unknowns.
  // Offsets of two periods use the plain rule both ways, so the identity
  // holds to rounding.
  const ExteriorBasis &eb = Basis();
  Eigen::VectorXd p = Eigen::VectorXd::Ones(eb.Size());
  for (int i : eb.m_eq)
  {
    p(i) = -1.0;
  }
  const Eigen::MatrixXcd a = p.asDiagonal() * g.At(2, 0);
  const Eigen::MatrixXcd b = (p.asDiagonal() * g.At(-2, 0)).transpose();
  CHECK((a - b).norm() < 1e-10 * a.norm());
  // Junction rows and columns are empty.
  for (int i : eb.p_eq)
  {
    CHECK(g.At(1, 0).row(i).norm() == 0.0);
    CHECK(g.At(1, 0).col(i).norm() == 0.0);
  }
}

TEST_CASE("blocks with the same lattice offset agree on a 3x3 layout", "[array]")
{
  const ArrayLayout layout = MakeLayout(3, 3, std::vector<int>(9, 0), {&Cell()});
  const ExteriorBasis &eb = Basis();
  const double k0 = FreeSpaceWavenumber(kFrequency);
  // Direct assembly between physically placed boxes.
  auto direct = [&](int test, int src)
  {
    const MovedBasis t = Move(eb, layout.CellCenter(test));
    const MovedBasis s = Move(eb, layout.CellCenter(src));
    const OperatorBlocks ops = AssembleOperators(t.surface, s.surface, Vec3::Zero(), k0);
    return ComposeBlock(ops, eb.j_rwg, eb.m_rwg, eb.j_rwg, eb.m_rwg, k0, 1.0);
  };
  // Offset (+1, +1): cells 0 -> 4 and 4 -> 8; offset (-2, 0): cells 2 -> 0 and 5 -> 3.
  for (auto [a_src, a_test, b_src, b_test] : {std::tuple{0, 4, 4, 8}, std::tuple{2, 0, 5, 3}})
  {
    const Eigen::MatrixXcd za = direct(a_test, a_src);
    const Eigen::MatrixXcd zb = direct(b_test, b_src);
    CHECK((za - zb).norm() < 1e-12 * za.norm());
  }
}

TEST_CASE("overlap incidence", "[array]")
{
  const ExteriorBasis &eb = Basis();
  const int n = eb.Size();
  const int np = static_cast<int>(eb.p_eq.size());

  const ArrayLayout one = MakeLayout(1, 1, {0}, {&Cell()});
  const OverlapIncidence o1 = BuildOverlapIncidence(one, eb);
  // Every junction unknown joins the exterior current on its edge.
  CHECK(o1.num_merged == n - np);

  const ArrayLayout two = MakeLayout(2, 1, {0, 0}, {&Cell()});
  const OverlapIncidence o2 = BuildOverlapIncidence(two, eb);
  const Eigen::SparseMatrix<double> UtU = o2.Uo.transpose() * o2.Uo;
  Eigen::MatrixXd d(UtU);
  CHECK((d - Eigen::MatrixXd(d.diagonal().asDiagonal())).norm() == 0.0);
  for (int c = 0; c < o2.num_merged; c++)
  {
    CHECK(d(c, c) == o2.multiplicity[c]);
  }
  // Exactly one nonzero per stacked unknown.
  std::vector<int> per_row(o2.Uo.rows(), 0);
  for (int c = 0; c < o2.Uo.outerSize(); c++)
  {
    for (Eigen::SparseMatrix<double>::InnerIterator it(o2.Uo, c); it; ++it)
    {
      CHECK(std::abs(it.value()) == 1.0);
      per_row[it.row()]++;
    }
  }
  CHECK(std::all_of(per_row.begin(), per_row.end(), [](int k) { return k == 1; }));
  // The shared wall removes its own unknowns once, the two cells' boundary
  // junctions join their exterior partners.
  int shared = 0;
  for (int m : o2.multiplicity)
  {
    shared += m - 1;
  }
  CHECK(o2.num_merged == 2 * n - shared);
  CHECK(o2.num_merged < 2 * o1.num_merged);
}

TEST_CASE("incident fields", "[array][excitation]")
{
  const double f = kFrequency, k = FreeSpaceWavenumber(f);
  const Excitation pw =
      Excitation::PlaneWave(Vec3(0.0, 0.6, -0.8), Vec3(1.0, 0.0, 0.0), cplx(2.0, 1.0));
  CVec3 E, H;
  IncidentField(pw, f, Vec3(0.01, -0.02, 0.03), E, H);
  CHECK(std::abs(E.norm() - std::abs(cplx(2.0, 1.0))) < 1e-12);
  // H = k x E / eta0, with the complex amplitude pulled out of E.
  const cplx amp = pw.polarization.cast<cplx>().dot(E);
  CHECK((H - amp * pw.direction.cross(pw.polarization).cast<cplx>() / eta0).norm() <
        1e-12 * H.norm());
  CHECK(std::abs(E.dot(pw.direction.cast<cplx>())) < 1e-15);
  CHECK_THROWS_AS(ValidateExcitation(Excitation::PlaneWave(Vec3::UnitZ(), Vec3::UnitZ())),
                  ExcitationError);

  // Dipole: Faraday's law by central differences, curl E = -j w mu0 H.
  const Excitation dip = Excitation::Dipole(Vec3(0.001, 0.0, 0.002), Vec3(0.0, 0.6, 0.8));
  const Vec3 r(0.012, -0.007, 0.02);
  const double h = 1e-6;
  auto e_at = [&](const Vec3 &x)
  {
    CVec3 e, hh;
    IncidentField(dip, f, x, e, hh);
    return e;
  };
  CVec3 curl;
  const Vec3 ex = Vec3::UnitX() * h, ey = Vec3::UnitY() * h, ez = Vec3::UnitZ() * h;
  const CVec3 dx = (e_at(r + ex) - e_at(r - ex)) / (2 * h);
  const CVec3 dy = (e_at(r + ey) - e_at(r - ey)) / (2 * h);
  const CVec3 dz = (e_at(r + ez) - e_at(r - ez)) / (2 * h);
  curl << dy.z() - dz.y(), dz.x() - dx.z(), dx.y() - dy.x();
  IncidentField(dip, f, r, E, H);
  CHECK((curl + j_unit * k * eta0 * H).norm() < 1e-6 * (k * eta0 * H).norm());

  // Far zone: |E| proportional to sin(angle to the axis), eta0 k I l/(4 pi R).
  const Excitation zdip = Excitation::Dipole(Vec3::Zero(), Vec3::UnitZ(), 1.0);
  const double R = 1000.0 / k;
  for (double theta : {0.3, 1.0, pi / 2})
  {
    IncidentField(zdip, f, R * SphericalDirection(theta, 0.4), E, H);
    CHECK(E.norm() == Catch::Approx(eta0 * k * std::sin(theta) / (4 * pi * R)).epsilon(2e-3));
  }
}

TEST_CASE("array excitation", "[array][excitation]")
{
  const ArrayLayout layout = MakeLayout(2, 1, {0, 0}, {&Cell()});
  const ExteriorBasis &eb = Basis();
  CHECK_THROWS_AS(
      AssembleExcitation(layout, eb, Excitation::Dipole(layout.CellCenter(1) + Vec3(0, 0, 1e-3),
                                                        Vec3::UnitZ()),
                         kFrequency),
      ExcitationError);
  const Excitation pw = Excitation::PlaneWave(-Vec3::UnitZ(), Vec3::UnitX());
  const Eigen::VectorXcd v = AssembleExcitation(layout, eb, pw, kFrequency);
  for (int i : eb.p_eq)
  {
    CHECK(v(i) == 0.0);
  }
  // Normal incidence: both cells see the same excitation.
  const int n = eb.Size();
  CHECK((v.head(n) - v.tail(n)).norm() < 1e-12 * v.norm());
  // Linearity in the amplitude.
  const Eigen::VectorXcd v2 = AssembleExcitation(
      layout, eb, Excitation::PlaneWave(-Vec3::UnitZ(), Vec3::UnitX(), cplx(0.0, 3.0)),
      kFrequency);
  CHECK((v2 - cplx(0.0, 3.0) * v).norm() < 1e-13 * v2.norm());
}

TEST_CASE("two-cell macromodel solve matches the monolithic solve", "[array][slow]")
{
  const ArrayLayout layout = MakeLayout(2, 1, {0, 0}, {&Cell()});
  ArraySystem sys;
  sys.layout = layout;
  sys.basis = &Basis();
  sys.cell_models = {&Cell().macromodel};
  sys.generators = AssembleGenerators(layout, Basis(), kFrequency);
  sys.overlap = BuildOverlapIncidence(layout, Basis());
  const Excitation pw = Excitation::PlaneWave(Vec3(0.5, 0.0, -std::sqrt(0.75)), Vec3::UnitY());
  const Eigen::VectorXcd rhs =
      sys.overlap.Uo.transpose() * AssembleExcitation(layout, Basis(), pw, kFrequency);
  const Eigen::VectorXcd x = sys.Dense().partialPivLu().solve(rhs);
  const std::vector<CurrentSet> sets = ExpandArrayCurrents(sys, x);

  auto mesh = std::make_shared<const TriMesh>(BuildArrayMesh(layout, {Cell().mesh.get()}));
  const MonolithicSystem mono = AssembleMonolithic(mesh, kFrequency);
  const CurrentSet ref =
      MonolithicExteriorCurrents(mono, SolveMonolithic(mono, MonolithicExcitation(mono, pw, kFrequency)));
  CHECK(sys.NumUnknowns() < mono.NumUnknowns());
  for (double theta : {0.0, 0.4, 1.0, 2.0, 2.8})
  {
    for (double phi : {0.0, 1.2})
    {
      const Vec3 d = SphericalDirection(theta, phi);
      const CVec3 a = FarField(sets, kFrequency, d);
      const CVec3 b = FarField({ref}, kFrequency, d);
      CHECK((a - b).norm() < 1e-5 * b.norm());
    }
  }
}
