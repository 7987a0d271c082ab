#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace msfrac;

namespace {

const Material unit{1.0, 1.0, 1.0};

struct Instance {
  CellLattice lattice;
  Mesh mesh;
  Connectivity conn;
};

Instance uncracked(double eps, int n) {
  Instance s{build_lattice(fixture::unit_square(), eps), {}, {}};
  s.mesh = build_grid(s.lattice, n);
  s.conn = break_edges(s.mesh, CrackState{});
  return s;
}

DisplacementField solve(const Mesh& mesh, const Connectivity& conn, const BoundaryCondition& bc, double rho = 1e-8,
                        const Material& m = unit) {
  return equilibrium(assemble(mesh, conn, m, rho), apply_bc(mesh, conn, bc));
}

}  // namespace

TEST(Assemble, ZeroFieldHasZeroEnergy) {
  const auto s = uncracked(0.25, 4);
  for (double rho : {0.0, 1e-8, 1.0}) {
    const auto sys = assemble(s.mesh, s.conn, unit, rho);
    EXPECT_EQ(sys.energy(Eigen::VectorXd::Zero(sys.size())), 0.0);
  }
}

TEST(Assemble, AffineFieldEnergyIsAreaTimesDensity) {
  const auto s = uncracked(0.125, 8);
  const Mat2 a = (Mat2() << 0.03, -0.02, 0.05, 0.1).finished();
  const auto u = affine_guess(s.mesh, s.conn, BoundaryCondition{a, Vec2(0.4, -0.1)});
  const double expected = s.mesh.area() * elastic_density(sym_grad(a), unit);
  EXPECT_NEAR(assemble(s.mesh, s.conn, unit, 0.0).elastic_energy(u), expected, 1e-12 * expected);
  EXPECT_NEAR(elastic_energy(s.mesh, s.conn, u, unit), expected, 1e-12 * expected);
}

TEST(Assemble, RigidRotationHasZeroEnergy) {
  const auto s = uncracked(0.25, 4);
  const auto u = affine_guess(s.mesh, s.conn, BoundaryCondition{(Mat2() << 0, -0.3, 0.3, 0).finished(), Vec2(1, 2)});
  EXPECT_NEAR(assemble(s.mesh, s.conn, unit, 0.0).elastic_energy(u), 0.0, 1e-13);
}

TEST(Assemble, DegenerateTriangleThrows) {
  auto s = uncracked(1.0 / 3.0, 2);
  s.mesh.nodes[s.mesh.triangles[0][1]] = s.mesh.nodes[s.mesh.triangles[0][0]];
  EXPECT_THROW(assemble(s.mesh, s.conn, unit, 0.0), std::invalid_argument);
}

TEST(Equilibrium, AffineBoundaryDataGivesAffineSolution) {
  const auto s = uncracked(0.125, 8);
  const BoundaryCondition bc{(Mat2() << 0.1, 0.02, -0.03, 0.05).finished(), Vec2(0.01, 0.0)};
  const auto sys = assemble(s.mesh, s.conn, unit, 0.0);
  const auto pinned = apply_bc(s.mesh, s.conn, bc);
  SolverOptions tight;
  tight.tolerance = 1e-12;
  const Eigen::VectorXd start = affine_guess(s.mesh, s.conn, bc);
  // Cold start at a tight tolerance, and the warm start used by the minimizers.
  for (const auto& u : {equilibrium(sys, pinned, tight), equilibrium(sys, pinned, SolverOptions{}, &start)}) {
    for (std::size_t c = 0; c < s.conn.copy_count(); ++c)
      EXPECT_LT((u.at(c) - bc(s.mesh.nodes[s.conn.copy_node[c]])).norm(), 1e-10);
    EXPECT_LE(u.residual, 1e-8);
  }
}

TEST(Equilibrium, DefaultToleranceMeetsItsResidualTarget) {
  const auto s = uncracked(0.125, 8);
  const auto u = solve(s.mesh, s.conn, fixture::uniaxial_y(0.1));
  EXPECT_LE(u.residual, 1e-8);
  EXPECT_GT(u.iterations, 0u);
}

TEST(Equilibrium, ZeroLoadGivesZeroFieldForAnyCrackState) {
  auto s = uncracked(0.25, 4);
  const auto conn = break_edges(s.mesh, CrackState{{}, s.mesh.interior_edges});
  const auto u = solve(s.mesh, conn, BoundaryCondition{});
  EXPECT_EQ(u.values.norm(), 0.0);
  EXPECT_EQ(total_energy(u, CrackState{}, s.mesh, conn, unit).elastic, 0.0);
}

TEST(Equilibrium, FloatingFragmentStaysBounded) {
  auto s = uncracked(1.0 / 3.0, 4);
  const auto& mesh = s.mesh;
  // Cut one interior pixel loose under tension.
  GridPoint g = mesh.grid.front();
  for (const auto& p : mesh.grid) g = std::min(g, p);
  const GridPoint a{g.i + 1, g.j + 1}, b{g.i + 2, g.j + 1}, c{g.i + 2, g.j + 2}, d{g.i + 1, g.j + 2};
  const auto e = [&](GridPoint p, GridPoint q) { return fixture::edge_between(mesh, p, q); };
  const CrackState state{{}, make_edge_set({e(a, b), e(b, c), e(c, d), e(d, a)})};
  const auto conn = break_edges(mesh, state);
  ASSERT_EQ(component_count(mesh, conn), 2u);
  const auto u = solve(mesh, conn, fixture::uniaxial_y(0.1));
  EXPECT_TRUE(u.values.allFinite());
  EXPECT_LT(u.values.lpNorm<Eigen::Infinity>(), 1.0);
  const auto energy = total_energy(u, state, mesh, conn, unit);
  EXPECT_TRUE(std::isfinite(energy.total));
}

TEST(Equilibrium, IterationCapExhaustionCarriesResidual) {
  const auto s = uncracked(0.125, 8);
  SolverOptions options;
  options.max_iterations = 2;
  try {
    equilibrium(assemble(s.mesh, s.conn, unit, 1e-8), apply_bc(s.mesh, s.conn, fixture::uniaxial_y(0.1)), options);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_GT(e.residual(), 1e-8);
  }
}

TEST(Equilibrium, MinimizesAgainstRandomPerturbations) {
  auto s = uncracked(0.25, 4);
  const auto lattice = s.lattice;
  const auto pre = fixture::precrack_edges(s.mesh, lattice, fixture::mid_segment());
  const auto conn = break_edges(s.mesh, CrackState{pre, {}});
  const auto sys = assemble(s.mesh, conn, unit, 1e-8);
  const auto bc = apply_bc(s.mesh, conn, fixture::uniaxial_y(0.1));
  const auto u = equilibrium(sys, bc);
  EXPECT_LE(u.residual, 1e-8);
  std::mt19937 rng(3);
  std::normal_distribution<double> nd(0.0, 1e-3);
  const double e0 = sys.energy(u.values);
  for (int k = 0; k < 10; ++k) {
    Eigen::VectorXd v = u.values;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (!bc.pinned[static_cast<std::size_t>(i)]) v[i] += nd(rng);
    EXPECT_GE(sys.energy(v), e0);
  }
}

TEST(Equilibrium, EnergyScalesQuadraticallyWithLoad) {
  auto s = uncracked(0.25, 4);
  const auto pre = fixture::precrack_edges(s.mesh, s.lattice, fixture::mid_segment());
  const auto conn = break_edges(s.mesh, CrackState{pre, {}});
  const BoundaryCondition bc{(Mat2() << 0.02, 0.01, 0.0, 0.1).finished(), Vec2(0.0, 0.01)};
  SolverOptions tight;
  tight.tolerance = 1e-12;
  const auto sys = assemble(s.mesh, conn, unit, 0.0);
  const auto energy = [&](const BoundaryCondition& b) {
    return elastic_energy(s.mesh, conn, equilibrium(sys, apply_bc(s.mesh, conn, b), tight).values, unit);
  };
  const double e1 = energy(bc);
  for (double t : {0.5, 2.0, 3.7}) EXPECT_NEAR(energy(bc.scaled(t)), t * t * e1, 1e-9 * t * t * e1);
}

TEST(TotalEnergy, SurfaceCountsEmergentEdgesOnly) {
  // One cell of side 0.5 at resolution 4: h = 0.125.
  const auto lattice = build_lattice(Domain{Vec2(-0.1, -0.1), 0.7, 0.7}, 0.5);
  ASSERT_EQ(lattice.size(), 1u);
  const auto mesh = build_grid(lattice, 4);
  ASSERT_EQ(mesh.h, 0.125);
  std::vector<std::size_t> straight;
  for (std::size_t e : mesh.interior_edges)
    if (mesh.edges[e].length == mesh.h) straight.push_back(e);
  ASSERT_GE(straight.size(), 3u);
  const CrackState state{{}, make_edge_set({straight[0], straight[1], straight[2]})};
  const auto conn = break_edges(mesh, state);
  const DisplacementField zero{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(conn.dof_count())), 0.0, 0};
  const Material g2{1.0, 1.0, 2.0};
  EXPECT_DOUBLE_EQ(total_energy(zero, state, mesh, conn, g2).surface, 0.75);

  const CrackState only_pre{state.emergent, {}};
  const auto e = total_energy(zero, only_pre, mesh, break_edges(mesh, only_pre), g2);
  EXPECT_EQ(e.surface, 0.0);
  EXPECT_EQ(e.total, e.elastic);
}

TEST(TotalEnergy, UniaxialOnUnitArea) {
  // Domain chosen so the single cell is the unit square.
  const auto lattice = build_lattice(Domain{Vec2(-1, -1), 3, 3}, 1.0);
  ASSERT_EQ(lattice.size(), 1u);
  const auto mesh = build_grid(lattice, 4);
  const auto conn = break_edges(mesh, CrackState{});
  const auto u = solve(mesh, conn, fixture::uniaxial_x(0.1), 0.0);
  EXPECT_NEAR(total_energy(u, CrackState{}, mesh, conn, unit).elastic, 0.015, 1e-12);
}

TEST(TotalEnergy, RejectsMismatchedField) {
  const auto s = uncracked(1.0 / 3.0, 2);
  const DisplacementField wrong{Eigen::VectorXd::Zero(4), 0.0, 0};
  EXPECT_THROW(total_energy(wrong, CrackState{}, s.mesh, s.conn, unit), std::invalid_argument);
}
