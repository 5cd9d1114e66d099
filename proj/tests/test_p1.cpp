#include "support.hpp"

#include <mixed_gpe/gpe_solver.hpp>
#include <mixed_gpe/mesh.hpp>
#include <mixed_gpe/p1_bracket.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace mixed_gpe;

TEST(Conforming, SingleInteriorVertex) {
  // eight-element start: the origin is the only DOF, shared by all triangles
  auto mesh = friedrichs_keller(8.0, 2, true);
  const auto ops = assemble_p1(mesh, PotentialSpec{ConstantPotential{0.0}, 0.0});
  ASSERT_EQ(ops.num_dofs(), 1);
  EXPECT_DOUBLE_EQ(ops.stiffness.coeff(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(ops.mass.coeff(0, 0), 128.0 / 3.0);
  const auto r = p1_ground_state(ops, 0.0, SolverConfig{});
  EXPECT_DOUBLE_EQ(r.lambda_upper, 3.0 / 32.0);
  EXPECT_DOUBLE_EQ(r.energy_upper, 3.0 / 64.0);
}

TEST(Conforming, NoInteriorVertexIsAnError) {
  EXPECT_THROW(assemble_p1(friedrichs_keller(1.0, 1, false), PotentialSpec{ConstantPotential{0.0}, 0.0}), InvalidConfiguration);
}

TEST(Conforming, QuarticRuleIsExact) {
  std::mt19937_64 rng(12);
  auto mesh = red_refine(friedrichs_keller(8.0, 2, true), 2);
  const auto ops = assemble_p1(mesh, PotentialSpec{HarmonicPotential{}, 0.0});
  const Vector u = test_support::random_vector(ops.num_dofs(), rng);
  const double e4 = p1_energy(ops, 7.0, u, 4);
  const double e8 = p1_energy(ops, 7.0, u, 8);
  EXPECT_NEAR(e4, e8, 1e-12 * e8);
}

TEST(Conforming, MatricesAreSymmetricPositive) {
  auto mesh = red_refine(friedrichs_keller(8.0, 2, true), 2);
  const auto ops = assemble_p1(mesh, PotentialSpec{HarmonicPotential{}, 0.0});
  for (const SparseMatrix* a : {&ops.stiffness, &ops.mass, &ops.potential_mass}) {
    const test_support::Dense d(*a);
    EXPECT_LT((d - d.transpose()).norm(), 1e-14 * d.norm());
  }
  EXPECT_NO_THROW(chol(ops.stiffness));
  EXPECT_NO_THROW(chol(ops.mass));
}

TEST(Conforming, EnergyDecreasesUnderRefinement) {
  // nested spaces with a level-independent potential
  MeshPtr mesh = red_refine(friedrichs_keller(8.0, 1, false));
  SolverConfig cfg;
  cfg.shift_enabled = true;
  double prev = 1e300;
  for (int level = 1; level <= 5; ++level) {
    const auto ops = assemble_p1(mesh, PotentialSpec{ConstantPotential{1.0}, 1.0});
    const auto r = p1_ground_state(ops, 1.0, cfg);
    EXPECT_LT(r.energy_upper, prev);
    EXPECT_LE(r.residual_l2, 1e-10);
    EXPECT_GT(r.coefficients.sum(), 0.0);
    EXPECT_NEAR(r.coefficients.dot(ops.mass * r.coefficients), 1.0, 1e-12);
    prev = r.energy_upper;
    mesh = red_refine(mesh);
  }
}

TEST(Conforming, BracketsTheMixedEnergy) {
  MeshPtr mesh = red_refine(friedrichs_keller(8.0, 1, false), 3);
  SolverConfig cfg;
  cfg.shift_enabled = true;
  const PotentialSpec p{ConstantPotential{1.0}, 1.0};
  const auto mixed = ground_state(assemble(mesh, p), cfg);
  const auto upper = p1_ground_state(assemble_p1(mesh, p), 1.0, cfg);
  EXPECT_LE(lower_bound(mixed.state.energy_h, mesh_size(*mesh)), upper.energy_upper);
}
