#include "support.hpp"

#include <mixed_gpe/fem_core.hpp>
#include <mixed_gpe/gpe_solver.hpp>
#include <mixed_gpe/mesh.hpp>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

using namespace mixed_gpe;
using test_support::Dense;

namespace {

MeshPtr harmonic_mesh(int level) { return red_refine(friedrichs_keller(8.0, 2, true), level); }

SolverConfig shifted() {
  SolverConfig c;
  c.shift_enabled = true;
  return c;
}

void expect_structural(const AssembledOperators& ops, const MixedState& s, double tol) {
  const Vector mu = ops.m0.cwiseProduct(s.u);
  EXPECT_NEAR(s.u.dot(mu), 1.0, 1e-12);
  EXPECT_GE(s.u.dot(ops.m0), 0.0);
  // B sigma + C u = 0
  EXPECT_LE((ops.b * s.sigma + ops.c * s.u).norm(), 1e-12 * (ops.c * s.u).norm());
  // -C^T sigma + M0 (kappa u^2 + V) u = lambda M0 u
  const Vector r = -(ops.c.transpose() * s.sigma) +
                   ops.m0.cwiseProduct((ops.kappa * s.u.array().square() + ops.pot.array()).matrix().cwiseProduct(s.u)) -
                   s.lambda_h * mu;
  EXPECT_LE(std::sqrt(r.dot(r.cwiseQuotient(ops.m0))), tol);
  EXPECT_LE(s.residual_l2, 1e-10);
  const double l4 = l4_norm4(ops, s.u);
  EXPECT_NEAR(s.lambda_h, 2.0 * s.energy_h + 0.5 * ops.kappa * l4, 1e-10 * std::max(1.0, s.lambda_h));
}

} // namespace

TEST(GroundState, LinearCaseIsSmallestEigenpair) {
  const auto ops = assemble(harmonic_mesh(2), {HarmonicPotential{}, 0.0});
  const auto rep = ground_state(ops, SolverConfig{});
  Dense a = test_support::dense_schur(ops);
  a += Dense(ops.m0.cwiseProduct(ops.pot).asDiagonal());
  Eigen::GeneralizedSelfAdjointEigenSolver<Dense> es(a, Dense(ops.m0.asDiagonal()));
  EXPECT_NEAR(rep.state.lambda_h, es.eigenvalues()[0], 1e-10);
  EXPECT_NEAR(rep.state.energy_h, 0.5 * es.eigenvalues()[0], 1e-10);
  expect_structural(ops, rep.state, 1e-9);
}

TEST(GroundState, StructuralResidualsAcrossKappa) {
  for (double kappa : {1.0, 10.0, 100.0, 1000.0}) {
    const auto ops = assemble(harmonic_mesh(2), {HarmonicPotential{}, kappa});
    const auto rep = ground_state(ops, shifted());
    expect_structural(ops, rep.state, 1e-9);
  }
}

TEST(GroundState, ShiftDoesNotChangeTheLimit) {
  const auto ops = assemble(harmonic_mesh(2), {HarmonicPotential{}, 100.0});
  const auto plain = ground_state(ops, SolverConfig{});
  const auto fast = ground_state(ops, shifted());
  EXPECT_LE(fast.iterations, plain.iterations);
  EXPECT_NEAR(plain.state.energy_h, fast.state.energy_h, 1e-11);
  EXPECT_LT((plain.state.u - fast.state.u).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(GroundState, EnergyDecreasesAlongTheDampedPhase) {
  const auto ops = assemble(harmonic_mesh(2), {HarmonicPotential{}, 1000.0});
  const auto rep = ground_state(ops, SolverConfig{});
  for (std::size_t k = 1; k < rep.trace.size(); ++k)
    if (rep.trace[k - 1].residual > 1e-2) {
      EXPECT_LE(rep.trace[k].energy, rep.trace[k - 1].energy);
    }
}

TEST(GroundState, PointSymmetricOnSymmetricMesh) {
  auto mesh = harmonic_mesh(3);
  const auto ops = assemble(mesh, {HarmonicPotential{}, 1000.0});
  const auto rep = ground_state(ops, shifted());
  std::map<std::pair<long, long>, int> by_center;
  auto key = [](const Point& p) { return std::make_pair(std::lround(p[0] * 3e6), std::lround(p[1] * 3e6)); };
  for (int t = 0; t < mesh->num_triangles(); ++t) by_center[key(mesh->barycenter(t))] = t;
  for (int t = 0; t < mesh->num_triangles(); ++t) {
    const Point c = mesh->barycenter(t);
    const int s = by_center.at(key({-c[0], -c[1]}));
    EXPECT_NEAR(rep.state.u[t], rep.state.u[s], 1e-8);
  }
}

TEST(GroundState, RepulsionSpreadsTheMass) {
  auto mesh = harmonic_mesh(3);
  double prev = 0.0;
  for (double kappa : {10.0, 100.0, 1000.0}) {
    const auto ops = assemble(mesh, {HarmonicPotential{}, kappa});
    const auto rep = ground_state(ops, shifted());
    double moment = 0.0;
    for (int t = 0; t < mesh->num_triangles(); ++t) {
      const Point c = mesh->barycenter(t);
      moment += ops.m0[t] * rep.state.u[t] * rep.state.u[t] * (c[0] * c[0] + c[1] * c[1]);
    }
    const double radius = std::sqrt(moment);
    EXPECT_GT(radius, prev);
    prev = radius;
  }
}

TEST(GroundState, SeededNoiseIsReproducible) {
  SolverConfig cfg = shifted();
  cfg.initial_noise = 0.2;
  cfg.seed = 17;
  EXPECT_EQ(initial_guess(50, cfg), initial_guess(50, cfg));
  SolverConfig other = cfg;
  other.seed = 18;
  EXPECT_NE(initial_guess(50, cfg), initial_guess(50, other));
  const auto ops = assemble(harmonic_mesh(2), {HarmonicPotential{}, 10.0});
  const auto a = ground_state(ops, cfg);
  const auto b = ground_state(ops, cfg);
  EXPECT_EQ(a.state.u, b.state.u);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(GroundState, ReportsNonConvergenceWithTrace) {
  const auto ops = assemble(harmonic_mesh(2), {HarmonicPotential{}, 1000.0});
  SolverConfig cfg;
  cfg.max_iters = 2;
  try {
    (void)ground_state(ops, cfg);
    FAIL() << "expected a solver error";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), SolverError::Kind::NonConvergence);
    EXPECT_EQ(e.trace().size(), 3u);
  }
}

TEST(GroundState, RejectsBadConfiguration) {
  const auto ops = assemble(harmonic_mesh(0), {HarmonicPotential{}, 1.0});
  SolverConfig cfg;
  cfg.backtrack_factor = 1.5;
  EXPECT_THROW(ground_state(ops, cfg), InvalidConfiguration);
  cfg = SolverConfig{};
  const Vector wrong = Vector::Ones(3);
  EXPECT_THROW(ground_state(ops, cfg, &wrong), InvalidConfiguration);
}

TEST(LowerBound, ClosedForm) {
  EXPECT_DOUBLE_EQ(lower_bound(1.0, std::numbers::pi / 2.0), 0.5);
  EXPECT_DOUBLE_EQ(lower_bound(3.0, 0.0), 3.0);
  EXPECT_LT(lower_bound(2.0, 0.1), 2.0);
}
