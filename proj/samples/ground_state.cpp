// Ground state of the harmonic trap on a refined eight-element mesh.
//
//   ./ground_state [level] [kappa]

#include <mixed_gpe/fem_core.hpp>
#include <mixed_gpe/gpe_solver.hpp>
#include <mixed_gpe/mesh.hpp>

#include <cstdio>
#include <cstdlib>

int main(int argc, char** argv) {
  using namespace mixed_gpe;
  const int level = argc > 1 ? std::atoi(argv[1]) : 4;
  const double kappa = argc > 2 ? std::atof(argv[2]) : 1000.0;

  MeshPtr mesh = red_refine(friedrichs_keller(8.0, 2, true), level);
  const AssembledOperators ops = assemble(mesh, {HarmonicPotential{}, kappa});

  SolverConfig cfg;
  cfg.shift_enabled = true;
  const SolveReport rep = ground_state(ops, cfg);

  const double h = mesh_size(*mesh);
  std::printf("elements  %d\n", mesh->num_triangles());
  std::printf("E_h       %.12f\n", rep.state.energy_h);
  std::printf("lower     %.12f\n", lower_bound(rep.state.energy_h, h));
  std::printf("lambda_h  %.12f\n", rep.state.lambda_h);
  std::printf("residual  %.3e after %d iterations\n", rep.state.residual_l2, rep.iterations);
  return 0;
}
