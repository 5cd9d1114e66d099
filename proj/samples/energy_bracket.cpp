// Lower and upper bounds for the constant potential V = 1, kappa = 1 on
// successive levels.

#include <mixed_gpe/fem_core.hpp>
#include <mixed_gpe/gpe_solver.hpp>
#include <mixed_gpe/mesh.hpp>
#include <mixed_gpe/p1_bracket.hpp>
#include <mixed_gpe/transfer.hpp>

#include <cstdio>

int main() {
  using namespace mixed_gpe;
  const PotentialSpec pot{ConstantPotential{1.0}, 1.0};
  SolverConfig cfg;
  cfg.shift_enabled = true;

  MeshPtr mesh = red_refine(friedrichs_keller(8.0, 1, false));
  Vector previous;
  std::printf("%5s %16s %16s %16s\n", "level", "lower", "E_h", "upper");
  for (int level = 1; level <= 5; ++level) {
    const auto ops = assemble(mesh, pot);
    Vector guess;
    if (previous.size()) guess = prolong_p0(previous, *mesh);
    const auto mixed = ground_state(ops, cfg, previous.size() ? &guess : nullptr);
    previous = mixed.state.u;

    const auto upper = p1_ground_state(assemble_p1(mesh, pot), pot.kappa, cfg);
    std::printf("%5d %16.12f %16.12f %16.12f\n", level, lower_bound(mixed.state.energy_h, mesh_size(*mesh)),
                mixed.state.energy_h, upper.energy_upper);
    mesh = red_refine(mesh);
  }
  return 0;
}
