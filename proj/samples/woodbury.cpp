// Applying (D + C^T B^{-1} C)^{-1} without forming B^{-1}.

#include <mixed_gpe/fem_core.hpp>
#include <mixed_gpe/linalg.hpp>
#include <mixed_gpe/mesh.hpp>

#include <cstdio>

int main() {
  using namespace mixed_gpe;
  const auto ops = assemble(red_refine(friedrichs_keller(1.0, 4, false), 2), {ConstantPotential{0.0}, 0.0});

  WoodburySolver solver(ops.b, ops.c);
  const Vector d = ops.m0 * 10.0;
  solver.set_diagonal(d);
  const Vector rhs = ops.m0;
  const Vector x = solver.apply(rhs);

  // residual of the original system, applied through B
  const auto bfac = chol(ops.b);
  const Vector ax = d.cwiseProduct(x) + ops.c.transpose() * bfac.solve(ops.c * x);
  std::printf("unknowns %ld, relative residual %.2e\n", static_cast<long>(x.size()), (ax - rhs).norm() / rhs.norm());
  return 0;
}
