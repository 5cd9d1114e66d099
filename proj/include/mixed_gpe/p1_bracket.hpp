#pragma once

// Conforming P1 ground states on the same meshes. The conforming energy is
// minimized over a subspace of H^1_0, so its value at any normalized P1
// function bounds the exact ground state energy from above.

#include <mixed_gpe/errors.hpp>
#include <mixed_gpe/gpe_solver.hpp>
#include <mixed_gpe/linalg.hpp>
#include <mixed_gpe/mesh.hpp>
#include <mixed_gpe/potentials.hpp>
#include <mixed_gpe/quadrature.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

namespace mixed_gpe {

/// P1 matrices restricted to interior vertices (homogeneous Dirichlet data).
struct P1Operators {
  MeshPtr mesh;
  /// Interior DOF of each vertex, -1 on the boundary.
  std::vector<int> dof_of_vertex;
  std::vector<int> vertex_of_dof;
  SparseMatrix stiffness;
  SparseMatrix mass;
  /// sum_K V_K int_K phi_i phi_j
  SparseMatrix potential_mass;
  /// Value slots of the element blocks in the shared pattern, 9 per triangle
  /// (row-major local i, j); -1 where a boundary vertex is involved.
  std::vector<std::array<Eigen::Index, 9>> element_slots;

  [[nodiscard]] int num_dofs() const { return static_cast<int>(vertex_of_dof.size()); }

  /// Vertex values, zero on the boundary.
  [[nodiscard]] Vector expand(const Vector& dofs) const {
    Vector full = Vector::Zero(static_cast<Eigen::Index>(dof_of_vertex.size()));
    for (int d = 0; d < num_dofs(); ++d) full[vertex_of_dof[d]] = dofs[d];
    return full;
  }

  [[nodiscard]] Vector restrict_to_dofs(const Vector& full) const {
    Vector dofs(num_dofs());
    for (int d = 0; d < num_dofs(); ++d) dofs[d] = full[vertex_of_dof[d]];
    return dofs;
  }
};

namespace detail {

/// Gradients of the three hat functions on triangle t.
inline std::array<Point, 3> hat_gradients(const TriMesh& m, int t) {
  const auto& tri = m.triangle(t);
  const double two_area = 2.0 * m.area(t);
  std::array<Point, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Point& a = m.vertex(tri[(i + 1) % 3]);
    const Point& b = m.vertex(tri[(i + 2) % 3]);
    g[i] = {(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area};
  }
  return g;
}

} // namespace detail

inline P1Operators assemble_p1(const MeshPtr& mesh, const Vector& element_potential) {
  const TriMesh& m = *mesh;
  if (element_potential.size() != m.num_triangles())
    throw InvalidConfiguration("assemble_p1: potential must have one value per triangle");
  P1Operators ops;
  ops.mesh = mesh;
  const auto on_boundary = m.boundary_vertices();
  ops.dof_of_vertex.assign(static_cast<std::size_t>(m.num_vertices()), -1);
  for (int v = 0; v < m.num_vertices(); ++v)
    if (!on_boundary[v]) {
      ops.dof_of_vertex[v] = static_cast<int>(ops.vertex_of_dof.size());
      ops.vertex_of_dof.push_back(v);
    }
  const int n = ops.num_dofs();
  if (n == 0) throw InvalidConfiguration("assemble_p1: mesh has no interior vertex");

  std::vector<Triplet> k_entries, m_entries, v_entries;
  k_entries.reserve(9 * static_cast<std::size_t>(m.num_triangles()));
  m_entries.reserve(k_entries.capacity());
  v_entries.reserve(k_entries.capacity());
  for (int t = 0; t < m.num_triangles(); ++t) {
    const double area = m.area(t);
    if (!(area > 0.0)) throw AssemblyError("degenerate or clockwise triangle " + std::to_string(t));
    const auto g = detail::hat_gradients(m, t);
    const auto& tri = m.triangle(t);
    for (int i = 0; i < 3; ++i) {
      const int di = ops.dof_of_vertex[tri[i]];
      if (di < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int dj = ops.dof_of_vertex[tri[j]];
        if (dj < 0) continue;
        const double mass = area * (i == j ? 1.0 / 6.0 : 1.0 / 12.0);
        k_entries.emplace_back(di, dj, area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]));
        m_entries.emplace_back(di, dj, mass);
        v_entries.emplace_back(di, dj, element_potential[t] * mass);
      }
    }
  }
  ops.stiffness = pattern_from(n, n, k_entries);
  ops.mass = pattern_from(n, n, m_entries);
  ops.potential_mass = pattern_from(n, n, v_entries);

  ops.element_slots.resize(static_cast<std::size_t>(m.num_triangles()));
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangle(t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const int di = ops.dof_of_vertex[tri[i]], dj = ops.dof_of_vertex[tri[j]];
        ops.element_slots[t][3 * i + j] = (di < 0 || dj < 0) ? -1 : value_index(ops.mass, di, dj);
      }
  }
  return ops;
}

inline P1Operators assemble_p1(const MeshPtr& mesh, const PotentialSpec& p) {
  return assemble_p1(mesh, l2_project_potential(*mesh, p));
}

/// Conforming energy 1/2 |grad u|^2 + 1/2 (V u, u) + kappa/4 |u|_{L^4}^4. The
/// quartic term uses the rule of the given degree (4 is exact).
inline double p1_energy(const P1Operators& ops, double kappa, const Vector& dofs, int degree = 4) {
  const double quad = dofs.dot(ops.stiffness * dofs) + dofs.dot(ops.potential_mass * dofs);
  const Vector full = ops.expand(dofs);
  const TriMesh& m = *ops.mesh;
  double quartic = 0.0;
  const auto rule = triangle_rule(degree);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangle(t);
    double s = 0.0;
    for (const auto& q : rule) {
      const double uh = q.bary[0] * full[tri[0]] + q.bary[1] * full[tri[1]] + q.bary[2] * full[tri[2]];
      s += q.weight * uh * uh * uh * uh;
    }
    quartic += s * m.area(t);
  }
  return 0.5 * quad + 0.25 * kappa * quartic;
}

/// Algebraic form of the conforming problem for the shared iteration.
class P1Problem {
public:
  P1Problem(const P1Operators& ops, double kappa)
      : ops_(ops), kappa_(kappa), mass_factor_(chol(ops.mass)), linear_(ops.stiffness + ops.potential_mass) {
    work_ = ops.mass;
  }

  [[nodiscard]] Vector mass(const Vector& v) const { return ops_.mass * v; }
  [[nodiscard]] Vector mass_solve(const Vector& r) const { return mass_factor_.solve(r); }
  [[nodiscard]] double energy(const Vector& u) const { return p1_energy(ops_, kappa_, u); }
  [[nodiscard]] double kappa() const { return kappa_; }

  [[nodiscard]] Vector apply(const Vector& u) const { return linear_ * u + kappa_ * nonlinear_load(u); }

  /// int u_h^3 phi_i, exact with the degree-4 rule.
  [[nodiscard]] Vector nonlinear_load(const Vector& u) const {
    const TriMesh& m = *ops_.mesh;
    const Vector full = ops_.expand(u);
    Vector out = Vector::Zero(u.size());
    const auto rule = triangle_rule(4);
    for (int t = 0; t < m.num_triangles(); ++t) {
      const auto& tri = m.triangle(t);
      std::array<double, 3> acc{0.0, 0.0, 0.0};
      for (const auto& q : rule) {
        const double uh = q.bary[0] * full[tri[0]] + q.bary[1] * full[tri[1]] + q.bary[2] * full[tri[2]];
        for (int i = 0; i < 3; ++i) acc[i] += q.weight * uh * uh * uh * q.bary[i];
      }
      for (int i = 0; i < 3; ++i) {
        const int d = ops_.dof_of_vertex[tri[i]];
        if (d >= 0) out[d] += acc[i] * m.area(t);
      }
    }
    return out;
  }

  Vector inverse_step(const Vector& u, const Vector& rhs) {
    build_operator(u, 1.0, 0.0);
    if (!spd_) spd_ = std::make_unique<SpdFactor>(work_);
    else spd_->refactor(work_);
    return spd_->solve(rhs);
  }

  /// (K + M_V + 3 kappa N(u) - sigma M) x = r for r in {rhs, load}.
  std::optional<std::pair<Vector, Vector>> shifted_solve(const Vector& u, double sigma, const Vector& rhs,
                                                        const Vector& load) {
    build_operator(u, 3.0, sigma);
    try {
      shifted_.factor(work_);
      return std::make_pair(shifted_.solve(rhs), shifted_.solve(load));
    } catch (const Error&) {
      return std::nullopt;
    }
  }

private:
  /// work = K + M_V + factor * kappa N(u) - sigma M, N(u)_ij = int u_h^2 phi_i phi_j.
  void build_operator(const Vector& u, double factor, double sigma) {
    const TriMesh& m = *ops_.mesh;
    const Vector full = ops_.expand(u);
    double* w = work_.valuePtr();
    const double* k = ops_.stiffness.valuePtr();
    const double* mv = ops_.potential_mass.valuePtr();
    const double* mm = ops_.mass.valuePtr();
    for (Eigen::Index s = 0; s < work_.nonZeros(); ++s) w[s] = k[s] + mv[s] - sigma * mm[s];
    const auto rule = triangle_rule(4);
    const double c = factor * kappa_;
    if (c == 0.0) return;
    for (int t = 0; t < m.num_triangles(); ++t) {
      const auto& tri = m.triangle(t);
      std::array<double, 9> block{};
      for (const auto& q : rule) {
        const double uh = q.bary[0] * full[tri[0]] + q.bary[1] * full[tri[1]] + q.bary[2] * full[tri[2]];
        const double wq = q.weight * uh * uh;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) block[3 * i + j] += wq * q.bary[i] * q.bary[j];
      }
      const double scale = c * m.area(t);
      for (int s = 0; s < 9; ++s) {
        const Eigen::Index slot = ops_.element_slots[t][s];
        if (slot >= 0) w[slot] += scale * block[s];
      }
    }
  }

  const P1Operators& ops_;
  double kappa_;
  SpdFactor mass_factor_;
  SparseMatrix linear_;
  SparseMatrix work_;
  std::unique_ptr<SpdFactor> spd_;
  SymmetricSolver shifted_;
};

struct P1Result {
  /// Interior DOF values of the L2-normalized minimizer.
  Vector coefficients;
  double energy_upper = 0.0;
  double lambda_upper = 0.0;
  double residual_l2 = 0.0;
  int iterations = 0;
  double wall_ms = 0.0;
};

/// Conforming ground state on interior DOFs; the returned energy is a
/// guaranteed upper bound for the problem with the assembled potential.
inline P1Result p1_ground_state(const P1Operators& ops, double kappa, const SolverConfig& cfg,
                                const Vector* initial = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  P1Problem problem(ops, kappa);
  Vector u0 = initial ? *initial : initial_guess(ops.num_dofs(), cfg);
  if (u0.size() != ops.num_dofs()) throw InvalidConfiguration("initial guess has the wrong size");
  auto result = detail::minimize_on_sphere(problem, std::move(u0), cfg);
  P1Result out;
  if (result.u.sum() < 0.0) result.u = -result.u;
  out.energy_upper = p1_energy(ops, kappa, result.u);
  out.lambda_upper = result.lambda;
  out.residual_l2 = result.residual;
  out.iterations = result.iterations;
  out.coefficients = std::move(result.u);
  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

} // namespace mixed_gpe
