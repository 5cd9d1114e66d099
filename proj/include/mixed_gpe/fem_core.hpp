#pragma once

// Lowest-order Raviart-Thomas / piecewise-constant pair on a TriMesh.
//
// Basis of the flux space: on a triangle K with facet F opposite vertex p_F,
//   phi_F(x) = s(K,F) |F| / (2|K|) (x - p_F),
// so phi_F . n_F = 1 on F and div phi_F = s(K,F) |F| / |K| on K. The
// coefficient of a flux field on F is its (constant) normal component along
// the global normal n_F.
//
// Algebraic images:
//   B[F,G] = (phi_F, phi_G)           facets x facets, SPD
//   C[F,K] = int_K div phi_F          facets x triangles, = s(K,F) |F|
//   M0[K]  = |K|
// The discrete gradient g = G_h v solves B g = -C v.

#include <mixed_gpe/errors.hpp>
#include <mixed_gpe/linalg.hpp>
#include <mixed_gpe/mesh.hpp>
#include <mixed_gpe/potentials.hpp>
#include <mixed_gpe/quadrature.hpp>

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace mixed_gpe {

struct AssembledOperators {
  MeshPtr mesh;
  SparseMatrix b;
  SparseMatrix c;
  Vector m0;
  /// Element values of the projected potential.
  Vector pot;
  double kappa = 0.0;

  [[nodiscard]] Eigen::Index num_elements() const { return m0.size(); }
  [[nodiscard]] Eigen::Index num_facets() const { return b.rows(); }
};

/// Discrete ground-state data in algebraic form.
struct MixedState {
  Vector u;            ///< element coefficients of u_h
  Vector sigma;        ///< facet coefficients of G_h u_h
  double lambda_h = 0.0;
  double energy_h = 0.0;
  double residual_l2 = 0.0;
};

/// Value of the RT0 basis function attached to local facet i of triangle t.
inline Point rt0_basis(const TriMesh& m, int t, int i, const Point& x) {
  const int f = m.facets_of_triangle(t)[i];
  const Point& p = m.vertex(m.triangle(t)[i]);
  const double scale = m.facet_signs(t)[i] * m.facet_length(f) / (2.0 * m.area(t));
  return {scale * (x[0] - p[0]), scale * (x[1] - p[1])};
}

/// Evaluates the flux field with facet coefficients `coeffs` inside triangle t.
inline Point rt0_value(const TriMesh& m, const Vector& coeffs, int t, const Point& x) {
  Point v{0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    const Point phi = rt0_basis(m, t, i, x);
    const double a = coeffs[m.facets_of_triangle(t)[i]];
    v[0] += a * phi[0];
    v[1] += a * phi[1];
  }
  return v;
}

/// Element means of f computed with the quadrature rule of the given degree.
template <class F>
Vector p0_project(const TriMesh& m, F&& f, int degree) {
  Vector out(m.num_triangles());
  for (int t = 0; t < m.num_triangles(); ++t) out[t] = integrate_on(m, t, f, degree) / m.area(t);
  return out;
}

/// Index of the grid cell containing triangle t; throws if t straddles cells.
inline std::array<int, 2> containing_cell(const TriMesh& m, const CellGrid& g, int t) {
  const Point c = m.barycenter(t);
  const int i = static_cast<int>(std::floor((c[0] + g.half_width) / g.cell));
  const int j = static_cast<int>(std::floor((c[1] + g.half_width) / g.cell));
  if (i < 0 || j < 0 || i >= g.nx || j >= g.ny)
    throw AlignmentError("element barycenter outside the potential grid");
  const double x0 = -g.half_width + i * g.cell, y0 = -g.half_width + j * g.cell;
  const double slack = 1e-12 * g.half_width;
  for (int v : m.triangle(t)) {
    const Point& p = m.vertex(v);
    if (p[0] < x0 - slack || p[0] > x0 + g.cell + slack || p[1] < y0 - slack || p[1] > y0 + g.cell + slack)
      throw AlignmentError("element " + std::to_string(t) + " straddles a potential cell boundary");
  }
  return {i, j};
}

/// Element values pi_h V. The harmonic mean uses the edge-midpoint rule,
/// exact for quadratics; grid potentials are looked up per element.
inline Vector l2_project_potential(const TriMesh& m, const PotentialSpec& p) {
  struct Visitor {
    const TriMesh& m;
    Vector operator()(const HarmonicPotential&) const {
      return p0_project(m, [](const Point& x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); }, 2);
    }
    Vector operator()(const ConstantPotential& c) const { return Vector::Constant(m.num_triangles(), c.value); }
    Vector operator()(const DisorderPotential& d) const {
      return (*this)(disorder_field(d.epsilon, d.half_width, d.seed));
    }
    Vector operator()(const CellGrid& g) const {
      validate(g);
      Vector out(m.num_triangles());
      for (int t = 0; t < m.num_triangles(); ++t) {
        const auto [i, j] = containing_cell(m, g, t);
        out[t] = g.at(i, j);
      }
      return out;
    }
  };
  return std::visit(Visitor{m}, p.kind);
}

inline AssembledOperators assemble(const MeshPtr& mesh, const PotentialSpec& p) {
  const TriMesh& m = *mesh;
  const int nt = m.num_triangles();
  const int nf = m.num_facets();
  AssembledOperators ops;
  ops.mesh = mesh;
  ops.kappa = p.kappa;
  ops.m0.resize(nt);

  std::vector<Triplet> b_entries, c_entries;
  b_entries.reserve(9 * static_cast<std::size_t>(nt));
  c_entries.reserve(3 * static_cast<std::size_t>(nt));
  const auto rule = triangle_rule(2);
  for (int t = 0; t < nt; ++t) {
    const double area = m.area(t);
    if (!(area > 0.0)) throw AssemblyError("degenerate or clockwise triangle " + std::to_string(t));
    ops.m0[t] = area;
    const auto& fo = m.facets_of_triangle(t);
    const auto& sg = m.facet_signs(t);
    std::array<Point, 3> qx;
    for (std::size_t q = 0; q < 3; ++q) qx[q] = map_to_triangle(m, t, rule[q].bary);
    for (int i = 0; i < 3; ++i) {
      c_entries.emplace_back(fo[i], t, sg[i] * m.facet_length(fo[i]));
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (std::size_t q = 0; q < 3; ++q) {
          const Point a = rt0_basis(m, t, i, qx[q]);
          const Point b = rt0_basis(m, t, j, qx[q]);
          s += rule[q].weight * (a[0] * b[0] + a[1] * b[1]);
        }
        b_entries.emplace_back(fo[i], fo[j], s * area);
      }
    }
  }
  ops.b.resize(nf, nf);
  ops.b.setFromTriplets(b_entries.begin(), b_entries.end());
  ops.b.makeCompressed();
  ops.c.resize(nf, nt);
  ops.c.setFromTriplets(c_entries.begin(), c_entries.end());
  ops.c.makeCompressed();
  ops.pot = l2_project_potential(m, p);
  return ops;
}

/// Coefficients of G_h v: the solution of B g = -C v.
inline Vector discrete_gradient(const AssembledOperators& ops, const Vector& v, const SpdFactor& bfac) {
  return bfac.solve(-(ops.c * v));
}

/// sum_K |K| v_K^4
inline double l4_norm4(const AssembledOperators& ops, const Vector& v) {
  return (ops.m0.array() * v.array().square().square()).sum();
}

/// E_h(v) = 1/2 |G_h v|^2 + 1/2 (V v, v) + kappa/4 |v|_{L^4}^4 with exact integrals.
inline double energy(const AssembledOperators& ops, const Vector& v, const SpdFactor& bfac) {
  const Vector g = discrete_gradient(ops, v, bfac);
  const double grad = g.dot(ops.b * g);
  const double pot = (ops.m0.array() * ops.pot.array() * v.array().square()).sum();
  return 0.5 * grad + 0.5 * pot + 0.25 * ops.kappa * l4_norm4(ops, v);
}

/// L2 projection onto the flux space: B x = r with r_F = int field . phi_F.
template <class Field>
Vector rt0_l2_project(const AssembledOperators& ops, Field&& field, const SpdFactor& bfac, int quad_degree) {
  const TriMesh& m = *ops.mesh;
  Vector r = Vector::Zero(ops.num_facets());
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& fo = m.facets_of_triangle(t);
    for (int i = 0; i < 3; ++i) {
      r[fo[i]] += integrate_on(m, t, [&](const Point& x) {
        const Point w = field(x);
        const Point phi = rt0_basis(m, t, i, x);
        return w[0] * phi[0] + w[1] * phi[1];
      }, quad_degree);
    }
  }
  return bfac.solve(r);
}

} // namespace mixed_gpe
