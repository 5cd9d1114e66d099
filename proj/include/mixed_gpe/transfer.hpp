#pragma once

// Exact prolongation across red refinement and errors against a reference
// solution on a finer mesh of the same hierarchy.

#include <mixed_gpe/errors.hpp>
#include <mixed_gpe/fem_core.hpp>
#include <mixed_gpe/mesh.hpp>

#include <cmath>
#include <vector>

namespace mixed_gpe {

namespace detail {

inline const TriMesh& checked_parent(const TriMesh& fine, Eigen::Index coarse_size, bool per_element) {
  if (!fine.parent()) throw LineageError("mesh has no parent");
  const TriMesh& coarse = *fine.parent();
  const Eigen::Index expected = per_element ? coarse.num_triangles() : coarse.num_facets();
  if (coarse_size != expected) throw LineageError("vector does not live on the parent mesh");
  return coarse;
}

} // namespace detail

/// Children inherit the value of their parent triangle.
inline Vector prolong_p0(const Vector& coarse, const TriMesh& fine) {
  detail::checked_parent(fine, coarse.size(), true);
  Vector out(fine.num_triangles());
  const auto& parent = fine.child_to_parent();
  for (int t = 0; t < fine.num_triangles(); ++t) out[t] = coarse[parent[t]];
  return out;
}

/// Normal components of the coarse flux field on the fine facets. A fine
/// facet lies inside one parent triangle or on a parent facet, where the
/// normal component is continuous, so any incident child identifies the
/// field; the parent field is affine, so its midpoint value is the facet mean.
inline Vector prolong_rt0(const Vector& coarse, const TriMesh& fine) {
  const TriMesh& cm = detail::checked_parent(fine, coarse.size(), false);
  Vector out(fine.num_facets());
  const auto& parent = fine.child_to_parent();
  for (int f = 0; f < fine.num_facets(); ++f) {
    const int child = fine.facet_triangles(f)[0];
    const Point v = rt0_value(cm, coarse, parent[child], fine.facet_midpoint(f));
    const Point n = fine.facet_normal(f);
    out[f] = v[0] * n[0] + v[1] * n[1];
  }
  return out;
}

/// Linear interpolation of vertex values; relies on red_refine numbering the
/// midpoint of coarse facet f as vertex num_vertices() + f.
inline Vector prolong_p1(const Vector& coarse_vertices, const TriMesh& fine) {
  if (!fine.parent()) throw LineageError("mesh has no parent");
  const TriMesh& cm = *fine.parent();
  if (coarse_vertices.size() != cm.num_vertices()) throw LineageError("vector does not live on the parent mesh");
  Vector out(fine.num_vertices());
  out.head(cm.num_vertices()) = coarse_vertices;
  for (int f = 0; f < cm.num_facets(); ++f)
    out[cm.num_vertices() + f] = 0.5 * (coarse_vertices[cm.facet(f)[0]] + coarse_vertices[cm.facet(f)[1]]);
  return out;
}

/// Meshes from `fine` up to and including `coarse`, finest first.
inline std::vector<const TriMesh*> lineage(const TriMesh& fine, const TriMesh& coarse) {
  std::vector<const TriMesh*> chain{&fine};
  while (chain.back() != &coarse) {
    const auto& p = chain.back()->parent();
    if (!p) throw LineageError("reference mesh is not a red refinement of the coarse mesh");
    chain.push_back(p.get());
  }
  return chain;
}

struct ErrorNorms {
  double err_u_l2 = 0.0;
  double err_sigma_l2 = 0.0;
  double err_energy = 0.0;
  double err_lambda = 0.0;
};

/// Prolongs (u_h, sigma_h) to the reference mesh, aligns the sign with the
/// reference and measures the L2 errors there; energy and eigenvalue errors
/// are absolute differences.
inline ErrorNorms error_vs_reference(const MixedState& coarse, const TriMesh& coarse_mesh, const MixedState& ref,
                                     const AssembledOperators& ref_ops) {
  const auto chain = lineage(*ref_ops.mesh, coarse_mesh);
  Vector u = coarse.u;
  Vector sigma = coarse.sigma;
  for (auto it = chain.rbegin() + 1; it != chain.rend(); ++it) {
    u = prolong_p0(u, **it);
    sigma = prolong_rt0(sigma, **it);
  }
  if (u.dot(ref_ops.m0.cwiseProduct(ref.u)) < 0.0) {
    u = -u;
    sigma = -sigma;
  }
  const Vector du = u - ref.u;
  const Vector ds = sigma - ref.sigma;
  ErrorNorms e;
  e.err_u_l2 = std::sqrt(du.dot(ref_ops.m0.cwiseProduct(du)));
  e.err_sigma_l2 = std::sqrt(std::max(0.0, ds.dot(ref_ops.b * ds)));
  e.err_energy = std::abs(coarse.energy_h - ref.energy_h);
  e.err_lambda = std::abs(coarse.lambda_h - ref.lambda_h);
  return e;
}

/// log2 of the error ratio between two consecutive levels.
inline double observed_order(double err_coarse, double err_fine) { return std::log2(err_coarse / err_fine); }

} // namespace mixed_gpe
