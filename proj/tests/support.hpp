#pragma once

// Dense reference computations shared by the unit and acceptance tests.

#include <mixed_gpe/fem_core.hpp>
#include <mixed_gpe/linalg.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace test_support {

using Dense = Eigen::MatrixXd;
using mixed_gpe::Vector;

inline Dense dense(const mixed_gpe::SparseMatrix& a) { return Dense(a); }

/// C^T B^{-1} C, computed with a dense LU.
inline Dense dense_schur(const mixed_gpe::AssembledOperators& ops) {
  const Dense b = dense(ops.b);
  const Dense c = dense(ops.c);
  return c.transpose() * b.fullPivLu().solve(c);
}

/// E_h(v) from dense matrices.
inline double dense_energy(const mixed_gpe::AssembledOperators& ops, const Vector& v) {
  const Dense s = dense_schur(ops);
  double e = 0.5 * v.dot(s * v);
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const double vk2 = v[k] * v[k];
    e += 0.5 * ops.m0[k] * ops.pot[k] * vk2 + 0.25 * ops.kappa * ops.m0[k] * vk2 * vk2;
  }
  return e;
}

inline Dense random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Dense a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  return a * a.transpose() + n * Dense::Identity(n, n);
}

inline mixed_gpe::SparseMatrix to_sparse(const Dense& a) { return a.sparseView(); }

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

/// Minimizes the dense energy on {v^T M0 v = 1} by Riemannian gradient
/// descent with Armijo backtracking, from one start vector.
inline double dense_sphere_minimum(const mixed_gpe::AssembledOperators& ops, const Dense& schur, Vector v,
                                   int max_iters = 200000) {
  const Vector& m = ops.m0;
  auto energy = [&](const Vector& w) {
    double e = 0.5 * w.dot(schur * w);
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      const double w2 = w[k] * w[k];
      e += 0.5 * m[k] * ops.pot[k] * w2 + 0.25 * ops.kappa * m[k] * w2 * w2;
    }
    return e;
  };
  auto normalize = [&](const Vector& w) { return Vector(w / std::sqrt(w.dot(m.cwiseProduct(w)))); };
  v = normalize(v);
  double e = energy(v);
  for (int it = 0; it < max_iters; ++it) {
    Vector grad = schur * v;
    for (Eigen::Index k = 0; k < v.size(); ++k)
      grad[k] += m[k] * ops.pot[k] * v[k] + ops.kappa * m[k] * v[k] * v[k] * v[k];
    // M0-gradient projected onto the tangent space of the sphere.
    Vector dir = grad.cwiseQuotient(m);
    dir -= v * v.dot(m.cwiseProduct(dir));
    const double slope = dir.dot(m.cwiseProduct(dir));
    if (slope < 1e-30) break;
    double t = 1.0 / (1.0 + std::abs(v.dot(grad)));
    Vector next;
    double e_next = 0.0;
    for (int k = 0; k < 60; ++k) {
      next = normalize(v - t * dir);
      e_next = energy(next);
      if (e_next <= e - 1e-4 * t * slope) break;
      t *= 0.5;
    }
    if (!(e_next < e)) break;
    v = next;
    e = e_next;
  }
  return e;
}

} // namespace test_support
