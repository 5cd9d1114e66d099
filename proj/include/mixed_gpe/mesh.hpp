#pragma once

// Conforming triangulations of the square (-L, L)^2 with facet topology.
//
// Conventions:
//  * triangles are counter-clockwise;
//  * facet i of a triangle is the edge opposite its local vertex i;
//  * facets are stored as (a, b) with a < b, and the global unit normal of a
//    facet is the 90 degree counter-clockwise rotation of (v_b - v_a)/|v_b - v_a|;
//  * facet_sign(t, i) = +1 when the global normal of facet i points out of t.

#include <mixed_gpe/errors.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <ostream>
#include <unordered_map>
#include <vector>

namespace mixed_gpe {

using Point = std::array<double, 2>;

class TriMesh {
public:
  /// Builds the facet topology for the given vertices and counter-clockwise triangles.
  TriMesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles,
          int level = 0, std::shared_ptr<const TriMesh> parent = nullptr,
          std::vector<int> child_to_parent = {})
      : vertices_(std::move(vertices)), triangles_(std::move(triangles)), level_(level),
        parent_(std::move(parent)), child_to_parent_(std::move(child_to_parent)) {
    build_topology();
  }

  [[nodiscard]] int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
  [[nodiscard]] int num_triangles() const noexcept { return static_cast<int>(triangles_.size()); }
  [[nodiscard]] int num_facets() const noexcept { return static_cast<int>(facets_.size()); }

  [[nodiscard]] const std::vector<Point>& vertices() const noexcept { return vertices_; }
  [[nodiscard]] const Point& vertex(int v) const { return vertices_[v]; }
  [[nodiscard]] const std::vector<std::array<int, 3>>& triangles() const noexcept { return triangles_; }
  [[nodiscard]] const std::array<int, 3>& triangle(int t) const { return triangles_[t]; }
  [[nodiscard]] const std::array<int, 2>& facet(int f) const { return facets_[f]; }
  [[nodiscard]] const std::array<int, 3>& facets_of_triangle(int t) const { return facet_of_triangle_[t]; }
  [[nodiscard]] const std::array<int, 3>& facet_signs(int t) const { return facet_sign_[t]; }
  /// Incident triangles of a facet; the second entry is -1 on the boundary.
  [[nodiscard]] const std::array<int, 2>& facet_triangles(int f) const { return facet_triangles_[f]; }
  [[nodiscard]] bool is_boundary_facet(int f) const { return facet_triangles_[f][1] < 0; }

  [[nodiscard]] int level() const noexcept { return level_; }
  [[nodiscard]] const std::shared_ptr<const TriMesh>& parent() const noexcept { return parent_; }
  [[nodiscard]] const std::vector<int>& child_to_parent() const noexcept { return child_to_parent_; }

  /// Signed area; positive for counter-clockwise triangles.
  [[nodiscard]] double area(int t) const {
    const auto& [a, b, c] = triangles_[t];
    const Point& p = vertices_[a];
    const Point& q = vertices_[b];
    const Point& r = vertices_[c];
    return 0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]));
  }

  [[nodiscard]] double facet_length(int f) const {
    const Point& p = vertices_[facets_[f][0]];
    const Point& q = vertices_[facets_[f][1]];
    return std::hypot(q[0] - p[0], q[1] - p[1]);
  }

  [[nodiscard]] Point facet_normal(int f) const {
    const Point& p = vertices_[facets_[f][0]];
    const Point& q = vertices_[facets_[f][1]];
    const double len = std::hypot(q[0] - p[0], q[1] - p[1]);
    return {-(q[1] - p[1]) / len, (q[0] - p[0]) / len};
  }

  [[nodiscard]] Point facet_midpoint(int f) const {
    const Point& p = vertices_[facets_[f][0]];
    const Point& q = vertices_[facets_[f][1]];
    return {0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])};
  }

  [[nodiscard]] Point barycenter(int t) const {
    const auto& [a, b, c] = triangles_[t];
    return {(vertices_[a][0] + vertices_[b][0] + vertices_[c][0]) / 3.0,
            (vertices_[a][1] + vertices_[b][1] + vertices_[c][1]) / 3.0};
  }

  /// Longest edge of a triangle, which is its diameter.
  [[nodiscard]] double diameter(int t) const {
    double d = 0.0;
    for (int f : facet_of_triangle_[t]) d = std::max(d, facet_length(f));
    return d;
  }

  /// Vertices that lie on a boundary facet.
  [[nodiscard]] std::vector<bool> boundary_vertices() const {
    std::vector<bool> on(vertices_.size(), false);
    for (int f = 0; f < num_facets(); ++f)
      if (is_boundary_facet(f)) on[facets_[f][0]] = on[facets_[f][1]] = true;
    return on;
  }

private:
  void build_topology() {
    const auto nv = static_cast<std::int64_t>(vertices_.size());
    std::unordered_map<std::int64_t, int> edge_id;
    edge_id.reserve(triangles_.size() * 2);
    facet_of_triangle_.resize(triangles_.size());
    facet_sign_.resize(triangles_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      const auto& tri = triangles_[t];
      for (int v : tri)
        if (v < 0 || v >= nv) throw InvalidConfiguration("triangle references a missing vertex");
      if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
        throw InvalidConfiguration("triangle with repeated vertex");
      for (int i = 0; i < 3; ++i) {
        // local traversal (i+1) -> (i+2) follows the counter-clockwise orientation
        const int from = tri[(i + 1) % 3];
        const int to = tri[(i + 2) % 3];
        const int a = std::min(from, to);
        const int b = std::max(from, to);
        const std::int64_t key = a * nv + b;
        auto [it, inserted] = edge_id.try_emplace(key, static_cast<int>(facets_.size()));
        if (inserted) {
          facets_.push_back({a, b});
          facet_triangles_.push_back({static_cast<int>(t), -1});
        } else {
          auto& inc = facet_triangles_[it->second];
          if (inc[1] >= 0)
            throw InvalidConfiguration("facet shared by more than two triangles");
          inc[1] = static_cast<int>(t);
        }
        facet_of_triangle_[t][i] = it->second;
        // the counter-clockwise rotation of a -> b points outward exactly when
        // the triangle traverses the edge as b -> a
        facet_sign_[t][i] = (from == b) ? 1 : -1;
      }
    }
  }

  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<std::array<int, 2>> facets_;
  std::vector<std::array<int, 3>> facet_of_triangle_;
  std::vector<std::array<int, 3>> facet_sign_;
  std::vector<std::array<int, 2>> facet_triangles_;
  int level_ = 0;
  std::shared_ptr<const TriMesh> parent_;
  std::vector<int> child_to_parent_;
};

using MeshPtr = std::shared_ptr<const TriMesh>;

/// n x n Friedrichs-Keller triangulation of (-L, L)^2.
///
/// Every square is split along its (-,-)->(+,+) diagonal. With `symmetric`
/// set, the squares of the lower-right and upper-left quadrants use the other
/// diagonal, which makes the mesh point symmetric about the origin.
inline MeshPtr friedrichs_keller(double half_width, int n, bool symmetric) {
  if (n < 1) throw InvalidConfiguration("friedrichs_keller: need at least one cell per axis");
  if (!(half_width > 0.0)) throw InvalidConfiguration("friedrichs_keller: half width must be positive");
  if (symmetric && n % 2 != 0)
    throw InvalidConfiguration("friedrichs_keller: the point-symmetric variant needs an even cell count");

  std::vector<Point> vertices;
  vertices.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      vertices.push_back({-half_width + 2.0 * half_width * i / n, -half_width + 2.0 * half_width * j / n});

  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::array<int, 3>> triangles;
  triangles.reserve(2 * static_cast<std::size_t>(n) * n);
  const int half = n / 2;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int p00 = id(i, j), p10 = id(i + 1, j), p01 = id(i, j + 1), p11 = id(i + 1, j + 1);
      const bool flipped = symmetric && ((i >= half) != (j >= half));
      if (!flipped) {
        triangles.push_back({p00, p10, p11});
        triangles.push_back({p00, p11, p01});
      } else {
        triangles.push_back({p00, p10, p01});
        triangles.push_back({p10, p11, p01});
      }
    }
  }
  return std::make_shared<const TriMesh>(std::move(vertices), std::move(triangles));
}

/// Uniform red refinement: each triangle is split into four congruent
/// children through its edge midpoints. The midpoint of facet f becomes
/// vertex num_vertices() + f, so no coordinate comparison is involved.
inline MeshPtr red_refine(const MeshPtr& coarse) {
  const TriMesh& m = *coarse;
  const int nv = m.num_vertices();
  std::vector<Point> vertices = m.vertices();
  vertices.reserve(static_cast<std::size_t>(nv + m.num_facets()));
  for (int f = 0; f < m.num_facets(); ++f) vertices.push_back(m.facet_midpoint(f));

  std::vector<std::array<int, 3>> triangles;
  std::vector<int> parent_of;
  triangles.reserve(4 * static_cast<std::size_t>(m.num_triangles()));
  parent_of.reserve(4 * static_cast<std::size_t>(m.num_triangles()));
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& [v0, v1, v2] = m.triangle(t);
    const auto& fo = m.facets_of_triangle(t);
    const int m0 = nv + fo[0], m1 = nv + fo[1], m2 = nv + fo[2];
    triangles.push_back({v0, m2, m1});
    triangles.push_back({m2, v1, m0});
    triangles.push_back({m1, m0, v2});
    triangles.push_back({m0, m1, m2});
    parent_of.insert(parent_of.end(), 4, t);
  }
  return std::make_shared<const TriMesh>(std::move(vertices), std::move(triangles), m.level() + 1,
                                         coarse, std::move(parent_of));
}

/// Applies red_refine `times` times.
inline MeshPtr red_refine(MeshPtr mesh, int times) {
  for (int k = 0; k < times; ++k) mesh = red_refine(mesh);
  return mesh;
}

/// h = max over triangles of the diameter.
inline double mesh_size(const TriMesh& m) {
  double h = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) h = std::max(h, m.diameter(t));
  return h;
}

/// Plain-text dump: a vertex table followed by a triangle table.
inline void write_mesh(std::ostream& os, const TriMesh& m) {
  os.precision(17);
  os << "vertices " << m.num_vertices() << '\n';
  for (const auto& p : m.vertices()) os << p[0] << ' ' << p[1] << '\n';
  os << "triangles " << m.num_triangles() << '\n';
  for (const auto& t : m.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

} // namespace mixed_gpe
