#pragma once

// Symmetric triangle quadrature rules in barycentric coordinates. Weights sum
// to one; multiply by the triangle area.

#include <mixed_gpe/errors.hpp>
#include <mixed_gpe/mesh.hpp>

#include <array>
#include <span>
#include <string>
#include <vector>

namespace mixed_gpe {

struct QuadPoint {
  std::array<double, 3> bary;
  double weight;
};

namespace detail {

inline void add_orbit3(std::vector<QuadPoint>& q, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  q.push_back({{b, a, a}, w});
  q.push_back({{a, b, a}, w});
  q.push_back({{a, a, b}, w});
}

inline void add_orbit6(std::vector<QuadPoint>& q, double a, double b, double w) {
  const double c = 1.0 - a - b;
  q.push_back({{a, b, c}, w});
  q.push_back({{a, c, b}, w});
  q.push_back({{b, a, c}, w});
  q.push_back({{b, c, a}, w});
  q.push_back({{c, a, b}, w});
  q.push_back({{c, b, a}, w});
}

inline std::vector<QuadPoint> make_rule(int degree) {
  std::vector<QuadPoint> q;
  switch (degree) {
  case 2:
    // edge midpoints
    q.push_back({{0.0, 0.5, 0.5}, 1.0 / 3.0});
    q.push_back({{0.5, 0.0, 0.5}, 1.0 / 3.0});
    q.push_back({{0.5, 0.5, 0.0}, 1.0 / 3.0});
    break;
  case 4:
    add_orbit3(q, 0.44594849091596488632, 0.22338158967801146570);
    add_orbit3(q, 0.09157621350977074346, 0.10995174365532186764);
    break;
  case 8:
    q.push_back({{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 0.14431560767778716825});
    add_orbit3(q, 0.45929258829272315603, 0.095091634267284624794);
    add_orbit3(q, 0.17056930775176020662, 0.10321737053471825028);
    add_orbit3(q, 0.050547228317030975458, 0.032458497623198080311);
    add_orbit6(q, 0.0083947774099576053372, 0.26311282963463811342, 0.027230314174434994265);
    break;
  default:
    throw InvalidConfiguration("no triangle quadrature rule of degree " + std::to_string(degree));
  }
  return q;
}

} // namespace detail

/// Rules of degree 2 (3 edge midpoints), 4 (6 points) and 8 (16 points).
inline std::span<const QuadPoint> triangle_rule(int degree) {
  static const std::vector<QuadPoint> r2 = detail::make_rule(2);
  static const std::vector<QuadPoint> r4 = detail::make_rule(4);
  static const std::vector<QuadPoint> r8 = detail::make_rule(8);
  switch (degree) {
  case 2: return r2;
  case 4: return r4;
  case 8: return r8;
  default: throw InvalidConfiguration("no triangle quadrature rule of degree " + std::to_string(degree));
  }
}

inline Point map_to_triangle(const TriMesh& m, int t, const std::array<double, 3>& bary) {
  const auto& tri = m.triangle(t);
  Point x{0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    x[0] += bary[i] * m.vertex(tri[i])[0];
    x[1] += bary[i] * m.vertex(tri[i])[1];
  }
  return x;
}

/// Integral of f over triangle t with the rule of the given degree.
template <class F>
double integrate_on(const TriMesh& m, int t, F&& f, int degree) {
  double s = 0.0;
  for (const auto& qp : triangle_rule(degree)) s += qp.weight * f(map_to_triangle(m, t, qp.bary));
  return s * m.area(t);
}

} // namespace mixed_gpe
