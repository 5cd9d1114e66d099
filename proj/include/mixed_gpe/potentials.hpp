#pragma once

// Trapping potentials and the interaction constant.

#include <mixed_gpe/errors.hpp>
#include <mixed_gpe/mesh.hpp>

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace mixed_gpe {

/// V(x) = |x|^2 / 2.
struct HarmonicPotential {};

struct ConstantPotential {
  double value = 1.0;
};

/// Piecewise-constant potential on a uniform grid of square cells covering
/// (-L, L)^2. values are row-major with row 0 at y = -L and column 0 at x = -L.
struct CellGrid {
  int nx = 0;
  int ny = 0;
  double half_width = 1.0;
  double cell = 1.0;
  std::vector<double> values;

  [[nodiscard]] double at(int i, int j) const { return values[static_cast<std::size_t>(j) * nx + i]; }
};

/// Coin-flip potential on squares of side epsilon, drawn from `seed`.
struct DisorderPotential {
  double epsilon = 1.0 / 64.0;
  double half_width = 1.0;
  std::uint64_t seed = 1;
};

struct PotentialSpec {
  std::variant<HarmonicPotential, ConstantPotential, DisorderPotential, CellGrid> kind;
  double kappa = 0.0;
};

inline std::string potential_name(const PotentialSpec& p) {
  struct Visitor {
    std::string operator()(const HarmonicPotential&) const { return "harmonic"; }
    std::string operator()(const ConstantPotential&) const { return "constant"; }
    std::string operator()(const DisorderPotential&) const { return "disorder"; }
    std::string operator()(const CellGrid&) const { return "custom"; }
  };
  return std::visit(Visitor{}, p.kind);
}

inline void validate(const CellGrid& g) {
  if (g.nx < 1 || g.ny < 1) throw InvalidConfiguration("cell grid: empty");
  if (!(g.cell > 0.0) || !(g.half_width > 0.0)) throw InvalidConfiguration("cell grid: nonpositive size");
  const double width = 2.0 * g.half_width;
  if (std::abs(g.nx * g.cell - width) > 1e-12 * width || std::abs(g.ny * g.cell - width) > 1e-12 * width)
    throw InvalidConfiguration("cell grid: cells do not tile (-L, L)^2");
  if (g.values.size() != static_cast<std::size_t>(g.nx) * g.ny)
    throw InvalidConfiguration("cell grid: expected nx*ny values");
}

/// Number of cells per axis, checked to be an exact power of two.
inline int disorder_cells_per_axis(double epsilon, double half_width) {
  if (!(epsilon > 0.0) || !(half_width > 0.0)) throw InvalidConfiguration("disorder: nonpositive size");
  const double ratio = 2.0 * half_width / epsilon;
  const double rounded = std::round(ratio);
  const auto n = static_cast<std::int64_t>(rounded);
  if (ratio != rounded || n < 1 || (n & (n - 1)) != 0 || n > (1 << 14))
    throw InvalidConfiguration("disorder: 2L/epsilon must be a power of two");
  return static_cast<int>(n);
}

inline double disorder_high_value(double epsilon, double half_width) {
  const double s = 2.0 * epsilon * half_width;
  return 1.0 + 1.0 / (s * s);
}

/// Coin-flip field: each cell independently takes 1 or 1 + (2 eps L)^{-2}.
///
/// Draws come from std::mt19937_64 (the standard 64-bit Mersenne Twister,
/// whose output sequence is fixed by the C++ standard); each cell uses the
/// top bit of one draw, cells in row-major order.
inline CellGrid disorder_field(double epsilon, double half_width, std::uint64_t seed) {
  const int n = disorder_cells_per_axis(epsilon, half_width);
  CellGrid g{n, n, half_width, epsilon, {}};
  g.values.resize(static_cast<std::size_t>(n) * n);
  const double high = disorder_high_value(epsilon, half_width);
  std::mt19937_64 rng(seed);
  for (auto& v : g.values) v = (rng() >> 63) ? high : 1.0;
  return g;
}

/// Cell means of |x|^2/2 on an n x n grid over (-L, L)^2.
inline CellGrid harmonic_cell_grid(double half_width, int n) {
  if (n < 1) throw InvalidConfiguration("harmonic cell grid: need at least one cell");
  CellGrid g{n, n, half_width, 2.0 * half_width / n, {}};
  g.values.resize(static_cast<std::size_t>(n) * n);
  auto mean_sq = [](double a, double b) { return (a * a + a * b + b * b) / 3.0; };
  for (int j = 0; j < n; ++j) {
    const double y0 = -half_width + j * g.cell, y1 = y0 + g.cell;
    for (int i = 0; i < n; ++i) {
      const double x0 = -half_width + i * g.cell, x1 = x0 + g.cell;
      g.values[static_cast<std::size_t>(j) * n + i] = 0.5 * (mean_sq(x0, x1) + mean_sq(y0, y1));
    }
  }
  return g;
}

/// Cell grid behind a disorder or custom potential.
inline CellGrid cell_grid_of(const PotentialSpec& p) {
  if (const auto* d = std::get_if<DisorderPotential>(&p.kind)) return disorder_field(d->epsilon, d->half_width, d->seed);
  if (const auto* g = std::get_if<CellGrid>(&p.kind)) return *g;
  throw InvalidConfiguration("potential has no cell grid");
}

/// Text format: header "nx ny L eps", then nx*ny row-major values.
inline CellGrid read_cell_grid(std::istream& is) {
  CellGrid g;
  if (!(is >> g.nx >> g.ny >> g.half_width >> g.cell)) throw InvalidConfiguration("cell grid: bad header");
  if (g.nx < 1 || g.ny < 1 || g.nx > (1 << 14) || g.ny > (1 << 14))
    throw InvalidConfiguration("cell grid: bad dimensions");
  g.values.resize(static_cast<std::size_t>(g.nx) * g.ny);
  for (auto& v : g.values)
    if (!(is >> v)) throw InvalidConfiguration("cell grid: expected nx*ny values");
  validate(g);
  return g;
}

inline void write_cell_grid(std::ostream& os, const CellGrid& g) {
  os.precision(17);
  os << g.nx << ' ' << g.ny << ' ' << g.half_width << ' ' << g.cell << '\n';
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) os << (i ? " " : "") << g.at(i, j);
    os << '\n';
  }
}

} // namespace mixed_gpe
