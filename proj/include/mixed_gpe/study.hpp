#pragma once

// Multi-level experiments: convergence against a refined reference and
// energy brackets per level, plus the CSV layout shared by both.

#include <mixed_gpe/errors.hpp>
#include <mixed_gpe/fem_core.hpp>
#include <mixed_gpe/gpe_solver.hpp>
#include <mixed_gpe/mesh.hpp>
#include <mixed_gpe/p1_bracket.hpp>
#include <mixed_gpe/potentials.hpp>
#include <mixed_gpe/transfer.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace mixed_gpe {

struct ExperimentConfig {
  /// harmonic, constant, disorder, linear or custom.
  std::string preset = "harmonic";
  double half_width = 8.0;
  int initial_n = 2;
  bool symmetric = true;
  int first_level = 1;
  int last_level = 5;
  /// Refinements of the finest level that give the reference mesh.
  int reference_extra = 2;
  double kappa = 1000.0;
  double constant_value = 1.0;
  double disorder_epsilon = 1.0 / 64.0;
  std::uint64_t disorder_seed = 1;
  /// Nonzero: the harmonic potential is frozen to its cell means on an
  /// n x n grid instead of being projected on every level.
  int harmonic_cells = 0;
  /// Cell table used by the custom preset.
  CellGrid custom_grid;
  SolverConfig solver = [] {
    SolverConfig s;
    s.shift_enabled = true;
    return s;
  }();
  /// Worker threads; with two or more the conforming solves run beside the mixed chain.
  int threads = 1;

  void check() const {
    if (first_level < 0 || last_level < first_level) throw InvalidConfiguration("levels must satisfy 0 <= first <= last");
    if (last_level > 12) throw InvalidConfiguration("levels above 12 are not supported");
    if (reference_extra < 1) throw InvalidConfiguration("reference_extra must be at least 1");
    if (initial_n < 1) throw InvalidConfiguration("initial mesh needs n >= 1");
    if (!(half_width > 0.0)) throw InvalidConfiguration("half_width must be positive");
    if (!(kappa >= 0.0)) throw InvalidConfiguration("kappa must be nonnegative");
    if (harmonic_cells < 0) throw InvalidConfiguration("harmonic_cells must be nonnegative");
    if (threads < 1) throw InvalidConfiguration("threads must be positive");
    if (preset != "harmonic" && preset != "constant" && preset != "disorder" && preset != "linear" &&
        preset != "custom")
      throw InvalidConfiguration("unknown preset '" + preset + "'");
    if (preset == "constant" && !(constant_value >= 0.0)) throw InvalidConfiguration("constant potential must be >= 0");
    if (preset == "disorder") disorder_cells_per_axis(disorder_epsilon, half_width);
    if (preset == "custom") {
      validate(custom_grid);
      if (std::abs(custom_grid.half_width - half_width) > 1e-12 * half_width)
        throw InvalidConfiguration("custom grid does not cover the domain");
    }
    solver.check();
  }

  [[nodiscard]] PotentialSpec potential() const {
    PotentialSpec p;
    p.kappa = kappa;
    if (preset == "harmonic") {
      if (harmonic_cells > 0) p.kind = harmonic_cell_grid(half_width, harmonic_cells);
      else p.kind = HarmonicPotential{};
    } else if (preset == "constant") {
      p.kind = ConstantPotential{constant_value};
    } else if (preset == "linear") {
      p.kind = ConstantPotential{0.0};
      p.kappa = 0.0;
    } else if (preset == "disorder") {
      p.kind = DisorderPotential{disorder_epsilon, half_width, disorder_seed};
    } else {
      p.kind = custom_grid;
    }
    return p;
  }
};

/// Named presets. `bounds` selects the variant used by the bracket study.
inline ExperimentConfig preset_config(const std::string& name, bool bounds = false) {
  ExperimentConfig c;
  c.preset = name;
  if (name == "harmonic") {
    if (bounds) {
      c.harmonic_cells = 16;
      c.first_level = 3;
      c.last_level = 7;
    }
  } else if (name == "linear") {
    c.kappa = 0.0;
    c.first_level = 1;
    c.last_level = 6;
  } else if (name == "constant") {
    c.kappa = 1.0;
    c.constant_value = 1.0;
    c.initial_n = 1;
    c.symmetric = false;
    c.first_level = 1;
    c.last_level = 6;
  } else if (name == "disorder") {
    c.half_width = 1.0;
    c.disorder_epsilon = 1.0 / 64.0;
    c.initial_n = 128;
    c.symmetric = false;
    c.kappa = 1.0;
    c.first_level = 0;
    c.last_level = 1;
    c.solver.initial_noise = 0.1;
    c.solver.seed = 1;
  } else {
    throw InvalidConfiguration("unknown preset '" + name + "'");
  }
  return c;
}

/// One CSV row.
struct ConvergenceRecord {
  int level = 0;
  double h = 0.0;
  int n_elements = 0;
  double energy_h = 0.0;
  double energy_pp = 0.0;
  double energy_upper = 0.0;
  double lambda_h = 0.0;
  double err_u_l2 = std::numeric_limits<double>::quiet_NaN();
  double err_sigma_l2 = std::numeric_limits<double>::quiet_NaN();
  double err_energy = std::numeric_limits<double>::quiet_NaN();
  double err_lambda = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double wall_ms = 0.0;
};

struct OrderRecord {
  int coarse_level = 0;
  int fine_level = 0;
  double u_l2 = 0.0;
  double sigma_l2 = 0.0;
  double energy = 0.0;
  double lambda = 0.0;
};

struct LevelSolution {
  MeshPtr mesh;
  MixedState state;
  int iterations = 0;
  double wall_ms = 0.0;
  P1Result upper;
};

struct StudyResult {
  std::vector<ConvergenceRecord> records;
  std::vector<OrderRecord> orders;
  std::vector<LevelSolution> levels;
  /// Present for convergence studies.
  MixedState reference;
  int reference_level = -1;
};

inline constexpr const char* csv_header =
    "level,h,n_elements,E_h,E_h_pp,E_upper,lambda_h,err_u_L2,err_sigma_L2,err_E,err_lambda,iters,wall_ms";

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Meshes of levels 0..last of the configured hierarchy.
inline std::vector<MeshPtr> hierarchy(const ExperimentConfig& cfg, int last) {
  std::vector<MeshPtr> meshes{friedrichs_keller(cfg.half_width, cfg.initial_n, cfg.symmetric)};
  for (int l = 1; l <= last; ++l) meshes.push_back(red_refine(meshes.back()));
  return meshes;
}

/// Nested mixed solves on levels first..last; each level starts from the
/// prolonged solution of the previous one. Returns the operators of the last level.
inline AssembledOperators mixed_chain(const std::vector<MeshPtr>& meshes, int first, int last,
                                      const PotentialSpec& pot, const SolverConfig& cfg,
                                      std::vector<LevelSolution>& out) {
  AssembledOperators ops;
  Vector prev;
  for (int l = first; l <= last; ++l) {
    ops = assemble(meshes[l], pot);
    Vector guess;
    if (prev.size()) guess = prolong_p0(prev, *meshes[l]);
    SolveReport rep = ground_state(ops, cfg, prev.size() ? &guess : nullptr);
    prev = rep.state.u;
    out.push_back({meshes[l], std::move(rep.state), rep.iterations, rep.wall_ms, {}});
  }
  return ops;
}

inline std::vector<P1Result> conforming_chain(const std::vector<MeshPtr>& meshes, int first, int last,
                                              const PotentialSpec& pot, const SolverConfig& cfg) {
  std::vector<P1Result> out;
  Vector prev_vertices;
  for (int l = first; l <= last; ++l) {
    const P1Operators ops = assemble_p1(meshes[l], pot);
    Vector guess;
    const bool nested = prev_vertices.size() > 0 && ops.num_dofs() > 0;
    if (nested) guess = ops.restrict_to_dofs(prolong_p1(prev_vertices, *meshes[l]));
    if (nested && guess.cwiseAbs().maxCoeff() == 0.0) guess.setOnes();
    if (ops.num_dofs() == 0) throw InvalidConfiguration("level " + std::to_string(l) + " has no interior vertices");
    P1Result r = p1_ground_state(ops, pot.kappa, cfg, nested ? &guess : nullptr);
    prev_vertices = ops.expand(r.coefficients);
    out.push_back(std::move(r));
  }
  return out;
}

/// Runs the conforming chain on a worker thread when allowed, the mixed
/// work on the calling thread.
template <class MixedWork>
std::vector<P1Result> with_conforming(int threads, const std::vector<MeshPtr>& meshes, int first, int last,
                                      const PotentialSpec& pot, const SolverConfig& cfg, MixedWork&& mixed) {
  std::vector<P1Result> upper;
  if (threads < 2) {
    mixed();
    return conforming_chain(meshes, first, last, pot, cfg);
  }
  std::exception_ptr failure;
  std::thread worker([&] {
    try {
      upper = conforming_chain(meshes, first, last, pot, cfg);
    } catch (...) {
      failure = std::current_exception();
    }
  });
  try {
    mixed();
  } catch (...) {
    worker.join();
    throw;
  }
  worker.join();
  if (failure) std::rethrow_exception(failure);
  return upper;
}

inline ConvergenceRecord base_record(const LevelSolution& s) {
  ConvergenceRecord r;
  r.level = s.mesh->level();
  r.h = mesh_size(*s.mesh);
  r.n_elements = s.mesh->num_triangles();
  r.energy_h = s.state.energy_h;
  r.energy_pp = lower_bound(s.state.energy_h, r.h);
  r.energy_upper = s.upper.energy_upper;
  r.lambda_h = s.state.lambda_h;
  r.iterations = s.iterations;
  r.wall_ms = s.wall_ms;
  return r;
}

} // namespace detail

/// Levels first..last, reference on last + reference_extra, errors and orders.
inline StudyResult run_convergence(const ExperimentConfig& cfg) {
  cfg.check();
  const PotentialSpec pot = cfg.potential();
  const int ref_level = cfg.last_level + cfg.reference_extra;
  const auto meshes = detail::hierarchy(cfg, ref_level);
  StudyResult result;
  std::vector<LevelSolution> chain;
  AssembledOperators ref_ops;
  auto upper = detail::with_conforming(cfg.threads, meshes, cfg.first_level, cfg.last_level, pot, cfg.solver,
                                       [&] { ref_ops = detail::mixed_chain(meshes, cfg.first_level, ref_level, pot,
                                                                           cfg.solver, chain); });
  result.reference = chain.back().state;
  result.reference_level = ref_level;
  chain.resize(static_cast<std::size_t>(cfg.last_level - cfg.first_level + 1));
  for (std::size_t i = 0; i < chain.size(); ++i) {
    chain[i].upper = std::move(upper[i]);
    ConvergenceRecord r = detail::base_record(chain[i]);
    const ErrorNorms e = error_vs_reference(chain[i].state, *chain[i].mesh, result.reference, ref_ops);
    r.err_u_l2 = e.err_u_l2;
    r.err_sigma_l2 = e.err_sigma_l2;
    r.err_energy = e.err_energy;
    r.err_lambda = e.err_lambda;
    result.records.push_back(r);
  }
  for (std::size_t i = 1; i < result.records.size(); ++i) {
    const auto& a = result.records[i - 1];
    const auto& b = result.records[i];
    result.orders.push_back({a.level, b.level, observed_order(a.err_u_l2, b.err_u_l2),
                             observed_order(a.err_sigma_l2, b.err_sigma_l2),
                             observed_order(a.err_energy, b.err_energy),
                             observed_order(a.err_lambda, b.err_lambda)});
  }
  result.levels = std::move(chain);
  return result;
}

/// Energies and bounds on levels first..last; error columns stay NaN.
inline StudyResult run_lowerbound(const ExperimentConfig& cfg) {
  cfg.check();
  const PotentialSpec pot = cfg.potential();
  const auto meshes = detail::hierarchy(cfg, cfg.last_level);
  StudyResult result;
  std::vector<LevelSolution> chain;
  auto upper = detail::with_conforming(cfg.threads, meshes, cfg.first_level, cfg.last_level, pot, cfg.solver, [&] {
    detail::mixed_chain(meshes, cfg.first_level, cfg.last_level, pot, cfg.solver, chain);
  });
  for (std::size_t i = 0; i < chain.size(); ++i) {
    chain[i].upper = std::move(upper[i]);
    result.records.push_back(detail::base_record(chain[i]));
  }
  result.levels = std::move(chain);
  return result;
}

/// Single level with its conforming partner.
inline LevelSolution run_single(const ExperimentConfig& cfg, int level) {
  cfg.check();
  if (level < 0) throw InvalidConfiguration("level must be nonnegative");
  const PotentialSpec pot = cfg.potential();
  const auto meshes = detail::hierarchy(cfg, level);
  std::vector<LevelSolution> chain;
  auto upper = detail::with_conforming(cfg.threads, meshes, level, level, pot, cfg.solver, [&] {
    detail::mixed_chain(meshes, level, level, pot, cfg.solver, chain);
  });
  chain[0].upper = std::move(upper[0]);
  return std::move(chain[0]);
}

inline void write_csv(std::ostream& os, const std::vector<ConvergenceRecord>& records) {
  using detail::fmt_double;
  os << csv_header << '\n';
  for (const auto& r : records) {
    os << r.level << ',' << fmt_double(r.h) << ',' << r.n_elements << ',' << fmt_double(r.energy_h) << ','
       << fmt_double(r.energy_pp) << ',' << fmt_double(r.energy_upper) << ',' << fmt_double(r.lambda_h) << ','
       << fmt_double(r.err_u_l2) << ',' << fmt_double(r.err_sigma_l2) << ',' << fmt_double(r.err_energy) << ','
       << fmt_double(r.err_lambda) << ',' << r.iterations << ',' << fmt_double(r.wall_ms) << '\n';
  }
}

inline void write_orders(std::ostream& os, const std::vector<OrderRecord>& orders) {
  using detail::fmt_double;
  os << "level_coarse,level_fine,order_u_L2,order_sigma_L2,order_E,order_lambda\n";
  for (const auto& o : orders)
    os << o.coarse_level << ',' << o.fine_level << ',' << fmt_double(o.u_l2) << ',' << fmt_double(o.sigma_l2)
       << ',' << fmt_double(o.energy) << ',' << fmt_double(o.lambda) << '\n';
}

/// Element barycenters and values, one "x y u" line per element.
inline void write_state(std::ostream& os, const TriMesh& m, const Vector& u) {
  char buf[96];
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Point c = m.barycenter(t);
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", c[0], c[1], u[t]);
    os << buf;
  }
}

} // namespace mixed_gpe
