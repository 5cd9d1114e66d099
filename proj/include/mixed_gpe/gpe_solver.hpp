#pragma once

// Discrete ground states of the mixed Gross-Pitaevskii problem.
//
// The minimizer of E_h on the unit L2 sphere satisfies A(u) u = lambda M0 u
// with A(u) = C^T B^{-1} C + D(u), D(u) = diag(|K| (kappa u_K^2 + V_K)).
// The iteration is a damped, normalized inverse iteration
//   u <- normalize((1 - t) u + t normalize(A(u)^{-1} M0 u)),
// where t is chosen by energy-diminishing backtracking while the residual
// is above `damping_threshold`, and t = 1 below it. With `shift_enabled`
// the undamped phase instead applies shifted steps with the Jacobian of
// u -> A(u/|u|) u (see shifted_step below). All solves with A go through the
// Woodbury identity, so only facet-sized sparse SPD systems are factored.

#include <mixed_gpe/errors.hpp>
#include <mixed_gpe/fem_core.hpp>
#include <mixed_gpe/linalg.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mixed_gpe {

struct SolverConfig {
  double tol_residual = 1e-10;
  int max_iters = 500;
  /// Residual level below which damping is switched off.
  double damping_threshold = 1e-2;
  double backtrack_factor = 0.5;
  double backtrack_floor = 0x1p-20;
  /// Smallest admissible value of kappa u_K^2 + V_K entering the Woodbury
  /// diagonal; smaller values are lifted by a uniform shift mu M0.
  double diagonal_floor = 1e-2;
  bool shift_enabled = false;
  /// Amplitude of the seeded uniform perturbation of the constant initial guess.
  double initial_noise = 0.0;
  std::uint64_t seed = 0;

  void check() const {
    if (!(tol_residual > 0.0) || !(damping_threshold > tol_residual) || !(backtrack_factor > 0.0) ||
        !(backtrack_factor < 1.0) || !(backtrack_floor > 0.0) || !(diagonal_floor > 0.0) || max_iters < 1 ||
        initial_noise < 0.0 || initial_noise >= 1.0)
      throw InvalidConfiguration("invalid solver configuration");
  }
};

struct SolveReport {
  MixedState state;
  int iterations = 0;
  std::vector<TracePoint> trace;
  double wall_ms = 0.0;
};

/// Positive constant vector with optional seeded noise in [1 - a, 1 + a].
inline Vector initial_guess(Eigen::Index n, const SolverConfig& cfg) {
  Vector u = Vector::Ones(n);
  if (cfg.initial_noise > 0.0) {
    std::mt19937_64 rng(cfg.seed);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = static_cast<double>(rng() >> 11) * 0x1p-53; // uniform in [0, 1)
      u[i] += cfg.initial_noise * (2.0 * r - 1.0);
    }
  }
  return u;
}

namespace detail {

struct IterationResult {
  Vector u;
  double energy = 0.0;
  double lambda = 0.0;
  double residual = 0.0;
  int iterations = 0;
  std::vector<TracePoint> trace;
};

template <class Problem>
double mass_norm(const Problem& p, const Vector& v) {
  return std::sqrt(v.dot(p.mass(v)));
}

template <class Problem>
Vector normalized(const Problem& p, const Vector& v) {
  return v / mass_norm(p, v);
}

/// lambda(u) = u^T A(u) u and the residual |M^{-1}(A(u)u - lambda M u)|_M for normalized u.
template <class Problem>
std::pair<double, double> rayleigh_and_residual(const Problem& p, const Vector& u) {
  const Vector au = p.apply(u);
  const Vector mu = p.mass(u);
  const double lambda = u.dot(au);
  const Vector r = au - lambda * mu;
  return {lambda, std::sqrt(std::max(0.0, r.dot(p.mass_solve(r))))};
}

/// One shifted step with the Jacobian J(u) of v -> A(v/|v|) v at |u| = 1:
///   J(u) = J0(u) - 2 kappa a (M u)^T,  J0(u) = A(u) + 2 kappa diag-part,
/// where a = nonlinear_load(u). The rank-one term is handled by
/// Sherman-Morrison around the sparse solve with J0(u) - sigma M. Since
/// J(u) u = A(u) u, the ground state is a fixed point, and the contraction
/// improves as sigma approaches the eigenvalue.
template <class Problem>
std::optional<Vector> shifted_step(Problem& p, const Vector& u, double sigma) {
  const Vector mu = p.mass(u);
  const Vector a = p.nonlinear_load(u);
  auto y = p.shifted_solve(u, sigma, mu, a);
  if (!y) return std::nullopt;
  const auto& [sol_rhs, sol_load] = *y;
  const double c = 2.0 * p.kappa();
  const double denom = 1.0 - c * mu.dot(sol_load);
  if (!(std::abs(denom) > 1e-14)) return std::nullopt;
  Vector x = sol_rhs + sol_load * (c * mu.dot(sol_rhs) / denom);
  if (!x.allFinite()) return std::nullopt;
  return x;
}

/// Shared skeleton of the mixed and conforming ground-state iterations.
///
/// Problem provides mass(v), mass_solve(r), energy(v), apply(u) = A(u)u,
/// inverse_step(u, rhs) = (A(u) + mu M)^{-1} rhs, nonlinear_load(u),
/// shifted_solve(u, sigma, rhs, load) applying (J0(u) - sigma M)^{-1} to both
/// right-hand sides, and kappa().
template <class Problem>
IterationResult minimize_on_sphere(Problem& p, Vector u, const SolverConfig& cfg) {
  cfg.check();
  IterationResult out;
  u = normalized(p, u);
  double e = p.energy(u);
  auto [lambda, res] = rayleigh_and_residual(p, u);
  out.trace.push_back({e, res});

  auto align = [&](Vector v, const Vector& ref) {
    if (v.dot(p.mass(ref)) < 0.0) v = -v;
    return v;
  };

  // Undamped iterations without a new best residual; a long run means the
  // residual has hit its rounding floor above the tolerance.
  constexpr int stall_limit = 25;
  int stalled = 0;
  double best = res;
  int it = 0;
  while (res > cfg.tol_residual) {
    if (it >= cfg.max_iters)
      throw SolverError(SolverError::Kind::NonConvergence,
                        "ground state iteration did not reach residual " + std::to_string(cfg.tol_residual) +
                            " within " + std::to_string(cfg.max_iters) + " iterations (last residual " +
                            std::to_string(res) + ")",
                        out.trace);
    ++it;
    bool accepted = false;
    if (cfg.shift_enabled && res <= cfg.damping_threshold) {
      if (auto cand = shifted_step(p, u, lambda - res)) {
        Vector v = align(normalized(p, *cand), u);
        auto [l2, r2] = rayleigh_and_residual(p, v);
        if (std::isfinite(r2) && r2 < res) {
          u = std::move(v);
          lambda = l2;
          res = r2;
          e = p.energy(u);
          accepted = true;
        }
      }
    }
    if (!accepted) {
      const Vector w = p.inverse_step(u, p.mass(u));
      const Vector cand = align(normalized(p, w), u);
      Vector next;
      double e_next = 0.0;
      if (res > cfg.damping_threshold) {
        double t = 1.0;
        for (;;) {
          next = normalized(p, (1.0 - t) * u + t * cand);
          e_next = p.energy(next);
          if (e_next <= e) break;
          t *= cfg.backtrack_factor;
          if (t < cfg.backtrack_floor)
            throw SolverError(SolverError::Kind::Stagnation,
                              "energy-diminishing step size fell below the backtracking floor", out.trace);
        }
      } else {
        next = cand;
        e_next = p.energy(next);
      }
      u = std::move(next);
      e = e_next;
      std::tie(lambda, res) = rayleigh_and_residual(p, u);
    }
    out.trace.push_back({e, res});
    if (res < best) {
      best = res;
      stalled = 0;
    } else if (res <= cfg.damping_threshold && ++stalled >= stall_limit) {
      throw SolverError(SolverError::Kind::Stagnation,
                        "residual stagnated at " + std::to_string(best) + " above the tolerance " +
                            std::to_string(cfg.tol_residual),
                        out.trace);
    }
  }
  out.u = std::move(u);
  out.energy = e;
  out.lambda = lambda;
  out.residual = res;
  out.iterations = it;
  return out;
}

} // namespace detail

/// Algebraic form of the mixed problem consumed by the iteration skeleton.
class MixedProblem {
public:
  MixedProblem(const AssembledOperators& ops, SpdFactor bfac, double diagonal_floor)
      : ops_(ops), bfac_(std::move(bfac)), floor_(diagonal_floor), woodbury_(ops.b, ops.c) {}

  [[nodiscard]] Vector mass(const Vector& v) const { return ops_.m0.cwiseProduct(v); }
  [[nodiscard]] Vector mass_solve(const Vector& r) const { return r.cwiseQuotient(ops_.m0); }
  [[nodiscard]] double energy(const Vector& v) const { return mixed_gpe::energy(ops_, v, bfac_); }
  [[nodiscard]] double kappa() const { return ops_.kappa; }

  /// Element values kappa u^2 + V.
  [[nodiscard]] Vector reaction(const Vector& u) const {
    return (ops_.kappa * u.array().square() + ops_.pot.array()).matrix();
  }

  [[nodiscard]] Vector apply(const Vector& u) const {
    const Vector g = discrete_gradient(ops_, u, bfac_);
    return -(ops_.c.transpose() * g) + mass(reaction(u).cwiseProduct(u));
  }

  Vector inverse_step(const Vector& u, const Vector& rhs) {
    Vector d = reaction(u);
    const double lo = d.minCoeff();
    if (lo < floor_) d.array() += floor_ - lo;
    woodbury_.set_diagonal(mass(d));
    return woodbury_.apply(rhs);
  }

  [[nodiscard]] Vector nonlinear_load(const Vector& u) const { return mass(u.array().cube().matrix()); }

  /// Solves (J0(u) - sigma M0) x = r for r in {rhs, load} through the
  /// saddle-point system [[B, C], [C^T, -(D' )]] with
  /// D' = diag(|K| (3 kappa u^2 + V - sigma)), which may be indefinite.
  std::optional<std::pair<Vector, Vector>> shifted_solve(const Vector& u, double sigma, const Vector& rhs,
                                                        const Vector& load) {
    ensure_saddle();
    const Eigen::Index nf = ops_.num_facets();
    const Vector dprime =
        mass((3.0 * ops_.kappa * u.array().square() + ops_.pot.array() - sigma).matrix());
    double* v = saddle_.valuePtr();
    for (Eigen::Index k = 0; k < dprime.size(); ++k) v[diag_slots_[k]] = -dprime[k];
    try {
      saddle_solver_.factor(saddle_);
      auto solve = [&](const Vector& r) {
        Vector full = Vector::Zero(nf + r.size());
        full.tail(r.size()) = -r;
        return Vector(saddle_solver_.solve(full).tail(r.size()));
      };
      return std::make_pair(solve(rhs), solve(load));
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  [[nodiscard]] const SpdFactor& bfac() const { return bfac_; }
  [[nodiscard]] const AssembledOperators& ops() const { return ops_; }

private:
  void ensure_saddle() {
    if (!diag_slots_.empty()) return;
    const Eigen::Index nf = ops_.num_facets();
    const Eigen::Index nt = ops_.num_elements();
    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(ops_.b.nonZeros() + 2 * ops_.c.nonZeros() + nt));
    for (int k = 0; k < ops_.b.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(ops_.b, k); it; ++it) entries.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < ops_.c.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(ops_.c, k); it; ++it) {
        entries.emplace_back(it.row(), nf + it.col(), it.value());
        entries.emplace_back(nf + it.col(), it.row(), it.value());
      }
    for (Eigen::Index k = 0; k < nt; ++k) entries.emplace_back(nf + k, nf + k, 1.0);
    saddle_ = pattern_from(nf + nt, nf + nt, entries);
    diag_slots_.resize(static_cast<std::size_t>(nt));
    for (Eigen::Index k = 0; k < nt; ++k) diag_slots_[k] = value_index(saddle_, nf + k, nf + k);
  }

  const AssembledOperators& ops_;
  SpdFactor bfac_;
  double floor_;
  WoodburySolver woodbury_;
  SparseMatrix saddle_;
  std::vector<Eigen::Index> diag_slots_;
  SymmetricSolver saddle_solver_;
};

/// Rayleigh value (G v, G v) + (V v, v) + kappa |v|_{L^4}^4 of v / |v|.
inline double rayleigh(const AssembledOperators& ops, const Vector& v, const SpdFactor& bfac) {
  const Vector w = v / std::sqrt(v.dot(ops.m0.cwiseProduct(v)));
  const Vector g = discrete_gradient(ops, w, bfac);
  return g.dot(ops.b * g) + (ops.m0.array() * ops.pot.array() * w.array().square()).sum() +
         ops.kappa * l4_norm4(ops, w);
}

/// Discrete ground state. `initial` defaults to the (optionally perturbed)
/// constant vector.
inline SolveReport ground_state(const AssembledOperators& ops, const SpdFactor& bfac, const SolverConfig& cfg,
                                const Vector* initial = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  MixedProblem problem(ops, bfac, cfg.diagonal_floor);
  Vector u0 = initial ? *initial : initial_guess(ops.num_elements(), cfg);
  if (u0.size() != ops.num_elements()) throw InvalidConfiguration("initial guess has the wrong size");
  auto result = detail::minimize_on_sphere(problem, std::move(u0), cfg);

  SolveReport report;
  Vector& u = result.u;
  if (u.dot(ops.m0) < 0.0) u = -u;
  report.state.sigma = discrete_gradient(ops, u, bfac);
  report.state.energy_h = energy(ops, u, bfac);
  report.state.lambda_h = rayleigh(ops, u, bfac);
  report.state.residual_l2 = result.residual;
  report.state.u = std::move(u);
  report.iterations = result.iterations;
  report.trace = std::move(result.trace);
  report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

inline SolveReport ground_state(const AssembledOperators& ops, const SolverConfig& cfg,
                                const Vector* initial = nullptr) {
  return ground_state(ops, chol(ops.b), cfg, initial);
}

/// Guaranteed lower bound E_h / (1 + 4 h^2 E_h / pi^2) on the exact ground
/// state energy, valid when the potential is piecewise constant on the mesh.
inline double lower_bound(double energy_h, double h) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return energy_h / (1.0 + 4.0 * h * h * energy_h / pi2);
}

} // namespace mixed_gpe
