#pragma once

// INI-style experiment files. Sections and keys:
//
//   [domain]    half_width (8), n (2), symmetric (true)
//   [levels]    first (1), last (5), reference_extra (2)
//   [potential] preset (harmonic), kappa (1000), constant_value (1),
//               disorder_epsilon (0.015625), disorder_seed (1),
//               harmonic_cells (0), grid_file (custom preset only)
//   [solver]    tol_residual (1e-10), max_iters (500), damping_threshold (1e-2),
//               backtrack_factor (0.5), backtrack_floor (2^-20),
//               diagonal_floor (1e-2), shift_enabled (true),
//               initial_noise (0), seed (0)
//   [run]       threads (1)
//
// Keys not present keep the value of the base configuration.

#include <mixed_gpe/errors.hpp>
#include <mixed_gpe/potentials.hpp>
#include <mixed_gpe/study.hpp>

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>

namespace gpe_cli {

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw mixed_gpe::InvalidConfiguration("key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw mixed_gpe::InvalidConfiguration("key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw mixed_gpe::InvalidConfiguration("key '" + key + "': expected a boolean, got '" + v + "'");
}

} // namespace detail

/// Applies the settings in `is` on top of `cfg`. `base_dir` resolves grid_file.
inline mixed_gpe::ExperimentConfig apply_config(mixed_gpe::ExperimentConfig cfg, std::istream& is,
                                                const std::filesystem::path& base_dir = {}) {
  using detail::to_bool;
  using detail::to_double;
  using detail::to_int;
  const auto items = CLI::ConfigINI().from_config(is);
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue; // section markers
    std::string section = item.parents.empty() ? "" : item.parents.front();
    for (std::size_t i = 1; i < item.parents.size(); ++i) section += "." + item.parents[i];
    const std::string key = section.empty() ? item.name : section + "." + item.name;
    if (item.inputs.size() != 1) throw mixed_gpe::InvalidConfiguration("key '" + key + "' needs exactly one value");
    const std::string& v = item.inputs.front();

    if (key == "domain.half_width") cfg.half_width = to_double(key, v);
    else if (key == "domain.n") cfg.initial_n = static_cast<int>(to_int(key, v));
    else if (key == "domain.symmetric") cfg.symmetric = to_bool(key, v);
    else if (key == "levels.first") cfg.first_level = static_cast<int>(to_int(key, v));
    else if (key == "levels.last") cfg.last_level = static_cast<int>(to_int(key, v));
    else if (key == "levels.reference_extra") cfg.reference_extra = static_cast<int>(to_int(key, v));
    else if (key == "potential.preset") cfg.preset = v;
    else if (key == "potential.kappa") cfg.kappa = to_double(key, v);
    else if (key == "potential.constant_value") cfg.constant_value = to_double(key, v);
    else if (key == "potential.disorder_epsilon") cfg.disorder_epsilon = to_double(key, v);
    else if (key == "potential.disorder_seed") cfg.disorder_seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "potential.harmonic_cells") cfg.harmonic_cells = static_cast<int>(to_int(key, v));
    else if (key == "potential.grid_file") {
      std::filesystem::path p(v);
      if (p.is_relative()) p = base_dir / p;
      std::ifstream gf(p);
      if (!gf) throw mixed_gpe::InvalidConfiguration("cannot open grid file " + p.string());
      cfg.custom_grid = mixed_gpe::read_cell_grid(gf);
    }
    else if (key == "solver.tol_residual") cfg.solver.tol_residual = to_double(key, v);
    else if (key == "solver.max_iters") cfg.solver.max_iters = static_cast<int>(to_int(key, v));
    else if (key == "solver.damping_threshold") cfg.solver.damping_threshold = to_double(key, v);
    else if (key == "solver.backtrack_factor") cfg.solver.backtrack_factor = to_double(key, v);
    else if (key == "solver.backtrack_floor") cfg.solver.backtrack_floor = to_double(key, v);
    else if (key == "solver.diagonal_floor") cfg.solver.diagonal_floor = to_double(key, v);
    else if (key == "solver.shift_enabled") cfg.solver.shift_enabled = to_bool(key, v);
    else if (key == "solver.initial_noise") cfg.solver.initial_noise = to_double(key, v);
    else if (key == "solver.seed") cfg.solver.seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "run.threads") cfg.threads = static_cast<int>(to_int(key, v));
    else throw mixed_gpe::InvalidConfiguration("unknown configuration key '" + key + "'");
  }
  return cfg;
}

inline mixed_gpe::ExperimentConfig load_config(mixed_gpe::ExperimentConfig base, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw mixed_gpe::InvalidConfiguration("cannot open config file " + path.string());
  return apply_config(std::move(base), is, path.parent_path());
}

} // namespace gpe_cli
