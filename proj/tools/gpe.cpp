// Command-line driver: solve, convergence, lowerbound, mesh-info.

#include "config_file.hpp"

#include <mixed_gpe/errors.hpp>
#include <mixed_gpe/mesh.hpp>
#include <mixed_gpe/study.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <thread>

namespace {

enum ExitCode { ok = 0, failure = 1, bad_input = 2, no_convergence = 3 };

struct Options {
  std::string config;
  std::string out;
  std::string preset;
  std::string levels;
  std::optional<std::uint64_t> seed;
};

std::pair<int, int> parse_levels(const std::string& s) {
  static const std::regex pattern(R"((\d+)(?:\.\.(\d+))?)");
  std::smatch m;
  if (!std::regex_match(s, m, pattern)) throw mixed_gpe::InvalidConfiguration("--levels expects a..b or a single level");
  const int a = std::stoi(m[1]);
  const int b = m[2].matched ? std::stoi(m[2]) : a;
  return {a, b};
}

int env_threads() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  int n = static_cast<int>(std::min(hw, 2u));
  if (const char* s = std::getenv("GPE_THREADS")) {
    const int cap = std::atoi(s);
    if (cap < 1) throw mixed_gpe::InvalidConfiguration("GPE_THREADS must be a positive integer");
    n = std::min(n, cap);
  }
  return n;
}

mixed_gpe::ExperimentConfig build_config(const Options& o, bool bounds) {
  auto cfg = mixed_gpe::preset_config(o.preset.empty() ? "harmonic" : o.preset, bounds);
  cfg.threads = env_threads();
  if (!o.config.empty()) cfg = gpe_cli::load_config(cfg, o.config);
  if (!o.preset.empty() && o.preset != cfg.preset)
    throw mixed_gpe::InvalidConfiguration("--preset conflicts with the preset named in the config file");
  if (!o.levels.empty()) std::tie(cfg.first_level, cfg.last_level) = parse_levels(o.levels);
  if (o.seed) {
    cfg.solver.seed = *o.seed;
    cfg.disorder_seed = *o.seed;
  }
  cfg.check();
  return cfg;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void emit_csv(const std::string& out, const std::vector<mixed_gpe::ConvergenceRecord>& rows) {
  if (out.empty() || out == "-") {
    mixed_gpe::write_csv(std::cout, rows);
    return;
  }
  std::ofstream os(out);
  if (!os) throw mixed_gpe::Error("cannot write " + out);
  mixed_gpe::write_csv(os, rows);
}

void print_table(const std::vector<mixed_gpe::ConvergenceRecord>& rows) {
  std::fprintf(stderr, "%5s %10s %9s %18s %18s %18s %6s\n", "level", "h", "elements", "E_h", "E_h_pp", "E_upper",
               "iters");
  for (const auto& r : rows)
    std::fprintf(stderr, "%5d %10.4g %9d %18.12f %18.12f %18.12f %6d\n", r.level, r.h, r.n_elements, r.energy_h,
                 r.energy_pp, r.energy_upper, r.iterations);
}

int cmd_solve(const Options& o, const std::string& state_path) {
  auto cfg = build_config(o, false);
  const int level = o.levels.empty() ? cfg.last_level : parse_levels(o.levels).second;
  const auto s = mixed_gpe::run_single(cfg, level);
  const double h = mixed_gpe::mesh_size(*s.mesh);
  std::cout << "preset     " << cfg.preset << "\n"
            << "level      " << level << "\n"
            << "elements   " << s.mesh->num_triangles() << "\n"
            << "h          " << g17(h) << "\n"
            << "E_h        " << g17(s.state.energy_h) << "\n"
            << "E_h_pp     " << g17(mixed_gpe::lower_bound(s.state.energy_h, h)) << "\n"
            << "E_upper    " << g17(s.upper.energy_upper) << "\n"
            << "lambda_h   " << g17(s.state.lambda_h) << "\n"
            << "residual   " << g17(s.state.residual_l2) << "\n"
            << "iterations " << s.iterations << "\n";
  const std::string path = !state_path.empty() ? state_path : o.out;
  if (!path.empty()) {
    std::ofstream os(path);
    if (!os) throw mixed_gpe::Error("cannot write " + path);
    mixed_gpe::write_state(os, *s.mesh, s.state.u);
  }
  return ok;
}

int cmd_convergence(const Options& o) {
  const auto cfg = build_config(o, false);
  const auto res = mixed_gpe::run_convergence(cfg);
  emit_csv(o.out, res.records);
  print_table(res.records);
  std::fprintf(stderr, "reference level %d\n", res.reference_level);
  std::fprintf(stderr, "%6s %6s %10s %10s %10s %10s\n", "coarse", "fine", "u_L2", "sigma_L2", "E", "lambda");
  for (const auto& r : res.orders)
    std::fprintf(stderr, "%6d %6d %10.4f %10.4f %10.4f %10.4f\n", r.coarse_level, r.fine_level, r.u_l2, r.sigma_l2,
                 r.energy, r.lambda);
  if (!o.out.empty() && o.out != "-") {
    const std::string path = o.out + ".orders.csv";
    std::ofstream os(path);
    if (!os) throw mixed_gpe::Error("cannot write " + path);
    mixed_gpe::write_orders(os, res.orders);
  }
  return ok;
}

int cmd_lowerbound(const Options& o) {
  const auto cfg = build_config(o, true);
  const auto res = mixed_gpe::run_lowerbound(cfg);
  emit_csv(o.out, res.records);
  const double e_ref = res.records.back().energy_upper;
  std::fprintf(stderr, "%5s %18s %18s %18s  %s\n", "level", "E_h", "E_h_pp", "E_upper", "E_h vs finest E_upper");
  bool bracket = true;
  for (const auto& r : res.records) {
    bracket = bracket && r.energy_pp <= r.energy_upper;
    std::fprintf(stderr, "%5d %18.12f %18.12f %18.12f  %s\n", r.level, r.energy_h, r.energy_pp, r.energy_upper,
                 r.energy_h > e_ref ? "above" : "below");
  }
  std::fprintf(stderr, "bracket E_h_pp <= E_upper on every level: %s\n", bracket ? "yes" : "NO");
  return ok;
}

int cmd_mesh_info(const Options& o) {
  const auto cfg = build_config(o, false);
  const int level = o.levels.empty() ? cfg.last_level : parse_levels(o.levels).second;
  auto mesh = mixed_gpe::red_refine(mixed_gpe::friedrichs_keller(cfg.half_width, cfg.initial_n, cfg.symmetric), level);
  int boundary = 0;
  double area = 0.0, amin = 1e300, amax = 0.0;
  for (int f = 0; f < mesh->num_facets(); ++f) boundary += mesh->is_boundary_facet(f);
  for (int t = 0; t < mesh->num_triangles(); ++t) {
    area += mesh->area(t);
    amin = std::min(amin, mesh->area(t));
    amax = std::max(amax, mesh->area(t));
  }
  std::cout << "level            " << level << "\n"
            << "vertices         " << mesh->num_vertices() << "\n"
            << "triangles        " << mesh->num_triangles() << "\n"
            << "facets           " << mesh->num_facets() << "\n"
            << "boundary facets  " << boundary << "\n"
            << "h                " << g17(mixed_gpe::mesh_size(*mesh)) << "\n"
            << "total area       " << g17(area) << "\n"
            << "element area     " << g17(amin) << " .. " << g17(amax) << "\n";
  if (!o.out.empty()) {
    std::ofstream os(o.out);
    if (!os) throw mixed_gpe::Error("cannot write " + o.out);
    mixed_gpe::write_mesh(os, *mesh);
  }
  return ok;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed finite element ground states of the Gross-Pitaevskii energy"};
  app.require_subcommand(1);
  Options o;
  std::string state_path;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "INI experiment file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output path");
    sub->add_option("--preset", o.preset, "potential preset")
        ->check(CLI::IsMember({"harmonic", "constant", "disorder", "linear"}));
    sub->add_option("--levels", o.levels, "level range a..b");
    sub->add_option("--seed", o.seed, "seed for the initial guess and the disorder field");
  };
  auto* solve = app.add_subcommand("solve", "solve one mesh level");
  common(solve);
  solve->add_option("--state", state_path, "write element values (x y u per line)");
  auto* conv = app.add_subcommand("convergence", "errors against a refined reference");
  common(conv);
  auto* lb = app.add_subcommand("lowerbound", "lower and upper energy bounds per level");
  common(lb);
  auto* info = app.add_subcommand("mesh-info", "mesh statistics");
  common(info);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : bad_input;
  }

  try {
    if (*solve) return cmd_solve(o, state_path);
    if (*conv) return cmd_convergence(o);
    if (*lb) return cmd_lowerbound(o);
    return cmd_mesh_info(o);
  } catch (const mixed_gpe::SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return no_convergence;
  } catch (const mixed_gpe::InvalidConfiguration& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bad_input;
  } catch (const mixed_gpe::AlignmentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bad_input;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return failure;
  }
}
