#include "stabfem/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "stabfem/fourier.hpp"
#include "stabfem/solver.hpp"

namespace stabfem {

namespace {

using nlohmann::json;

const std::vector<std::string> kFamilies{"basic", "bernstein", "cubature"};
const std::vector<std::string> kStabs{"none", "supg", "cip", "oss"};
const std::vector<std::string> kSchemes{"rk", "ssprk", "dec"};
const std::vector<std::string> kPatterns{"X", "T"};

/// Flags shared by every command that picks a discretization.
struct Discretization {
  std::string family;
  int degree = 0;
  std::string stab = "oss";
  std::string scheme = "ssprk";
  double delta = 0.0;
  double viscosity = 0.0;
};

void add_discretization(CLI::App* app, Discretization& d) {
  app->add_option("--element", d.family, "element family")
      ->required()
      ->check(CLI::IsMember(kFamilies, CLI::ignore_case));
  app->add_option("--degree", d.degree, "polynomial degree")->required()->check(CLI::Range(1, 3));
  app->add_option("--stab", d.stab, "stabilization")
      ->capture_default_str()
      ->check(CLI::IsMember(kStabs, CLI::ignore_case));
  app->add_option("--scheme", d.scheme, "time scheme")
      ->capture_default_str()
      ->check(CLI::IsMember(kSchemes, CLI::ignore_case));
  app->add_option("--viscosity", d.viscosity, "coefficient c of mu_K = c h_K^(p+1)")
      ->capture_default_str();
}

struct AnalysisFlags {
  int n_theta = 33;
  int n_phi = 16;
  int n_k = 33;
  double threshold = 1e-7;
  bool strict = false;
  std::string theta_max = "0";

  AnalysisOptions options() const {
    AnalysisOptions o;
    o.n_theta = n_theta;
    o.n_phi = n_phi;
    o.n_k = n_k;
    o.threshold = strict ? 1e-12 : threshold;
    o.theta_max = parse_angle(theta_max);
    return o;
  }
};

void add_analysis(CLI::App* app, AnalysisFlags& a) {
  app->add_option("--n-theta", a.n_theta, "wavenumber samples per ray")->capture_default_str();
  app->add_option("--n-phi", a.n_phi, "advection angle samples")->capture_default_str();
  app->add_option("--n-k", a.n_k, "wavenumber samples for the dispersion error")
      ->capture_default_str();
  app->add_option("--threshold", a.threshold, "instability threshold on max eps")
      ->capture_default_str();
  app->add_flag("--strict", a.strict, "use the 1e-12 threshold");
  app->add_option("--theta-max", a.theta_max, "largest |theta| (0 = node Nyquist bound)")
      ->capture_default_str();
}

struct Output {
  std::string dir;
  std::string prefix;
};

void add_output(CLI::App* app, Output& o, const std::string& prefix) {
  o.prefix = prefix;
  app->add_option("--out", o.dir, "output directory (default $STABFEM_OUT_DIR or .)");
  app->add_option("--prefix", o.prefix, "output file prefix")->capture_default_str();
}

std::filesystem::path output_path(const Output& o, const std::string& suffix) {
  std::string dir = o.dir;
  if (dir.empty()) {
    const char* env = std::getenv("STABFEM_OUT_DIR");
    dir = env && *env ? env : ".";
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  return std::filesystem::path(dir) / (o.prefix + suffix);
}

template <class Writer>
std::string write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  writer(f);
  if (!f) throw IoError("write failed for " + path.string());
  return path.string();
}

/// Resolved option values keyed by long flag name.
json echo_config(const CLI::App* app) {
  json cfg = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    if (opt->get_configurable() == false) continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
      if (opt->get_type_name().empty() && value.empty()) value = "true";
    } else {
      value = opt->get_default_str();
      if (opt->get_type_name().empty() && value.empty()) value = "false";
    }
    cfg[name] = value;
  }
  return cfg;
}

/// Flat INI text that reparses through --config to the same run.
std::string echo_ini(const json& cfg) {
  std::ostringstream s;
  for (const auto& [k, v] : cfg.items()) {
    const std::string value = v.get<std::string>();
    if (value.empty()) continue;
    s << k << " = \"" << value << "\"\n";
  }
  return s.str();
}

std::vector<double> parse_log_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("bad log grid '" + text + "' (expected lo,hi,n)");
    }
  }
  if (parts.size() != 3 || parts[2] < 1 || parts[2] != std::floor(parts[2]))
    throw InvalidArgument("bad log grid '" + text + "' (expected lo,hi,n)");
  return log_grid(parts[0], parts[1], static_cast<int>(parts[2]));
}

json norms_json(const ErrorNorms& e) { return {{"L1", e.l1}, {"L2", e.l2}, {"Linf", e.linf}}; }

json report_json(const RunReport& r) {
  json j{{"ok", r.ok},
         {"dofs", r.dofs},
         {"cells", r.cells},
         {"steps", r.steps},
         {"dt", r.dt},
         {"t_reached", r.t_reached},
         {"seconds", r.seconds},
         {"seconds_per_step", r.seconds_per_step()},
         {"mass_factorizations", r.mass_factorizations}};
  if (!r.ok) {
    j["failure"] = r.failure;
    j["failed_step"] = r.failed_step;
  } else {
    j["error"] = norms_json(r.error);
    if (!r.components.empty()) {
      json comps = json::object();
      const char* names[] = {"h", "hu", "hv"};
      for (std::size_t k = 0; k < r.components.size(); ++k) comps[names[k]] = norms_json(r.components[k]);
      j["components"] = comps;
    }
  }
  return j;
}

int finish(std::ostream& out, json summary, const Output& o, int code) {
  summary["exit_code"] = code;
  summary["outputs"].push_back(write_file(output_path(o, ".json"), [&](std::ostream& f) {
    f << summary.dump(2) << '\n';
  }));
  out << summary.dump(2) << '\n';
  return code;
}

// analyze

struct AnalyzeFlags {
  Discretization d;
  AnalysisFlags a;
  Output o;
  std::string pattern = "X";
  std::string phi = "0";
  double cfl = 0.1;
};

int cmd_analyze(const CLI::App* app, const AnalyzeFlags& f, std::ostream& out) {
  const Family family = parse_family(f.d.family);
  const FourierAnalyzer an(family, f.d.degree, parse_pattern(f.pattern),
                           scheme_for_degree(parse_scheme(f.d.scheme), f.d.degree));
  const StabilizationConfig stab{parse_stabilization(f.d.stab), f.d.delta, f.d.viscosity, 0.0};
  const AnalysisOptions o = f.a.options();
  const double phi = parse_angle(f.phi);
  const DispersionCurves curves = an.dispersion(stab, phi, f.cfl, o);
  const double worst = an.max_damping(stab, phi, {f.cfl}, o).front();

  json summary{{"command", "analyze"}, {"config", echo_config(app)}};
  summary["result"] = {
      {"modes", an.modes()},
      {"max_eps", worst},
      {"stable", worst <= o.threshold},
      {"threshold", o.threshold},
      {"eta_u", dispersion_error(curves.k, curves.eps, curves.omega, curves.omega_exact)},
      {"principal_eps_max", *std::max_element(curves.eps.begin(), curves.eps.end())},
  };
  summary["outputs"] = json::array();
  summary["outputs"].push_back(
      write_file(output_path(f.o, "_curves.csv"), [&](std::ostream& s) { write_curves_csv(s, curves); }));
  summary["outputs"].push_back(write_file(output_path(f.o, ".ini"), [&](std::ostream& s) {
    s << echo_ini(summary["config"]);
  }));
  return finish(out, summary, f.o, kExitOk);
}

// optimize

struct OptimizeFlags {
  Discretization d;
  AnalysisFlags a;
  Output o;
  std::vector<std::string> patterns{"X"};
  std::string cfl_grid;
  std::string delta_grid;
  double mu = 10.0;
  int jobs = 0;
};

int cmd_optimize(const CLI::App* app, const OptimizeFlags& f, std::ostream& out) {
  const Family family = parse_family(f.d.family);
  const bool cub = family == Family::Cubature;
  ScanConfig cfg;
  cfg.family = family;
  cfg.degree = f.d.degree;
  cfg.stabilization = parse_stabilization(f.d.stab);
  cfg.scheme = parse_scheme(f.d.scheme);
  cfg.viscosity = f.d.viscosity;
  cfg.cfl = parse_log_grid(f.cfl_grid.empty() ? (cub ? "-3,0.5,20" : "-2.5,0,20") : f.cfl_grid);
  cfg.delta = parse_log_grid(f.delta_grid.empty() ? (cub ? "-3,1,20" : "-5,1.5,20") : f.delta_grid);
  cfg.options = f.a.options();
  cfg.jobs = f.jobs > 0 ? f.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  json summary{{"command", "optimize"}, {"config", echo_config(app)}};
  summary["outputs"] = json::array();
  std::vector<StabilityMap> maps;
  json per_pattern = json::object();
  for (const std::string& p : f.patterns) {
    cfg.pattern = parse_pattern(p);
    maps.push_back(stability_scan(cfg));
    const Optimum opt = optimize_parameters(maps.back(), f.mu);
    per_pattern[to_string(cfg.pattern)] = {{"stable", opt.found}, {"cfl", opt.cfl}, {"delta", opt.delta}};
    if (f.patterns.size() > 1)
      summary["outputs"].push_back(write_file(output_path(f.o, "_map_" + to_string(cfg.pattern) + ".csv"),
                                              [&](std::ostream& s) { write_map_csv(s, maps.back()); }));
  }
  const StabilityMap combined = maps.size() == 1 ? maps.front() : combine_maps(maps);
  const Optimum opt = optimize_parameters(combined, f.mu);
  summary["outputs"].push_back(write_file(output_path(f.o, "_map.csv"),
                                          [&](std::ostream& s) { write_map_csv(s, combined); }));
  summary["outputs"].push_back(write_file(output_path(f.o, ".ini"), [&](std::ostream& s) {
    s << echo_ini(summary["config"]);
  }));
  json result{{"stable", opt.found}, {"threshold", combined.threshold}, {"mu", f.mu},
              {"grid", {{"cfl", combined.cfl}, {"delta", combined.delta}}}, {"patterns", per_pattern}};
  if (opt.found) {
    result["cfl"] = opt.cfl;
    result["delta"] = opt.delta;
    result["eta_u"] = opt.eta;
    result["min_eta_u"] = opt.min_eta;
    result["cfl_index"] = opt.cfl_index;
    result["delta_index"] = opt.delta_index;
  }
  summary["result"] = result;
  return finish(out, summary, f.o, opt.found ? kExitOk : kExitNumerical);
}

// solve and convergence

struct ProblemFlags {
  Discretization d;
  Output o;
  std::string problem = "advection";
  double cfl = 0.1;
  double t_final = 0.0;
  std::string pattern = "X";
  int nx = 20, ny = 10;
  double lx = 2.0, ly = 1.0, x0 = 0.0, y0 = 0.0;
  std::string mesh_file;
  bool periodic = false;
  std::string href = "node";
  int max_steps = 0;
  std::string angle = "0.1875pi";
  double amplitude = 0.1;
  double speed = 1.0;
  double uc = 0.6, vc = 0.0, hc = 1.0, dh = 0.1, r0 = 0.45, gravity = 9.81, xc = 0.5, yc = 0.5;
  bool dump_field = false;
  // convergence
  std::vector<double> dx{0.1, 0.05, 0.025};
  bool degree_matched = true;
  bool timing = true;
};

void add_problem(CLI::App* app, ProblemFlags& f) {
  app->add_option("--problem", f.problem, "advection or shallow-water")
      ->capture_default_str()
      ->check(CLI::IsMember({"advection", "shallow-water"}, CLI::ignore_case));
  app->add_option("--cfl", f.cfl, "Courant number")->capture_default_str();
  app->add_option("--delta", f.d.delta, "stabilization coefficient")->capture_default_str();
  app->add_option("--t-final", f.t_final, "final time (default 2 advection, 1 shallow water)");
  app->add_option("--pattern", f.pattern, "structured pattern")
      ->capture_default_str()
      ->check(CLI::IsMember(kPatterns, CLI::ignore_case));
  app->add_option("--nx", f.nx, "squares along x")->capture_default_str();
  app->add_option("--ny", f.ny, "squares along y")->capture_default_str();
  app->add_option("--lx", f.lx, "domain length along x")->capture_default_str();
  app->add_option("--ly", f.ly, "domain length along y")->capture_default_str();
  app->add_option("--x0", f.x0, "domain origin x")->capture_default_str();
  app->add_option("--y0", f.y0, "domain origin y")->capture_default_str();
  app->add_option("--mesh-file", f.mesh_file, "native or gmsh mesh file");
  app->add_flag("--periodic", f.periodic, "periodic boundaries (advection only)");
  app->add_option("--href", f.href, "step reference length: node or cell")
      ->capture_default_str()
      ->check(CLI::IsMember({"node", "cell"}));
  app->add_option("--max-steps", f.max_steps, "stop after this many steps (0 = none)")
      ->capture_default_str();
  app->add_option("--angle", f.angle, "advection angle, e.g. 0.1875pi")->capture_default_str();
  app->add_option("--amplitude", f.amplitude, "cosine wave amplitude")->capture_default_str();
  app->add_option("--speed", f.speed, "advection speed")->capture_default_str();
  app->add_option("--uc", f.uc, "vortex drift u")->capture_default_str();
  app->add_option("--vc", f.vc, "vortex drift v")->capture_default_str();
  app->add_option("--hc", f.hc, "far-field depth")->capture_default_str();
  app->add_option("--dh", f.dh, "vortex depth drop")->capture_default_str();
  app->add_option("--r0", f.r0, "vortex radius")->capture_default_str();
  app->add_option("--gravity", f.gravity, "gravity")->capture_default_str();
  app->add_option("--xc", f.xc, "vortex center x")->capture_default_str();
  app->add_option("--yc", f.yc, "vortex center y")->capture_default_str();
}

MeshSpec mesh_spec(const ProblemFlags& f) {
  MeshSpec m;
  m.pattern = parse_pattern(f.pattern);
  m.nx = f.nx;
  m.ny = f.ny;
  m.origin = {f.x0, f.y0};
  m.size = {f.lx, f.ly};
  m.file = f.mesh_file;
  m.periodic = f.periodic;
  return m;
}

AdvectionConfig advection_config(const ProblemFlags& f) {
  AdvectionConfig c;
  c.family = parse_family(f.d.family);
  c.degree = f.d.degree;
  c.mesh = mesh_spec(f);
  c.stab = {parse_stabilization(f.d.stab), f.d.delta, f.d.viscosity, 0.0};
  c.scheme = parse_scheme(f.d.scheme);
  c.cfl = f.cfl;
  if (f.t_final != 0.0) c.t_final = f.t_final;
  c.wave = {parse_angle(f.angle), f.amplitude, f.speed};
  c.h_ref = parse_href(f.href);
  c.max_steps = f.max_steps;
  return c;
}

ShallowWaterConfig shallow_water_config(const ProblemFlags& f) {
  ShallowWaterConfig c;
  c.family = parse_family(f.d.family);
  c.degree = f.d.degree;
  c.mesh = mesh_spec(f);
  c.stab = {parse_stabilization(f.d.stab), f.d.delta, f.d.viscosity, 0.0};
  c.scheme = parse_scheme(f.d.scheme);
  c.cfl = f.cfl;
  if (f.t_final != 0.0) c.t_final = f.t_final;
  c.vortex = {{f.xc, f.yc}, f.hc, f.uc, f.vc, f.r0, f.dh, f.gravity};
  c.h_ref = parse_href(f.href);
  c.max_steps = f.max_steps;
  return c;
}

bool is_shallow_water(const ProblemFlags& f) { return f.problem == "shallow-water"; }

int cmd_solve(const CLI::App* app, const ProblemFlags& f, std::ostream& out) {
  json summary{{"command", "solve"}, {"config", echo_config(app)}};
  summary["outputs"] = json::array();
  RunReport r;
  if (is_shallow_water(f)) {
    r = solve_shallow_water(shallow_water_config(f));
  } else {
    r = solve_linear_advection(advection_config(f));
  }
  summary["result"] = report_json(r);
  if (f.dump_field && r.ok) {
    const ReferenceElement& el = reference_element(parse_family(f.d.family), f.d.degree);
    const TriMesh mesh = make_mesh(mesh_spec(f));
    const DofMap dofs = build_dof_map(mesh, el);
    const int n = dofs.ndofs;
    std::vector<std::string> names;
    std::vector<Eigen::VectorXd> fields;
    if (is_shallow_water(f)) {
      names = {"h", "hu", "hv"};
      for (int k = 0; k < 3; ++k) fields.push_back(values_at_dofs(mesh, dofs, el, r.state.segment(k * n, n)));
    } else {
      names = {"u"};
      fields.push_back(values_at_dofs(mesh, dofs, el, r.state));
    }
    summary["outputs"].push_back(write_file(output_path(f.o, "_field.csv"), [&](std::ostream& s) {
      write_field_csv(s, dofs.dof_coords, names, fields);
    }));
  }
  summary["outputs"].push_back(write_file(output_path(f.o, ".ini"), [&](std::ostream& s) {
    s << echo_ini(summary["config"]);
  }));
  return finish(out, summary, f.o, r.ok ? kExitOk : kExitNumerical);
}

int cmd_convergence(const CLI::App* app, const ProblemFlags& f, std::ostream& out) {
  const std::vector<double> dx = f.degree_matched ? degree_matched_sizes(f.dx, f.d.degree) : f.dx;
  const ConvergenceResult res = is_shallow_water(f) ? convergence_study(shallow_water_config(f), dx)
                                                    : convergence_study(advection_config(f), dx);
  json summary{{"command", "convergence"}, {"config", echo_config(app)}};
  summary["outputs"] = json::array();
  json levels = json::array();
  for (const auto& l : res.levels) {
    json lj = report_json(l.report);
    lj["dx"] = l.dx;
    lj["nx"] = l.nx;
    lj["ny"] = l.ny;
    lj["order"] = l.order;
    if (!f.timing) {
      lj.erase("seconds");
      lj.erase("seconds_per_step");
    }
    levels.push_back(lj);
  }
  summary["result"] = {{"levels", levels},
                       {"fitted_order", res.fitted_order},
                       {"monotone", res.monotone},
                       {"ok", res.ok}};
  summary["outputs"].push_back(write_file(output_path(f.o, "_levels.csv"), [&](std::ostream& s) {
    write_convergence_csv(s, res, f.timing);
  }));
  summary["outputs"].push_back(write_file(output_path(f.o, ".ini"), [&](std::ostream& s) {
    s << echo_ini(summary["config"]);
  }));
  return finish(out, summary, f.o, res.ok ? kExitOk : kExitNumerical);
}

/// Splices `key = value` lines of the --config file into the arguments;
/// flags given on the command line win.
std::vector<std::string> merge_config(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      kept.push_back(args[i]);
    }
  }
  if (path.empty()) return kept;
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  auto given = [&](const std::string& key) {
    for (const auto& a : kept)
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
    return false;
  };
  auto trim = [](std::string v) {
    const auto b = v.find_first_not_of(" \t\r");
    const auto e = v.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value in " + path, lineno);
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (key.empty()) throw ParseError("empty key in " + path, lineno);
    if (!given(key)) kept.push_back("--" + key + "=" + value);
  }
  return kept;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stabilized continuous Galerkin: Fourier analysis and solvers", "stabfem"};
  app.require_subcommand(1);

  AnalyzeFlags af;
  CLI::App* analyze = app.add_subcommand("analyze", "dispersion curves at one (cfl, delta, phi)");
  analyze->add_option("--config", "INI file with flag values (flags override it)");
  add_discretization(analyze, af.d);
  add_analysis(analyze, af.a);
  add_output(analyze, af.o, "analyze");
  analyze->add_option("--pattern", af.pattern, "structured pattern")
      ->capture_default_str()
      ->check(CLI::IsMember(kPatterns, CLI::ignore_case));
  analyze->add_option("--phi", af.phi, "advection angle, e.g. 1.25pi")->capture_default_str();
  analyze->add_option("--cfl", af.cfl, "Courant number")->capture_default_str();
  analyze->add_option("--delta", af.d.delta, "stabilization coefficient")->capture_default_str();

  OptimizeFlags of;
  CLI::App* optimize = app.add_subcommand("optimize", "stability map and optimal (cfl, delta)");
  optimize->add_option("--config", "INI file with flag values (flags override it)");
  add_discretization(optimize, of.d);
  add_analysis(optimize, of.a);
  add_output(optimize, of.o, "optimize");
  optimize->add_option("--patterns", of.patterns, "patterns to intersect, e.g. X,T")
      ->delimiter(',')
      ->capture_default_str()
      ->check(CLI::IsMember(kPatterns, CLI::ignore_case));
  optimize->add_option("--cfl-grid", of.cfl_grid, "log10 range lo,hi,n");
  optimize->add_option("--delta-grid", of.delta_grid, "log10 range lo,hi,n");
  optimize->add_option("--mu", of.mu, "weight of the CFL in the objective")->capture_default_str();
  optimize->add_option("--jobs", of.jobs, "worker threads (0 = all cores)")->capture_default_str();

  ProblemFlags sf;
  CLI::App* solve = app.add_subcommand("solve", "one time-domain run");
  solve->add_option("--config", "INI file with flag values (flags override it)");
  add_discretization(solve, sf.d);
  add_output(solve, sf.o, "solve");
  add_problem(solve, sf);
  solve->add_flag("--dump-field", sf.dump_field, "write the final field at the DOFs");

  ProblemFlags cf;
  CLI::App* conv = app.add_subcommand("convergence", "errors and orders on refined meshes");
  conv->add_option("--config", "INI file with flag values (flags override it)");
  add_discretization(conv, cf.d);
  add_output(conv, cf.o, "convergence");
  add_problem(conv, cf);
  conv->add_option("--dx", cf.dx, "P1 square sizes, coarse to fine")->delimiter(',')->capture_default_str();
  conv->add_option("--degree-matched", cf.degree_matched, "scale sizes by the degree")
      ->capture_default_str();
  conv->add_option("--timing", cf.timing, "write wall-clock columns")->capture_default_str();

  std::vector<std::string> args;
  try {
    args = merge_config(argc, argv);
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(analyze, af, out);
    if (optimize->parsed()) return cmd_optimize(optimize, of, out);
    if (solve->parsed()) return cmd_solve(solve, sf, out);
    if (conv->parsed()) return cmd_convergence(conv, cf, out);
  } catch (const InvalidArgument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace stabfem
