#include "ctpe/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "ctpe/experiment_harness.hpp"
#include "ctpe/io.hpp"
#include "ctpe/version.hpp"

namespace ctpe {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitConfig = 4;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct GlobalConfig {
  std::uint64_t seed = 0;
  std::string log_level = "info";
  std::string output_dir;
  bool parallel = false;
};

// Joins output-dir with a file name; bare file names land in output-dir,
// explicit paths are taken as-is.
std::string resolve_output(const GlobalConfig& global, const std::string& name) {
  if (global.output_dir.empty() || name.find('/') != std::string::npos) return name;
  std::string dir = global.output_dir;
  if (dir.back() != '/') dir.push_back('/');
  return dir + name;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  return out;
}

std::map<std::string, double> parse_model_params(const std::vector<std::string>& items) {
  std::map<std::string, double> params;
  for (const std::string& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--param expects key=value, got '" + item + "'");
    }
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    try {
      std::size_t pos = 0;
      params[key] = std::stod(val, &pos);
      if (pos != val.size()) throw std::invalid_argument(val);
    } catch (const std::exception&) {
      throw ConfigError("--param " + key + ": bad number '" + val + "'");
    }
  }
  return params;
}

std::string join_args(const std::vector<std::string>& args) {
  std::string s;
  for (const auto& a : args) {
    if (!s.empty()) s.push_back(' ');
    s += a;
  }
  return s;
}

// ---- subcommand bodies ----------------------------------------------------

struct CoeffsOptions {
  std::string form;
  int order = 1;
  double beta = 1.0;
  double eta = 0.1;
  bool naive = false;
  std::string output;
};

void run_coeffs(const CoeffsOptions& opt, const GlobalConfig& global,
                const std::string& cmdline, std::ostream& out) {
  std::ostringstream body;
  write_output_header(body, cmdline, global.seed);
  body << "index,value\n";
  if (opt.form == "bellman") {
    const BellmanScheme scheme = opt.naive ? first_order_bellman(opt.beta, opt.eta, true)
                                           : make_bellman_scheme(opt.order, opt.beta, opt.eta);
    for (std::size_t i = 0; i < scheme.kappa.size(); ++i) {
      body << i << "," << fmt17(scheme.kappa[i]) << "\n";
    }
  } else {
    const GeneratorScheme scheme = make_generator_scheme(opt.order, opt.beta, opt.eta);
    for (std::size_t j = 0; j < scheme.c.size(); ++j) {
      body << j << "," << fmt17(static_cast<double>(scheme.c[j])) << "\n";
    }
  }
  if (!opt.output.empty()) {
    open_output(resolve_output(global, opt.output)) << body.str();
  } else {
    out << body.str();
  }
}

struct SimulateOptions {
  std::string model = "ou-quadratic";
  std::vector<std::string> params;
  double eta = 0.1;
  long long steps = 100;
  double x0 = 0.0;
  std::string initial = "point";
  int substeps = kDefaultSubsteps;
  long long n_traj = 0;  // > 0 selects a killed batch
  std::string output;
};

void run_simulate(const SimulateOptions& opt, const GlobalConfig& global,
                  const std::string& cmdline, std::ostream& out) {
  const DiffusionModel model = make_model(opt.model, parse_model_params(opt.params));
  const auto initial_sampler = [&](RngStream& rng) -> double {
    if (opt.initial == "point") return opt.x0;
    if (opt.initial == "stationary") {
      if (!model.stationary_sampler) {
        throw ConfigError("model '" + opt.model + "' has no stationary sampler");
      }
      return model.stationary_sampler(rng);
    }
    if (opt.initial == "uniform") {
      return -std::numbers::pi + 2.0 * std::numbers::pi * rng.uniform();
    }
    throw ConfigError("--initial must be point, stationary, or uniform");
  };
  std::ostringstream body;
  if (opt.n_traj > 0) {
    const TrajectoryBatch batch = simulate_killed_batch(model, initial_sampler, opt.eta,
                                                        opt.n_traj, model.beta, global.seed,
                                                        opt.substeps);
    write_batch_csv(body, batch, opt.model, cmdline);
  } else {
    RngStream init_rng(global.seed, 0x10);
    const double x0 = initial_sampler(init_rng);
    const Trajectory traj =
        simulate_trajectory(model, x0, opt.eta, opt.steps, global.seed, opt.substeps);
    write_trajectory_csv(body, traj, opt.model, cmdline);
  }
  if (!opt.output.empty()) {
    open_output(resolve_output(global, opt.output)) << body.str();
  } else {
    out << body.str();
  }
}

struct SolveExactOptions {
  std::string model = "ou-quadratic";
  std::vector<std::string> params;
  std::string form = "bellman";
  int order = 1;
  double eta = 0.1;
  std::string basis = "quadratic";
  int grid_cells = 400;
  std::string output;
};

void run_solve_exact(const SolveExactOptions& opt, const GlobalConfig& global,
                     const std::string& cmdline, std::ostream& out, std::ostream& err) {
  const DiffusionModel model = make_model(opt.model, parse_model_params(opt.params));
  if (!model.true_value) {
    throw ConfigError("model '" + opt.model + "' has no closed-form truth to report against");
  }
  const FeatureMap fm = parse_basis_spec(opt.basis);
  const GridSpec grid = uniform_grid(-std::numbers::pi, std::numbers::pi, opt.grid_cells);
  std::optional<ValueApproximation> fit;
  if (opt.form == "generator") {
    fit = solve_generator_exact(model, fm, make_generator_scheme(opt.order, model.beta, opt.eta),
                                grid, global.parallel);
  } else if (opt.form == "bellman" || opt.form == "naive") {
    const BellmanScheme scheme = (opt.form == "naive")
                                     ? first_order_bellman(model.beta, opt.eta, true)
                                     : make_bellman_scheme(opt.order, model.beta, opt.eta);
    fit = solve_bellman_exact(model, fm, scheme, grid, global.parallel);
  } else {
    throw ConfigError("--form must be bellman, generator, or naive");
  }
  std::ostringstream body;
  write_output_header(body, cmdline, global.seed);
  body << "x,value,truth,abs_err\n";
  for (double x : default_eval_grid().points) {
    const double v = evaluate(*fit, x);
    const double t = model.true_value(x);
    body << fmt17(x) << "," << fmt17(v) << "," << fmt17(t) << "," << fmt17(std::abs(v - t))
         << "\n";
  }
  if (global.log_level != "quiet") {
    err << "cond=" << fit->diagnostics.condition_estimate
        << " residual=" << fit->diagnostics.residual_norm << " rows=" << fit->sample_count
        << (fit->diagnostics.condition_warning ? " WARN:ill-conditioned" : "") << "\n";
  }
  if (!opt.output.empty()) {
    open_output(resolve_output(global, opt.output)) << body.str();
  } else {
    out << body.str();
  }
}

struct EstimateOptions {
  std::string form = "bellman";
  int order = 1;
  bool naive = false;
  std::string basis = "quadratic";
  double beta = 1.0;
  std::string input;
  bool killed = false;
  std::string output;
};

void run_estimate(const EstimateOptions& opt, const GlobalConfig& global,
                  const std::string& cmdline, std::ostream& out, std::ostream& err) {
  std::ifstream in(opt.input);
  if (!in) throw ConfigError("cannot open input file '" + opt.input + "'");
  const FeatureMap fm = parse_basis_spec(opt.basis);
  std::optional<ValueApproximation> fit;
  if (opt.killed) {
    const TrajectoryBatch batch = read_batch_csv(in);
    if (opt.form == "generator") {
      fit = estimate_generator_killed(batch, fm,
                                      make_generator_scheme(opt.order, opt.beta, batch.eta),
                                      global.parallel);
    } else {
      const BellmanScheme scheme = opt.naive
                                       ? first_order_bellman(opt.beta, batch.eta, true)
                                       : make_bellman_scheme(opt.order, opt.beta, batch.eta);
      fit = estimate_bellman_killed(batch, fm, scheme, global.parallel);
    }
  } else {
    const Trajectory traj = read_trajectory_csv(in);
    if (opt.form == "generator") {
      fit = estimate_generator(traj, fm, make_generator_scheme(opt.order, opt.beta, traj.eta),
                               global.parallel);
    } else {
      const BellmanScheme scheme = opt.naive
                                       ? first_order_bellman(opt.beta, traj.eta, true)
                                       : make_bellman_scheme(opt.order, opt.beta, traj.eta);
      fit = estimate_bellman(traj, fm, scheme, global.parallel);
    }
  }
  std::ostringstream body;
  write_output_header(body, cmdline, global.seed);
  body << "index,theta\n";
  for (std::size_t j = 0; j < fit->theta.size(); ++j) {
    body << j << "," << fmt17(fit->theta[j]) << "\n";
  }
  if (global.log_level != "quiet") {
    err << "samples=" << fit->sample_count << " cond=" << fit->diagnostics.condition_estimate
        << " residual=" << fit->diagnostics.residual_norm;
    if (fit->diagnostics.condition_warning) err << " WARN:ill-conditioned";
    if (fit->sample_count < fm.size()) err << " WARN:fewer-windows-than-features";
    err << "\n";
  }
  if (!opt.output.empty()) {
    open_output(resolve_output(global, opt.output)) << body.str();
  } else {
    out << body.str();
  }
}

struct SweepOptions {
  std::string config;
  std::string output;
};

void run_sweep_cmd(const SweepOptions& opt, const GlobalConfig& global, std::ostream& err) {
  ExperimentSpec spec = parse_experiment_config(opt.config);
  if (global.seed != 0) spec.seed = global.seed;
  if (global.parallel) spec.parallel = true;
  if (!opt.output.empty()) spec.output_path = opt.output;
  const SweepResult result = run_sweep(spec);
  const std::string path = resolve_output(global, spec.output_path);
  write_sweep_csv(result, spec, path);
  if (global.log_level != "quiet") {
    err << "wrote " << path << " (" << result.cells.size() << " cells)\n";
    for (const auto& [name, fit] : result.slopes) {
      err << "  " << name << ": slope ";
      if (fit.slope) {
        err << *fit.slope;
      } else {
        err << "unavailable";
      }
      err << " (" << fit.points_used << " points)\n";
    }
  }
}

struct SlopesOptions {
  std::string input;
  double floor_multiplier = 0.0;
  std::string output = "slopes.csv";
};

void run_slopes(const SlopesOptions& opt, const GlobalConfig& global,
                const std::string& cmdline, std::ostream& out) {
  std::ifstream in(opt.input);
  if (!in) throw ConfigError("cannot open input file '" + opt.input + "'");
  // method -> axis value -> (sum, count); insertion order preserved for axes.
  std::map<std::string, std::map<double, std::pair<double, int>>> sums;
  std::string line;
  bool header_seen = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("method,axis,replication,error", 0) != 0) {
        throw ConfigError("sweep csv: unexpected column header '" + line + "'");
      }
      continue;
    }
    std::vector<std::string> fields;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) fields.push_back(cell);
    if (fields.size() < 4) {
      throw ConfigError("sweep csv line " + std::to_string(lineno) + ": too few fields");
    }
    try {
      const double axis = std::stod(fields[1]);
      const double error = std::stod(fields[3]);
      if (std::isfinite(error)) {
        auto& slot = sums[fields[0]][axis];
        slot.first += error;
        slot.second += 1;
      }
    } catch (const std::exception&) {
      throw ConfigError("sweep csv line " + std::to_string(lineno) + ": bad number");
    }
  }
  std::ostringstream body;
  write_output_header(body, cmdline, global.seed);
  body << "# aggregation: mean error over replications\n";
  body << "method,slope,points_used\n";
  for (const auto& [method, by_axis] : sums) {
    std::vector<double> axis, errors;
    for (const auto& [a, sc] : by_axis) {
      axis.push_back(a);
      errors.push_back(sc.first / sc.second);
    }
    double floor = 0.0;
    if (opt.floor_multiplier > 0.0 && !errors.empty()) {
      double lowest = errors[0];
      for (double e : errors) lowest = std::min(lowest, e);
      floor = opt.floor_multiplier * lowest;
    }
    const SlopeFit fit = fit_slope(axis, errors, floor);
    body << method << ",";
    if (fit.slope) {
      body << fmt17(*fit.slope);
    } else {
      body << "unavailable";
    }
    body << "," << fit.points_used << "\n";
  }
  if (!opt.output.empty() && opt.output != "-") {
    open_output(resolve_output(global, opt.output)) << body.str();
  } else {
    out << body.str();
  }
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"High-order discrete-time schemes for continuous-time policy evaluation"};
  app.set_version_flag("--version", std::string("ctpe ") + kVersion);
  app.require_subcommand(1);
  // Let global options (--seed, --output-dir, ...) appear after the subcommand.
  app.fallthrough();

  GlobalConfig global;
  app.add_option("--seed", global.seed, "Base seed for all randomness");
  app.add_option("--log-level", global.log_level, "quiet | info | debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));
  app.add_option("--output-dir", global.output_dir, "Directory for bare output file names");
  app.add_flag("--parallel", global.parallel, "Enable multi-threaded assembly");

  CoeffsOptions coeffs;
  CLI::App* coeffs_cmd = app.add_subcommand("coeffs", "Print discretization coefficients");
  coeffs_cmd->add_option("--form", coeffs.form, "bellman | generator")
      ->required()
      ->check(CLI::IsMember({"bellman", "generator"}));
  coeffs_cmd->add_option("--order", coeffs.order, "Scheme order")->check(CLI::Range(1, 8));
  coeffs_cmd->add_option("--beta", coeffs.beta, "Discount rate")
      ->check(CLI::PositiveNumber);
  coeffs_cmd->add_option("--eta", coeffs.eta, "Step size")->check(CLI::PositiveNumber);
  coeffs_cmd->add_flag("--naive", coeffs.naive, "Rectangle-rule one-step Bellman weights");
  coeffs_cmd->add_option("--output", coeffs.output, "Write CSV here instead of stdout");

  SimulateOptions simulate;
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Sample trajectories to CSV");
  simulate_cmd->add_option("--model", simulate.model, "Model id")->required();
  simulate_cmd->add_option("--param", simulate.params, "Model parameter key=value (repeatable)");
  simulate_cmd->add_option("--eta", simulate.eta, "Step size")->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--steps", simulate.steps, "Steps per trajectory");
  simulate_cmd->add_option("--x0", simulate.x0, "Initial state for --initial point");
  simulate_cmd->add_option("--initial", simulate.initial, "point | stationary | uniform")
      ->check(CLI::IsMember({"point", "stationary", "uniform"}));
  simulate_cmd->add_option("--substeps", simulate.substeps, "Euler-Maruyama substeps")
      ->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--traj", simulate.n_traj,
                           "Number of killed trajectories (enables batch mode)");
  simulate_cmd->add_option("--output", simulate.output, "Write CSV here instead of stdout");

  SolveExactOptions solve_exact;
  CLI::App* solve_cmd = app.add_subcommand("solve-exact", "Population-level projected solve");
  solve_cmd->add_option("--model", solve_exact.model, "Model id")->required();
  solve_cmd->add_option("--param", solve_exact.params, "Model parameter key=value (repeatable)");
  solve_cmd->add_option("--form", solve_exact.form, "bellman | generator | naive")
      ->check(CLI::IsMember({"bellman", "generator", "naive"}));
  solve_cmd->add_option("--order", solve_exact.order, "Scheme order")->check(CLI::Range(1, 8));
  solve_cmd->add_option("--eta", solve_exact.eta, "Step size")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--basis", solve_exact.basis, "Basis spec, e.g. fourier:5");
  solve_cmd->add_option("--grid-cells", solve_exact.grid_cells, "Solve grid cells")
      ->check(CLI::Range(2, 1000000));
  solve_cmd->add_option("--output", solve_exact.output, "Write CSV here instead of stdout");

  EstimateOptions estimate;
  CLI::App* estimate_cmd = app.add_subcommand("estimate", "LSTD fit from a trajectory CSV");
  estimate_cmd->add_option("--form", estimate.form, "bellman | generator")
      ->check(CLI::IsMember({"bellman", "generator"}));
  estimate_cmd->add_option("--order", estimate.order, "Scheme order")->check(CLI::Range(1, 8));
  estimate_cmd->add_flag("--naive", estimate.naive, "Rectangle-rule one-step Bellman weights");
  estimate_cmd->add_option("--basis", estimate.basis, "Basis spec, e.g. fourier:5");
  estimate_cmd->add_option("--beta", estimate.beta, "Discount rate")->check(CLI::PositiveNumber);
  estimate_cmd->add_option("--input", estimate.input, "Trajectory CSV")->required();
  estimate_cmd->add_flag("--killed", estimate.killed, "Input is a killed batch");
  estimate_cmd->add_option("--output", estimate.output, "Write CSV here instead of stdout");

  SweepOptions sweep;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run a configured experiment sweep");
  sweep_cmd->add_option("--config", sweep.config, "Experiment config file")->required();
  sweep_cmd->add_option("--output", sweep.output, "Override the configured output path");

  SlopesOptions slopes;
  CLI::App* slopes_cmd = app.add_subcommand("slopes", "Fit log-log slopes from a sweep CSV");
  slopes_cmd->add_option("--input", slopes.input, "sweep.csv produced by the sweep command")
      ->required();
  slopes_cmd->add_option("--floor-multiplier", slopes.floor_multiplier,
                         "Exclude errors within this multiple of the smallest mean error");
  slopes_cmd->add_option("--output", slopes.output, "Output path ('-' for stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  const std::string cmdline = join_args(args);
  try {
    if (coeffs_cmd->parsed()) {
      run_coeffs(coeffs, global, cmdline, out);
    } else if (simulate_cmd->parsed()) {
      run_simulate(simulate, global, cmdline, out);
    } else if (solve_cmd->parsed()) {
      run_solve_exact(solve_exact, global, cmdline, out, err);
    } else if (estimate_cmd->parsed()) {
      run_estimate(estimate, global, cmdline, out, err);
    } else if (sweep_cmd->parsed()) {
      run_sweep_cmd(sweep, global, err);
    } else if (slopes_cmd->parsed()) {
      run_slopes(slopes, global, cmdline, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace ctpe
