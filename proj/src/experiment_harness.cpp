#include "ctpe/experiment_harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "ctpe/io.hpp"
#include "ctpe/version.hpp"
#include "parallel_util.hpp"

namespace ctpe {
namespace {

constexpr double kPi = std::numbers::pi;

double to_double_or_throw(const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': bad number '" + text + "'");
  }
}

long long to_int_or_throw(const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': bad integer '" + text + "'");
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

std::string MethodSpec::name() const {
  switch (form) {
    case Form::naive:
      return "naive";
    case Form::bellman:
      return "bellman:" + std::to_string(order);
    case Form::generator:
      return "generator:" + std::to_string(order);
  }
  return "?";
}

MethodSpec parse_method(const std::string& text) {
  MethodSpec m;
  if (text == "naive") {
    m.form = MethodSpec::Form::naive;
    m.order = 1;
    return m;
  }
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string head = text.substr(0, colon);
    const std::string tail = text.substr(colon + 1);
    if (head == "bellman" || head == "generator") {
      m.form = (head == "bellman") ? MethodSpec::Form::bellman : MethodSpec::Form::generator;
      m.order = static_cast<int>(to_int_or_throw("method", tail));
      if (m.order < 1 || m.order > kMaxSchemeOrder) {
        throw ConfigError("method '" + text + "': order outside [1, " +
                          std::to_string(kMaxSchemeOrder) + "]");
      }
      return m;
    }
  }
  throw ConfigError("unrecognized method '" + text + "' (expected naive, bellman:N, generator:N)");
}

GridSpec default_solve_grid() { return uniform_grid(-kPi, kPi, 400); }
GridSpec default_eval_grid() { return uniform_grid(-kPi, kPi, 100); }

double sup_error(const ValueApproximation& approx, const std::function<double(double)>& truth,
                 const GridSpec& eval_grid) {
  if (!truth) throw DomainError("sup_error: truth function required");
  double worst = 0.0;
  for (double x : eval_grid.points) {
    worst = std::max(worst, std::abs(evaluate(approx, x) - truth(x)));
  }
  return worst;
}

double mse_error(const ValueApproximation& approx, const std::function<double(double)>& truth,
                 const std::function<double(RngStream&)>& sampler, int n_points,
                 std::uint64_t seed) {
  if (!truth) throw DomainError("mse_error: truth function required");
  if (!sampler) throw DomainError("mse_error: sampler required");
  if (n_points < 1) throw DomainError("mse_error: need n_points >= 1");
  RngStream rng(seed, 0);
  double acc = 0.0;
  for (int i = 0; i < n_points; ++i) {
    const double z = sampler(rng);
    const double d = evaluate(approx, z) - truth(z);
    acc += d * d;
  }
  return acc / static_cast<double>(n_points);
}

SlopeFit fit_slope(const std::vector<double>& axis, const std::vector<double>& errors,
                   double floor_exclusion) {
  if (axis.size() != errors.size()) throw DomainError("fit_slope: length mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < axis.size(); ++i) {
    if (!(axis[i] > 0.0)) throw DomainError("fit_slope: axis values must be positive");
    if (!std::isfinite(errors[i]) || errors[i] <= 0.0) continue;
    if (errors[i] <= floor_exclusion) continue;
    lx.push_back(std::log(axis[i]));
    ly.push_back(std::log(errors[i]));
  }
  SlopeFit fit;
  fit.points_used = static_cast<int>(lx.size());
  if (lx.size() < 3) return fit;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(lx.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  return fit;
}

std::array<double, 3> derive_lq_truth(const DiffusionModel& model) {
  if (!model.linear) throw DomainError("derive_lq_truth: model lacks linear-dynamics rates");
  if (!model.reward) throw DomainError("derive_lq_truth: model lacks a reward");
  const double lambda = model.linear->lambda;
  const double sigma = model.linear->sigma;
  const double beta = model.beta;
  // Reward coefficients recovered exactly from three evaluations; a fourth
  // point certifies the degree <= 2 precondition.
  const double r0 = model.reward(0.0);
  const double rp = model.reward(1.0), rm = model.reward(-1.0);
  const double r1 = 0.5 * (rp - rm);
  const double r2 = 0.5 * (rp + rm) - r0;
  const double probe = model.reward(2.0);
  const double expect = r0 + 2.0 * r1 + 4.0 * r2;
  if (std::abs(probe - expect) > 1e-9 * (1.0 + std::abs(probe) + std::abs(expect))) {
    throw DomainError("derive_lq_truth: reward is not a polynomial of degree <= 2");
  }
  const double scale = std::abs(beta) + std::abs(lambda) + 1.0;
  if (std::abs(beta - 2.0 * lambda) <= 1e-12 * scale) {
    throw DomainError("derive_lq_truth: resonance beta == 2*lambda");
  }
  if (std::abs(beta - lambda) <= 1e-12 * scale) {
    throw DomainError("derive_lq_truth: resonance beta == lambda");
  }
  // beta V - A V = r with V = v0 + v1 x + v2 x^2 and
  // A V = lambda x V' + (sigma^2/2) V'': triangular in (v2, v1, v0).
  const double v2 = r2 / (beta - 2.0 * lambda);
  const double v1 = r1 / (beta - lambda);
  const double v0 = (r0 + sigma * sigma * v2) / beta;
  return {v0, v1, v2};
}

namespace {

struct ResolvedExperiment {
  DiffusionModel model;
  FeatureMap basis;
  std::function<double(double)> truth;
  GridSpec solve_grid;
  GridSpec eval_grid;
};

ResolvedExperiment resolve(const ExperimentSpec& spec) {
  if (spec.methods.empty()) throw ConfigError("experiment: no methods listed");
  if (spec.axis_values.empty()) throw ConfigError("experiment: no axis values listed");
  for (std::size_t i = 1; i < spec.axis_values.size(); ++i) {
    const bool inc = spec.axis_values[i] > spec.axis_values[i - 1];
    const bool dec = spec.axis_values[i] < spec.axis_values[i - 1];
    const bool inc0 = spec.axis_values[1] > spec.axis_values[0];
    if ((inc0 && !inc) || (!inc0 && !dec)) {
      throw ConfigError("experiment: ladder values must be strictly monotone");
    }
  }
  if (spec.replications < 1) throw ConfigError("experiment: replications must be >= 1");
  ResolvedExperiment r{make_model(spec.model_id, spec.model_params),
                       parse_basis_spec(spec.basis),
                       nullptr,
                       default_solve_grid(),
                       default_eval_grid()};
  if (!r.model.true_value) {
    throw ConfigError("experiment: model '" + spec.model_id + "' has no closed-form truth");
  }
  r.truth = r.model.true_value;
  if (spec.metric == ExperimentSpec::Metric::mse_on_stationary_sample &&
      !r.model.stationary_sampler) {
    throw ConfigError("experiment: model '" + spec.model_id +
                      "' has no stationary sampler for the mse metric");
  }
  if (spec.data == ExperimentSpec::Data::exact &&
      spec.axis != ExperimentSpec::Axis::eta_ladder) {
    throw ConfigError("experiment: exact sweeps support only the eta ladder");
  }
  if (spec.data == ExperimentSpec::Data::killed_batch &&
      spec.axis != ExperimentSpec::Axis::trajectory_count_ladder) {
    throw ConfigError("experiment: killed-batch sweeps support only the trajectory-count ladder");
  }
  if (spec.data == ExperimentSpec::Data::single_trajectory &&
      spec.axis == ExperimentSpec::Axis::trajectory_count_ladder) {
    throw ConfigError("experiment: trajectory-count ladder requires killed-batch data");
  }
  return r;
}

// One (axis value, replication) cell: shared data, one result row per method.
void run_cell(const ExperimentSpec& spec, const ResolvedExperiment& res, std::size_t axis_index,
              int rep, std::vector<SweepCell>& rows,
              std::vector<std::atomic<bool>>& budget_blown) {
  const double axis_value = spec.axis_values[axis_index];
  const std::uint64_t cell_seed =
      mix_seed(spec.seed, 1000003ULL * axis_index + static_cast<std::uint64_t>(rep));
  const double eta =
      (spec.axis == ExperimentSpec::Axis::eta_ladder) ? axis_value : spec.eta;

  // Shared data for this cell (matched across methods).
  std::optional<Trajectory> traj;
  std::optional<TrajectoryBatch> batch;
  std::string data_error;
  try {
    if (spec.data == ExperimentSpec::Data::single_trajectory) {
      const double horizon =
          (spec.axis == ExperimentSpec::Axis::horizon_ladder) ? axis_value : spec.horizon;
      const long long steps = std::llround(horizon / eta);
      if (steps < 1) throw DomainError("experiment: horizon shorter than one step");
      double x0 = 0.0;
      RngStream init_rng(cell_seed, 0x10);
      if (spec.initial == ExperimentSpec::Initial::stationary) {
        if (!res.model.stationary_sampler) {
          throw DomainError("experiment: model has no stationary sampler for initial states");
        }
        x0 = res.model.stationary_sampler(init_rng);
      } else {
        x0 = spec.initial_a + (spec.initial_b - spec.initial_a) * init_rng.uniform();
      }
      traj = simulate_trajectory(res.model, x0, eta, steps, cell_seed, kDefaultSubsteps, 1);
    } else if (spec.data == ExperimentSpec::Data::killed_batch) {
      const long long count = std::llround(axis_value);
      if (count < 1) throw DomainError("experiment: trajectory count must be >= 1");
      const auto initial = [&](RngStream& rng) {
        if (spec.initial == ExperimentSpec::Initial::stationary) {
          if (!res.model.stationary_sampler) {
            throw DomainError("experiment: model has no stationary sampler for initial states");
          }
          return res.model.stationary_sampler(rng);
        }
        return spec.initial_a + (spec.initial_b - spec.initial_a) * rng.uniform();
      };
      if (spec.kill_law == ExperimentSpec::KillLaw::geometric) {
        batch = simulate_killed_batch(res.model, initial, eta, count, res.model.beta, cell_seed);
      } else {
        // Fixed design: every trajectory carries points_per_trajectory
        // states and is alive for all of them.
        TrajectoryBatch b;
        b.eta = eta;
        b.seed = cell_seed;
        const int M = spec.points_per_trajectory;
        if (M < 2) throw DomainError("experiment: points_per_trajectory must be >= 2");
        for (long long i = 0; i < count; ++i) {
          RngStream rng(cell_seed, static_cast<std::uint64_t>(i));
          const double x0 = initial(rng);
          Trajectory t =
              simulate_trajectory(res.model, x0, eta, M - 1, cell_seed, kDefaultSubsteps,
                                  static_cast<std::uint64_t>(i) + (1ULL << 32));
          t.kill_step = M - 1;
          b.trajectories.push_back(std::move(t));
        }
        batch = std::move(b);
      }
    }
  } catch (const Error& e) {
    data_error = e.what();
  }

  for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
    const MethodSpec& method = spec.methods[mi];
    SweepCell cell;
    cell.method = method.name();
    cell.axis_value = axis_value;
    cell.replication = rep;
    if (!data_error.empty()) {
      cell.failed = true;
      cell.message = data_error;
      cell.error = std::numeric_limits<double>::quiet_NaN();
      rows[mi] = cell;
      continue;
    }
    if (budget_blown[mi].load()) {
      cell.failed = true;
      cell.message = "cancelled: method exceeded the cell runtime budget";
      cell.error = std::numeric_limits<double>::quiet_NaN();
      rows[mi] = cell;
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    try {
      std::optional<ValueApproximation> fit;
      if (method.form == MethodSpec::Form::generator) {
        const GeneratorScheme scheme = make_generator_scheme(method.order, res.model.beta, eta);
        if (spec.data == ExperimentSpec::Data::exact) {
          fit = solve_generator_exact(res.model, res.basis, scheme, res.solve_grid, spec.parallel);
        } else if (traj) {
          fit = estimate_generator(*traj, res.basis, scheme);
        } else {
          fit = estimate_generator_killed(*batch, res.basis, scheme);
        }
      } else {
        const BellmanScheme scheme = (method.form == MethodSpec::Form::naive)
                                         ? first_order_bellman(res.model.beta, eta, true)
                                         : make_bellman_scheme(method.order, res.model.beta, eta);
        if (spec.data == ExperimentSpec::Data::exact) {
          fit = solve_bellman_exact(res.model, res.basis, scheme, res.solve_grid, spec.parallel);
        } else if (traj) {
          fit = estimate_bellman(*traj, res.basis, scheme);
        } else {
          fit = estimate_bellman_killed(*batch, res.basis, scheme);
        }
      }
      if (spec.metric == ExperimentSpec::Metric::sup_on_grid) {
        cell.error = sup_error(*fit, res.truth, res.eval_grid);
      } else {
        cell.error = mse_error(*fit, res.truth, res.model.stationary_sampler, spec.mse_points,
                               mix_seed(spec.seed, 0x7e57));
      }
      cell.cond = fit->diagnostics.condition_estimate;
      cell.warn = fit->diagnostics.condition_warning ||
                  fit->sample_count < static_cast<long long>(res.basis.size());
    } catch (const Error& e) {
      cell.failed = true;
      cell.message = e.what();
      cell.error = std::numeric_limits<double>::quiet_NaN();
    }
    const auto t1 = std::chrono::steady_clock::now();
    cell.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    if (spec.cell_budget_ms > 0.0 && cell.runtime_ms > spec.cell_budget_ms) {
      budget_blown[mi].store(true);
      cell.warn = true;
      if (cell.message.empty()) cell.message = "cell runtime budget exceeded";
    }
    rows[mi] = cell;
  }
}

}  // namespace

SweepResult run_sweep(const ExperimentSpec& spec) {
  const ResolvedExperiment res = resolve(spec);
  const std::size_t n_axis = spec.axis_values.size();
  const std::size_t n_rep = static_cast<std::size_t>(spec.replications);
  const std::size_t n_meth = spec.methods.size();
  const std::size_t n_cells = n_axis * n_rep;

  std::vector<std::vector<SweepCell>> grid(n_cells, std::vector<SweepCell>(n_meth));
  std::vector<std::atomic<bool>> budget_blown(n_meth);
  for (auto& flag : budget_blown) flag.store(false);
  const auto run_range = [&](int, std::size_t lo, std::size_t hi) {
    for (std::size_t c = lo; c < hi; ++c) {
      run_cell(spec, res, c / n_rep, static_cast<int>(c % n_rep), grid[c], budget_blown);
    }
  };
  if (spec.parallel && spec.data != ExperimentSpec::Data::exact) {
    detail::chunked_reduce(n_cells, run_range, [](int) {});
  } else {
    run_range(0, 0, n_cells);
  }

  SweepResult result;
  result.cells.reserve(n_cells * n_meth);
  for (std::size_t c = 0; c < n_cells; ++c) {
    for (std::size_t mi = 0; mi < n_meth; ++mi) result.cells.push_back(grid[c][mi]);
  }

  // Mean error per (method, axis value) over successful replications, then
  // the slope fit with the configured floor exclusion.
  for (std::size_t mi = 0; mi < n_meth; ++mi) {
    const std::string name = spec.methods[mi].name();
    std::vector<double> means(n_axis, std::numeric_limits<double>::quiet_NaN());
    bool any_success = false;
    for (std::size_t ai = 0; ai < n_axis; ++ai) {
      double acc = 0.0;
      int count = 0;
      for (std::size_t rep = 0; rep < n_rep; ++rep) {
        const SweepCell& cell = grid[ai * n_rep + rep][mi];
        if (!cell.failed && std::isfinite(cell.error)) {
          acc += cell.error;
          ++count;
        }
      }
      if (count > 0) {
        means[ai] = acc / count;
        any_success = true;
      }
    }
    result.mean_errors[name] = means;
    double floor = 0.0;
    if (spec.floor_exclusion_multiplier > 0.0 && any_success) {
      double lowest = std::numeric_limits<double>::infinity();
      for (double v : means) {
        if (std::isfinite(v)) lowest = std::min(lowest, v);
      }
      floor = spec.floor_exclusion_multiplier * lowest;
    }
    result.slopes[name] = fit_slope(spec.axis_values, means, floor);
  }
  return result;
}

namespace {

std::string axis_name(ExperimentSpec::Axis a) {
  switch (a) {
    case ExperimentSpec::Axis::eta_ladder:
      return "eta-ladder";
    case ExperimentSpec::Axis::horizon_ladder:
      return "horizon-ladder";
    case ExperimentSpec::Axis::trajectory_count_ladder:
      return "trajectory-count-ladder";
  }
  return "?";
}

std::string data_name(ExperimentSpec::Data d) {
  switch (d) {
    case ExperimentSpec::Data::exact:
      return "exact";
    case ExperimentSpec::Data::single_trajectory:
      return "single-trajectory";
    case ExperimentSpec::Data::killed_batch:
      return "killed-batch";
  }
  return "?";
}

std::string metric_name(ExperimentSpec::Metric m) {
  return m == ExperimentSpec::Metric::sup_on_grid ? "sup-on-grid" : "mse-on-stationary-sample";
}

}  // namespace

std::string describe_experiment(const ExperimentSpec& spec) {
  std::ostringstream os;
  os << "model.id=" << spec.model_id;
  for (const auto& [k, v] : spec.model_params) os << " model." << k << "=" << v;
  os << " basis=" << spec.basis << " methods=";
  for (std::size_t i = 0; i < spec.methods.size(); ++i) {
    if (i) os << ",";
    os << spec.methods[i].name();
  }
  os << " data=" << data_name(spec.data) << " axis=" << axis_name(spec.axis) << " values=";
  for (std::size_t i = 0; i < spec.axis_values.size(); ++i) {
    if (i) os << ",";
    os << spec.axis_values[i];
  }
  os << " metric=" << metric_name(spec.metric) << " replications=" << spec.replications
     << " eta=" << spec.eta << " horizon=" << spec.horizon
     << " points_per_trajectory=" << spec.points_per_trajectory << " kill="
     << (spec.kill_law == ExperimentSpec::KillLaw::geometric ? "geometric" : "fixed")
     << " initial="
     << (spec.initial == ExperimentSpec::Initial::stationary ? "stationary" : "uniform")
     << " floor_exclusion=" << spec.floor_exclusion_multiplier
     << " mse_points=" << spec.mse_points << " budget_ms=" << spec.cell_budget_ms
     << " parallel=" << (spec.parallel ? 1 : 0);
  return os.str();
}

void write_sweep_csv(const SweepResult& result, const ExperimentSpec& spec,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: LF endings everywhere
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  write_output_header(out, describe_experiment(spec), spec.seed);
  out << "# aggregation: mean error over replications (used for slope fits)\n";
  out << "method,axis,replication,error,runtime_ms,cond,warn\n";
  char buf[64];
  for (const SweepCell& cell : result.cells) {
    std::snprintf(buf, sizeof buf, "%.17g", cell.axis_value);
    out << cell.method << "," << buf << "," << cell.replication << ",";
    std::snprintf(buf, sizeof buf, "%.17g", cell.error);
    out << buf << ",";
    std::snprintf(buf, sizeof buf, "%.6g", cell.runtime_ms);
    out << buf << ",";
    std::snprintf(buf, sizeof buf, "%.6g", cell.cond);
    out << buf << "," << (cell.warn ? 1 : 0) << "\n";
  }
  for (const SweepCell& cell : result.cells) {
    if (cell.failed) {
      out << "# failed: " << cell.method << " axis=" << cell.axis_value
          << " rep=" << cell.replication << " : " << cell.message << "\n";
    }
  }
  if (!out) throw ConfigError("failed writing output file '" + path + "'");
}

ExperimentSpec parse_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  ExperimentSpec spec;
  spec.methods.clear();
  bool have_replications = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
    }

    if (key == "model.id") {
      spec.model_id = value;
    } else if (key.rfind("model.", 0) == 0) {
      spec.model_params[key.substr(6)] = to_double_or_throw(key, value);
    } else if (key == "basis") {
      spec.basis = value;
    } else if (key == "methods") {
      for (const std::string& item : split_list(value)) spec.methods.push_back(parse_method(item));
    } else if (key == "sweep.axis") {
      if (value == "eta-ladder") {
        spec.axis = ExperimentSpec::Axis::eta_ladder;
      } else if (value == "horizon-ladder") {
        spec.axis = ExperimentSpec::Axis::horizon_ladder;
      } else if (value == "trajectory-count-ladder") {
        spec.axis = ExperimentSpec::Axis::trajectory_count_ladder;
      } else {
        throw ConfigError("config key 'sweep.axis': unknown value '" + value + "'");
      }
    } else if (key == "sweep.values") {
      spec.axis_values.clear();
      for (const std::string& item : split_list(value)) {
        spec.axis_values.push_back(to_double_or_throw(key, item));
      }
    } else if (key == "data") {
      if (value == "exact") {
        spec.data = ExperimentSpec::Data::exact;
      } else if (value == "single-trajectory") {
        spec.data = ExperimentSpec::Data::single_trajectory;
      } else if (value == "killed-batch") {
        spec.data = ExperimentSpec::Data::killed_batch;
      } else {
        throw ConfigError("config key 'data': unknown value '" + value + "'");
      }
    } else if (key == "metric") {
      if (value == "sup-on-grid") {
        spec.metric = ExperimentSpec::Metric::sup_on_grid;
      } else if (value == "mse-on-stationary-sample") {
        spec.metric = ExperimentSpec::Metric::mse_on_stationary_sample;
      } else {
        throw ConfigError("config key 'metric': unknown value '" + value + "'");
      }
    } else if (key == "replications") {
      spec.replications = static_cast<int>(to_int_or_throw(key, value));
      have_replications = true;
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(to_int_or_throw(key, value));
    } else if (key == "eta") {
      spec.eta = to_double_or_throw(key, value);
    } else if (key == "horizon") {
      spec.horizon = to_double_or_throw(key, value);
    } else if (key == "points_per_trajectory") {
      spec.points_per_trajectory = static_cast<int>(to_int_or_throw(key, value));
    } else if (key == "kill") {
      if (value == "geometric") {
        spec.kill_law = ExperimentSpec::KillLaw::geometric;
      } else if (value == "fixed") {
        spec.kill_law = ExperimentSpec::KillLaw::fixed;
      } else {
        throw ConfigError("config key 'kill': unknown value '" + value + "'");
      }
    } else if (key == "initial") {
      if (value == "stationary") {
        spec.initial = ExperimentSpec::Initial::stationary;
      } else if (value.rfind("uniform", 0) == 0) {
        spec.initial = ExperimentSpec::Initial::uniform;
        const auto c1 = value.find(':');
        if (c1 != std::string::npos) {
          const auto c2 = value.find(':', c1 + 1);
          if (c2 == std::string::npos) {
            throw ConfigError("config key 'initial': expected uniform:a:b");
          }
          spec.initial_a = to_double_or_throw(key, value.substr(c1 + 1, c2 - c1 - 1));
          spec.initial_b = to_double_or_throw(key, value.substr(c2 + 1));
        }
      } else {
        throw ConfigError("config key 'initial': unknown value '" + value + "'");
      }
    } else if (key == "floor_exclusion") {
      spec.floor_exclusion_multiplier = to_double_or_throw(key, value);
    } else if (key == "mse_points") {
      spec.mse_points = static_cast<int>(to_int_or_throw(key, value));
    } else if (key == "budget_ms") {
      spec.cell_budget_ms = to_double_or_throw(key, value);
    } else if (key == "output") {
      spec.output_path = value;
    } else if (key == "parallel") {
      if (value == "true" || value == "1") {
        spec.parallel = true;
      } else if (value == "false" || value == "0") {
        spec.parallel = false;
      } else {
        throw ConfigError("config key 'parallel': expected true or false");
      }
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  if (!have_replications) {
    // Matched defaults: stochastic sweeps average 50 runs, fixed-design
    // killed batches 100, exact sweeps have no randomness to average.
    if (spec.data == ExperimentSpec::Data::exact) {
      spec.replications = 1;
    } else if (spec.data == ExperimentSpec::Data::killed_batch &&
               spec.kill_law == ExperimentSpec::KillLaw::fixed) {
      spec.replications = 100;
    } else {
      spec.replications = 50;
    }
  }
  return spec;
}

}  // namespace ctpe
