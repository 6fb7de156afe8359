#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctpe/exact_solver.hpp"
#include "ctpe/trajectory_estimators.hpp"

namespace ctpe {

// A discretization method under comparison. "naive" is the rectangle-rule
// one-step Bellman update; bellman/generator carry their order.
struct MethodSpec {
  enum class Form { naive, bellman, generator };
  Form form = Form::naive;
  int order = 1;
  std::string name() const;  // "naive", "bellman:2", "generator:1", ...
};

// Parses "naive", "bellman:N", "generator:N". Throws ConfigError.
MethodSpec parse_method(const std::string& text);

struct ExperimentSpec {
  std::string model_id = "ou-quadratic";
  std::map<std::string, double> model_params;
  std::vector<MethodSpec> methods;
  std::string basis = "quadratic";

  enum class Axis { eta_ladder, horizon_ladder, trajectory_count_ladder };
  Axis axis = Axis::eta_ladder;
  std::vector<double> axis_values;

  // exact: population solvers on the solve grid (no randomness).
  // single_trajectory: one stationary trajectory per replication.
  // killed_batch: independent killed trajectories per replication.
  enum class Data { exact, single_trajectory, killed_batch };
  Data data = Data::exact;

  enum class Metric { sup_on_grid, mse_on_stationary_sample };
  Metric metric = Metric::sup_on_grid;

  int replications = 1;
  std::uint64_t seed = 0;
  double eta = 0.1;        // fixed step for horizon/count ladders
  double horizon = 1e4;    // fixed total time T for estimator eta ladders
  int points_per_trajectory = 4;  // fixed-kill batches: states per trajectory

  enum class KillLaw { geometric, fixed };
  KillLaw kill_law = KillLaw::geometric;

  enum class Initial { stationary, uniform };
  Initial initial = Initial::stationary;
  double initial_a = -3.14159265358979323846;
  double initial_b = 3.14159265358979323846;

  // Slope fits drop errors at or below multiplier * (smallest mean error);
  // 0 disables the floor exclusion.
  double floor_exclusion_multiplier = 0.0;
  int mse_points = 10000;
  // Wall-clock guard: once one cell of a method exceeds this many
  // milliseconds, that method's remaining cells are cancelled and marked.
  // 0 disables the guard.
  double cell_budget_ms = 0.0;
  std::string output_path = "sweep.csv";
  bool parallel = false;
};

struct SweepCell {
  std::string method;
  double axis_value = 0.0;
  int replication = 0;
  double error = 0.0;
  double runtime_ms = 0.0;
  double cond = 0.0;
  bool warn = false;
  bool failed = false;
  std::string message;
};

struct SlopeFit {
  std::optional<double> slope;
  int points_used = 0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  // Per method: mean error (over replications) for each axis value, and the
  // log-log slope fitted to those means.
  std::map<std::string, std::vector<double>> mean_errors;
  std::map<std::string, SlopeFit> slopes;
};

// Runs the full grid of (axis value, replication, method) cells. Data are
// shared across methods within a cell (matched seeds); cell randomness is
// keyed by (seed, axis index, replication) only, so results are independent
// of scheduling. Per-cell failures are recorded in the cell, not thrown;
// configuration-level problems (unknown model/basis/method) throw.
SweepResult run_sweep(const ExperimentSpec& spec);

// Reads a nested key-value config ("a.b = value" lines, '#' comments) into
// an ExperimentSpec. Unknown keys, unknown models, and malformed values
// throw ConfigError naming the offending key.
ExperimentSpec parse_experiment_config(const std::string& path);

// Writes cells as CSV with the standard header comment.
void write_sweep_csv(const SweepResult& result, const ExperimentSpec& spec,
                     const std::string& path);

// One-line "key=value ..." echo of every resolved field, for output headers.
std::string describe_experiment(const ExperimentSpec& spec);

// max_j |V(x_j) - truth(x_j)| over the evaluation grid.
double sup_error(const ValueApproximation& approx, const std::function<double(double)>& truth,
                 const GridSpec& eval_grid);

// (1/N) sum (V(Z_i) - truth(Z_i))^2 over N sampler draws (fixed by seed).
double mse_error(const ValueApproximation& approx, const std::function<double(double)>& truth,
                 const std::function<double(RngStream&)>& sampler, int n_points,
                 std::uint64_t seed);

// Least-squares slope of log(error) against log(axis). Points with
// non-finite or non-positive error, or error <= floor_exclusion, are
// dropped; fewer than three surviving points yields an empty slope.
SlopeFit fit_slope(const std::vector<double>& axis, const std::vector<double>& errors,
                   double floor_exclusion);

// Exact value-function coefficients (v0, v1, v2) for a linear-dynamics model
// with polynomial reward r(x) = r0 + r1 x + r2 x^2:
//   v2 = r2/(beta - 2 lambda), v1 = r1/(beta - lambda),
//   v0 = (r0 + sigma^2 v2)/beta.
// Throws DomainError off the resonance sets beta == 2 lambda / beta ==
// lambda and when the model is not linear-dynamics with quadratic reward.
std::array<double, 3> derive_lq_truth(const DiffusionModel& model);

// The standard grids: 400-cell solve grid and 100-cell evaluation grid on
// [-pi, pi].
GridSpec default_solve_grid();
GridSpec default_eval_grid();

}  // namespace ctpe
