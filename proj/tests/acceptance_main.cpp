// Acceptance gate: ten end-to-end checks with pinned tolerances and runtime
// budgets. Each prints exactly one PASS/FAIL line; the exit code is the
// number of failures. Budgets are part of the pass condition.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ctpe/experiment_harness.hpp"

using namespace ctpe;

namespace {

constexpr double kPi = 3.14159265358979323846;

// 1 - (1 + a) e^{-a} = sum_{k>=2} (-1)^k a^k (k-1)/k!, summed directly for
// small a where the subtractive form loses every significant digit.
long double one_minus_1pa_exp(long double a) {
  if (a > 0.5L) return 1.0L - (1.0L + a) * std::exp(-a);
  long double sum = 0.0L;
  long double pow_term = a;  // a^k / k!
  for (int k = 2; k <= 30; ++k) {
    pow_term *= a / k;
    const long double term = pow_term * (k - 1);
    sum += (k % 2 == 0) ? term : -term;
  }
  return sum;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

struct Outcome {
  bool ok = true;
  std::string detail;
  void fail(const std::string& why) {
    ok = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
};

bool slope_in(const SweepResult& result, const std::string& method, double lo, double hi,
              Outcome& outcome) {
  const auto it = result.slopes.find(method);
  if (it == result.slopes.end() || !it->second.slope.has_value()) {
    outcome.fail(method + ": no slope");
    return false;
  }
  const double s = *it->second.slope;
  if (s < lo || s > hi) {
    outcome.fail(method + fmt(": slope %.3f outside [%.2f, %.2f]", s, lo, hi));
    return false;
  }
  return true;
}

// ---- criterion bodies -------------------------------------------------------

Outcome criterion_coefficients() {
  Outcome out;
  for (double beta : {0.1, 1.0, 2.0}) {
    for (double eta : {1e-3, 1e-2, 1e-1, 1.0}) {
      const std::vector<double> kappa = kappa_coefficients(2, beta, eta);
      const long double a = static_cast<long double>(beta) * eta;
      const long double second = one_minus_1pa_exp(a) / (static_cast<long double>(beta) * beta * eta);
      const long double first = -std::expm1(-a) / beta - second;
      const long double got0 = static_cast<long double>(eta) * kappa[0];
      const long double got1 = static_cast<long double>(eta) * kappa[1];
      if (std::fabs(got0 - first) > 1e-12L * std::max(1.0L, std::fabs(first)) ||
          std::fabs(got1 - second) > 1e-12L * std::max(1.0L, std::fabs(second))) {
        out.fail(fmt("kappa mismatch at beta=%g eta=%g", beta, eta));
      }
    }
  }
  const std::vector<long double> c1 = generator_coefficients(1);
  const std::vector<long double> c2 = generator_coefficients(2);
  if (!(c1[0] == -1.0L && c1[1] == 1.0L)) out.fail("first-order stencil not (-1, 1)");
  if (!(c2[0] == -1.5L && c2[1] == 2.0L && c2[2] == -0.5L)) {
    out.fail("second-order stencil not (-1.5, 2, -0.5)");
  }
  return out;
}

ExperimentSpec exact_spec(const std::string& model_id,
                          std::map<std::string, double> params, const std::string& basis) {
  ExperimentSpec spec;
  spec.model_id = model_id;
  spec.model_params = std::move(params);
  spec.basis = basis;
  spec.axis = ExperimentSpec::Axis::eta_ladder;
  spec.axis_values = {1.0, 0.1, 0.01, 1e-3};
  spec.data = ExperimentSpec::Data::exact;
  spec.metric = ExperimentSpec::Metric::sup_on_grid;
  spec.replications = 1;
  spec.seed = 1;
  return spec;
}

Outcome criterion_exact_orders() {
  Outcome out;
  ExperimentSpec cos3 = exact_spec("deterministic-cos3",
                                   {{"lambda", 0.05}, {"k", 1.0}, {"beta", 0.1}}, "fourier:5");
  ExperimentSpec power = exact_spec(
      "deterministic-power", {{"lambda", 0.01}, {"alpha", 5.0}, {"b", 1.0}, {"beta", 0.1}},
      "legendre:5");
  for (ExperimentSpec* spec : {&cos3, &power}) {
    spec->methods = {parse_method("bellman:1"), parse_method("bellman:2"),
                     parse_method("generator:1"), parse_method("generator:2")};
    const SweepResult result = run_sweep(*spec);
    slope_in(result, "bellman:1", 0.6, 1.4, out);
    slope_in(result, "generator:1", 0.6, 1.4, out);
    slope_in(result, "bellman:2", 1.6, 2.4, out);
    slope_in(result, "generator:2", 1.6, 2.4, out);
  }
  return out;
}

Outcome criterion_beats_naive() {
  Outcome out;
  ExperimentSpec cos3 = exact_spec("deterministic-cos3",
                                   {{"lambda", 0.01}, {"k", 2.0}, {"beta", 2.0}}, "fourier:10");
  ExperimentSpec power = exact_spec(
      "deterministic-power", {{"lambda", 0.01}, {"alpha", 2.0}, {"b", 2.0}, {"beta", 2.0}},
      "legendre:2");
  for (ExperimentSpec* spec : {&cos3, &power}) {
    spec->methods = {parse_method("naive"), parse_method("bellman:1")};
    const SweepResult result = run_sweep(*spec);
    const auto& naive = result.mean_errors.at("naive");
    const auto& weighted = result.mean_errors.at("bellman:1");
    for (std::size_t i = 0; i < spec->axis_values.size(); ++i) {
      if (!(weighted[i] < naive[i])) {
        out.fail(spec->model_id + fmt(": eta=%g weighted %.3g !< naive %.3g",
                                      spec->axis_values[i], weighted[i], naive[i]));
      }
    }
  }
  return out;
}

Outcome criterion_ou_second_order() {
  Outcome out;
  ExperimentSpec spec = exact_spec("ou-quadratic", {}, "quadratic");
  spec.axis_values = {0.4, 0.2, 0.1, 0.05};
  spec.methods = {parse_method("bellman:2"), parse_method("generator:2")};
  const SweepResult result = run_sweep(spec);
  slope_in(result, "bellman:2", 1.6, 2.4, out);
  slope_in(result, "generator:2", 1.6, 2.4, out);

  const DiffusionModel model = make_model("ou-quadratic", {});
  const auto v = derive_lq_truth(model);
  for (double x : default_eval_grid().points) {
    const double derived = v[0] + v[1] * x + v[2] * x * x;
    if (std::abs(derived - model.true_value(x)) > 1e-8) {
      out.fail(fmt("derived truth deviates %.2e at x=%.3f", std::abs(derived - model.true_value(x)),
                   x));
      break;
    }
  }
  return out;
}

const std::vector<std::string> kAllMethods = {"naive", "bellman:1", "bellman:2", "generator:1",
                                              "generator:2"};

ExperimentSpec stochastic_spec() {
  ExperimentSpec spec;
  spec.model_id = "ou-periodic-exp";
  spec.basis = "fourier:3";
  for (const std::string& m : kAllMethods) spec.methods.push_back(parse_method(m));
  spec.data = ExperimentSpec::Data::single_trajectory;
  spec.metric = ExperimentSpec::Metric::mse_on_stationary_sample;
  spec.replications = 50;
  spec.eta = 0.1;
  spec.mse_points = 10000;
  spec.seed = 1;
  return spec;
}

// Exact-solver MSE floors on the same stationary test sample the sweep uses.
std::map<std::string, double> exact_floors(double eta) {
  const DiffusionModel model = make_model("ou-periodic-exp", {});
  const FeatureMap fm = parse_basis_spec("fourier:3");
  const GridSpec grid = default_solve_grid();
  std::map<std::string, double> floors;
  for (const std::string& name : kAllMethods) {
    const MethodSpec method = parse_method(name);
    ValueApproximation fit =
        (method.form == MethodSpec::Form::generator)
            ? solve_generator_exact(model, fm, make_generator_scheme(method.order, model.beta, eta),
                                    grid)
            : solve_bellman_exact(model, fm,
                                  method.form == MethodSpec::Form::naive
                                      ? first_order_bellman(model.beta, eta, true)
                                      : make_bellman_scheme(method.order, model.beta, eta),
                                  grid);
    floors[name] = mse_error(fit, model.true_value, model.stationary_sampler, 10000,
                             mix_seed(1, 0x7e57));
  }
  return floors;
}

Outcome criterion_estimator_consistency() {
  Outcome out;
  ExperimentSpec spec = stochastic_spec();
  spec.axis = ExperimentSpec::Axis::horizon_ladder;
  spec.axis_values = {1e4, 2e4, 4e4, 8e4};
  const SweepResult result = run_sweep(spec);
  const std::map<std::string, double> floors = exact_floors(spec.eta);
  for (const std::string& name : kAllMethods) {
    const auto& means = result.mean_errors.at(name);
    for (std::size_t i = 0; i + 1 < means.size(); ++i) {
      if (!(means[i + 1] <= 1.5 * means[i])) {
        out.fail(name + fmt(": mse rose %.3g -> %.3g past the 1.5x noise ratio", means[i],
                            means[i + 1]));
      }
    }
    if (!(means.back() <= 3.0 * floors.at(name))) {
      out.fail(name + fmt(": largest-T mse %.3g exceeds 3x exact floor %.3g", means.back(),
                          floors.at(name)));
    }
  }
  return out;
}

Outcome criterion_elbow() {
  Outcome out;
  ExperimentSpec spec = stochastic_spec();
  spec.axis = ExperimentSpec::Axis::eta_ladder;
  spec.axis_values = {0.8, 0.4, 0.2, 0.1, 0.05, 0.025};
  spec.horizon = 4e4;
  spec.floor_exclusion_multiplier = 3.0;
  const SweepResult result = run_sweep(spec);
  for (const char* raw : {"naive", "bellman:1", "generator:1"}) {
    const std::string name(raw);
    const auto it = result.slopes.find(name);
    if (it == result.slopes.end() || !it->second.slope.has_value() ||
        it->second.points_used < 3) {
      out.fail(name + ": no floor-excluded slope on >= 3 points");
      continue;
    }
    if (!(*it->second.slope >= 0.6)) {
      out.fail(name + fmt(": mse slope %.3f < 0.6 above the floor", *it->second.slope));
    }
  }
  for (const char* raw : {"bellman:2", "generator:2"}) {
    const std::string name(raw);
    const auto& means = result.mean_errors.at(name);
    double lowest = means[0];
    for (double m : means) lowest = std::min(lowest, m);
    int near_floor = 0;
    for (double m : means) {
      if (m <= 3.0 * lowest) ++near_floor;
    }
    if (near_floor < 2) {
      out.fail(name + ": mse does not flatten (single point near the floor)");
    }
  }
  return out;
}

Outcome criterion_constant_reward() {
  Outcome out;
  DiffusionModel model = make_ou(-0.1, 1.0, "quadratic", 1.0);
  model.reward = [](double) { return 0.7; };
  model.true_value = [](double) { return 0.7; };
  const FeatureMap fm = parse_basis_spec("quadratic");
  const GridSpec grid = default_solve_grid();

  const auto check_fit = [&](const ValueApproximation& fit, const std::string& label) {
    double worst = 0.0;
    for (double x : default_eval_grid().points) {
      worst = std::max(worst, std::abs(evaluate(fit, x) - 0.7));
    }
    if (worst > 1e-9) out.fail(label + fmt(": sup deviation %.2e from c/beta", worst));
  };

  const Trajectory traj = simulate_trajectory(model, 0.5, 0.1, 2000, 5);
  const TrajectoryBatch batch =
      simulate_killed_batch(model, model.stationary_sampler, 0.1, 300, model.beta, 6);
  for (int n = 1; n <= 3; ++n) {
    const BellmanScheme bel = make_bellman_scheme(n, model.beta, 0.1);
    const GeneratorScheme gen = make_generator_scheme(n, model.beta, 0.1);
    const std::string tag = ":" + std::to_string(n);
    check_fit(solve_bellman_exact(model, fm, bel, grid), "solve-bellman" + tag);
    check_fit(solve_generator_exact(model, fm, gen, grid), "solve-generator" + tag);
    check_fit(estimate_bellman(traj, fm, bel), "estimate-bellman" + tag);
    check_fit(estimate_generator(traj, fm, gen), "estimate-generator" + tag);
    check_fit(estimate_bellman_killed(batch, fm, bel), "killed-bellman" + tag);
    check_fit(estimate_generator_killed(batch, fm, gen), "killed-generator" + tag);
  }
  return out;
}

Outcome criterion_first_order_identity() {
  Outcome out;
  const DiffusionModel model = make_model("ou-quadratic", {});
  const FeatureMap fm = parse_basis_spec("quadratic");
  const double beta = model.beta, eta = 0.1;
  const GeneratorScheme gen = make_generator_scheme(1, beta, eta);
  BellmanScheme rearranged;
  rearranged.order = 1;
  rearranged.beta = beta;
  rearranged.eta = eta;
  rearranged.kappa = {1.0 / (1.0 + beta * eta)};
  rearranged.lookahead_discount = 1.0 / (1.0 + beta * eta);
  rearranged.lookahead_steps = 1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream init(seed, 0x10);
    const double x0 = model.stationary_sampler(init);
    const Trajectory traj = simulate_trajectory(model, x0, eta, 200, seed);
    const ValueApproximation via_gen = estimate_generator(traj, fm, gen);
    const ValueApproximation via_bel = estimate_bellman(traj, fm, rearranged);
    if (via_gen.sample_count != via_bel.sample_count) {
      out.fail(fmt("window counts differ at seed %g", static_cast<double>(seed)));
      continue;
    }
    for (std::size_t j = 0; j < via_gen.theta.size(); ++j) {
      const double gap = std::abs(via_gen.theta[j] - via_bel.theta[j]);
      if (gap > 1e-10 * std::max(1.0, std::abs(via_gen.theta[j]))) {
        out.fail(fmt("theta gap %.2e at seed %g", gap, static_cast<double>(seed)));
        break;
      }
    }
  }
  return out;
}

Outcome criterion_contraction() {
  Outcome out;
  const DiffusionModel model = make_model("ou-quadratic", {});
  const GridSpec grid = uniform_grid(-kPi, kPi, 200);
  RngStream rng(33, 0);
  for (int pair = 0; pair < 50; ++pair) {
    std::vector<double> f(grid.points.size()), g(grid.points.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      f[i] = 4.0 * rng.uniform() - 2.0;
      g[i] = 4.0 * rng.uniform() - 2.0;
    }
    double gap_in = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) gap_in = std::max(gap_in, std::abs(f[i] - g[i]));
    for (int n : {2, 3}) {
      const BellmanScheme scheme = make_bellman_scheme(n, model.beta, 0.1);
      const std::vector<double> tf = apply_bellman_operator(scheme, model, f, grid);
      const std::vector<double> tg = apply_bellman_operator(scheme, model, g, grid);
      double gap_out = 0.0;
      for (std::size_t i = 0; i < tf.size(); ++i) {
        gap_out = std::max(gap_out, std::abs(tf[i] - tg[i]));
      }
      if (!(gap_out <= scheme.lookahead_discount * gap_in + 1e-8)) {
        out.fail(fmt("pair %g n=%g: output gap %.6g breaks the contraction",
                     static_cast<double>(pair), static_cast<double>(n), gap_out));
      }
    }
  }
  return out;
}

Outcome criterion_gradient_bound() {
  Outcome out;
  const GradientBoundReport report = fourier_gradient_bound_check(make_fourier(5), 100, 2024);
  if (!(report.max_ratio > 0.0 && report.max_ratio <= report.omega_max * (1.0 + 1e-6))) {
    out.fail(fmt("max ratio %.9f vs bound %.1f", report.max_ratio, report.omega_max));
  }
  return out;
}

struct Criterion {
  const char* label;
  double budget_s;
  Outcome (*body)();
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"second-order reward weights and generator stencils match closed forms", 1.0,
       criterion_coefficients},
      {"exact solvers converge at their design orders on both deterministic settings", 60.0,
       criterion_exact_orders},
      {"exponentially weighted first-order solve beats the rectangle rule at every stepsize",
       60.0, criterion_beats_naive},
      {"both second-order solvers hit slope two on the OU quadratic setting", 60.0,
       criterion_ou_second_order},
      {"estimator mse is non-increasing in horizon and stabilizes at the exact floor", 600.0,
       criterion_estimator_consistency},
      {"second-order estimator mse flattens at the statistical floor, first order keeps falling",
       600.0, criterion_elbow},
      {"constant rewards are recovered exactly by every solver and estimator", 10.0,
       criterion_constant_reward},
      {"first-order generator fit equals the rearranged discounted Bellman fit", 10.0,
       criterion_first_order_identity},
      {"multistep Bellman operator contracts at the discounted rate", 30.0,
       criterion_contraction},
      {"random Fourier span elements respect the top-frequency gradient bound", 5.0,
       criterion_gradient_bound},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Criterion& criterion = criteria[i];
    Outcome outcome;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      outcome = criterion.body();
    } catch (const std::exception& e) {
      outcome.ok = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (elapsed >= criterion.budget_s) {
      outcome.fail(fmt("runtime %.1f s over the %.0f s budget", elapsed, criterion.budget_s));
    }
    std::printf("[%2zu] %s %s (%.2f s / %.0f s)%s%s\n", i + 1, outcome.ok ? "PASS" : "FAIL",
                criterion.label, elapsed, criterion.budget_s, outcome.detail.empty() ? "" : " -- ",
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.ok) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures;
}
