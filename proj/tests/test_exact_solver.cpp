#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "ctpe/exact_solver.hpp"
#include "ctpe/experiment_harness.hpp"
#include "doctest.h"

using ctpe::apply_bellman_operator;
using ctpe::BellmanScheme;
using ctpe::default_eval_grid;
using ctpe::default_solve_grid;
using ctpe::DiffusionModel;
using ctpe::evaluate;
using ctpe::FeatureMap;
using ctpe::fit_slope;
using ctpe::GeneratorScheme;
using ctpe::GridSpec;
using ctpe::make_bellman_scheme;
using ctpe::make_generator_scheme;
using ctpe::make_ou;
using ctpe::parse_basis_spec;
using ctpe::solve_bellman_exact;
using ctpe::solve_generator_exact;
using ctpe::sup_error;
using ctpe::uniform_grid;
using ctpe::ValueApproximation;

namespace {

constexpr double kPi = 3.14159265358979323846;

DiffusionModel cos3_model() {
  ctpe::RewardParams p;
  p.k = 1.0;
  return ctpe::make_deterministic_linear(0.05, "cos3", p, 0.1);
}

DiffusionModel constant_reward_model(double c) {
  DiffusionModel m = make_ou(-0.1, 1.0, "quadratic", 1.0);
  m.reward = [c](double) { return c; };
  m.true_value = [c, beta = m.beta](double) { return c / beta; };
  return m;
}

double sup_gap(const ValueApproximation& fit, const DiffusionModel& model) {
  return sup_error(fit, model.true_value, default_eval_grid());
}

}  // namespace

TEST_CASE("constant reward solves to c/beta for every order and form") {
  const double c = 0.7;
  const DiffusionModel m = constant_reward_model(c);
  const GridSpec grid = default_solve_grid();
  for (const char* spec : {"quadratic", "fourier:2"}) {
    const FeatureMap fm = parse_basis_spec(spec);
    for (int n = 1; n <= 3; ++n) {
      const ValueApproximation vb =
          solve_bellman_exact(m, fm, make_bellman_scheme(n, m.beta, 0.1), grid);
      const ValueApproximation vg =
          solve_generator_exact(m, fm, make_generator_scheme(n, m.beta, 0.1), grid);
      for (double x : {-3.0, -0.4, 0.0, 1.7}) {
        CHECK(std::abs(evaluate(vb, x) - c / m.beta) < 1e-10);
        CHECK(std::abs(evaluate(vg, x) - c / m.beta) < 1e-10);
      }
    }
  }

  // The rectangle-rule variant lands on its own biased constant instead.
  const FeatureMap fm = parse_basis_spec("quadratic");
  const double eta = 0.1;
  const ValueApproximation naive =
      solve_bellman_exact(m, fm, ctpe::first_order_bellman(m.beta, eta, true), grid);
  const double biased = c * eta / -std::expm1(-m.beta * eta);
  CHECK(std::abs(evaluate(naive, 0.3) - biased) < 1e-10);
  CHECK(std::abs(biased - c / m.beta) > 1e-3);
}

TEST_CASE("second order beats first order on the cosine benchmark") {
  const DiffusionModel m = cos3_model();
  const FeatureMap fm = parse_basis_spec("fourier:5");
  const GridSpec grid = default_solve_grid();
  const double eta = 0.01;
  const double e1 = sup_gap(solve_bellman_exact(m, fm, make_bellman_scheme(1, m.beta, eta), grid), m);
  const double e2 = sup_gap(solve_bellman_exact(m, fm, make_bellman_scheme(2, m.beta, eta), grid), m);
  CHECK(e2 < e1);
  const double g1 =
      sup_gap(solve_generator_exact(m, fm, make_generator_scheme(1, m.beta, eta), grid), m);
  const double g2 =
      sup_gap(solve_generator_exact(m, fm, make_generator_scheme(2, m.beta, eta), grid), m);
  CHECK(g2 < g1);
}

TEST_CASE("second-order stepsize slopes sit near two") {
  const DiffusionModel m = cos3_model();
  const FeatureMap fm = parse_basis_spec("fourier:5");
  const GridSpec grid = default_solve_grid();
  const std::vector<double> ladder{1.0, 0.1, 0.01, 1e-3};
  std::vector<double> eb;
  std::vector<double> eg;
  for (double eta : ladder) {
    eb.push_back(sup_gap(solve_bellman_exact(m, fm, make_bellman_scheme(2, m.beta, eta), grid), m));
    eg.push_back(
        sup_gap(solve_generator_exact(m, fm, make_generator_scheme(2, m.beta, eta), grid), m));
  }
  const auto sb = fit_slope(ladder, eb, 0.0);
  const auto sg = fit_slope(ladder, eg, 0.0);
  REQUIRE(sb.slope.has_value());
  REQUIRE(sg.slope.has_value());
  CHECK(*sb.slope > 1.6);
  CHECK(*sb.slope < 2.4);
  CHECK(*sg.slope > 1.6);
  CHECK(*sg.slope < 2.4);
}

TEST_CASE("first-order generator solve is a reweighted one-step solve") {
  const DiffusionModel m = make_ou(-0.1, 1.0, "quadratic", 1.0);
  const FeatureMap fm = parse_basis_spec("quadratic");
  const GridSpec grid = default_solve_grid();
  const double eta = 0.1;
  const ValueApproximation gen =
      solve_generator_exact(m, fm, make_generator_scheme(1, m.beta, eta), grid);

  // beta psi - (E[psi_eta] - psi)/eta = r  <=>  psi - E[psi_eta]/(1+beta eta)
  // = eta r/(1+beta eta): a one-step scheme with both weights 1/(1+beta eta).
  BellmanScheme rearranged;
  rearranged.order = 1;
  rearranged.beta = m.beta;
  rearranged.eta = eta;
  rearranged.kappa = {1.0 / (1.0 + m.beta * eta)};
  rearranged.lookahead_discount = 1.0 / (1.0 + m.beta * eta);
  rearranged.lookahead_steps = 1;
  const ValueApproximation bel = solve_bellman_exact(m, fm, rearranged, grid);

  REQUIRE(gen.theta.size() == bel.theta.size());
  for (std::size_t j = 0; j < gen.theta.size(); ++j) {
    CHECK(std::abs(gen.theta[j] - bel.theta[j]) < 1e-10);
  }
}

TEST_CASE("second-order solves of the quadratic benchmark are accurate at eta 0.1") {
  const DiffusionModel m = make_ou(-0.1, 1.0, "quadratic", 1.0);
  const FeatureMap fm = parse_basis_spec("quadratic");
  const GridSpec grid = default_solve_grid();
  CHECK(sup_gap(solve_generator_exact(m, fm, make_generator_scheme(2, m.beta, 0.1), grid), m) <=
        1e-2);
  CHECK(sup_gap(solve_bellman_exact(m, fm, make_bellman_scheme(2, m.beta, 0.1), grid), m) <= 1e-2);
}

TEST_CASE("operator application") {
  const DiffusionModel m = make_ou(-0.1, 1.0, "quadratic", 1.0);
  const GridSpec grid = uniform_grid(-kPi, kPi, 200);

  SUBCASE("zero reward keeps zero fixed") {
    DiffusionModel z = m;
    z.reward = [](double) { return 0.0; };
    const std::vector<double> zero(grid.points.size(), 0.0);
    const std::vector<double> out =
        apply_bellman_operator(make_bellman_scheme(2, m.beta, 0.1), z, zero, grid);
    for (double v : out) CHECK(std::abs(v) < 1e-14);
  }

  SUBCASE("sup-norm contraction on random grid functions") {
    ctpe::RngStream rng(404, 0);
    for (int n : {2, 3}) {
      const BellmanScheme scheme = make_bellman_scheme(n, m.beta, 0.1);
      for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> f1(grid.points.size());
        std::vector<double> f2(grid.points.size());
        for (std::size_t i = 0; i < f1.size(); ++i) {
          f1[i] = rng.normal();
          f2[i] = rng.normal();
        }
        const std::vector<double> t1 = apply_bellman_operator(scheme, m, f1, grid);
        const std::vector<double> t2 = apply_bellman_operator(scheme, m, f2, grid);
        double in_gap = 0.0;
        double out_gap = 0.0;
        for (std::size_t i = 0; i < f1.size(); ++i) {
          in_gap = std::max(in_gap, std::abs(f1[i] - f2[i]));
          out_gap = std::max(out_gap, std::abs(t1[i] - t2[i]));
        }
        CHECK(out_gap <= scheme.lookahead_discount * in_gap + 1e-8);
      }
    }
  }

  SUBCASE("residual at the true value function shrinks at the scheme order") {
    const std::vector<double> ladder{0.4, 0.2, 0.1, 0.05};
    for (int n : {1, 2}) {
      std::vector<double> residuals;
      for (double eta : ladder) {
        const std::vector<double> tv =
            apply_bellman_operator(make_bellman_scheme(n, m.beta, eta), m, m.true_value, grid);
        double gap = 0.0;
        for (std::size_t i = 0; i < grid.points.size(); ++i) {
          gap = std::max(gap, std::abs(tv[i] - m.true_value(grid.points[i])));
        }
        residuals.push_back(gap);
      }
      const auto fit = fit_slope(ladder, residuals, 0.0);
      REQUIRE(fit.slope.has_value());
      CHECK(*fit.slope >= n - 0.4);
    }
  }
}

TEST_CASE("refining the solve grid barely moves the reported errors") {
  const DiffusionModel m = cos3_model();
  const FeatureMap fm = parse_basis_spec("fourier:5");
  for (int n : {1, 2}) {
    const double coarse = sup_gap(
        solve_bellman_exact(m, fm, make_bellman_scheme(n, m.beta, 0.1), uniform_grid(-kPi, kPi, 400)),
        m);
    const double fine = sup_gap(
        solve_bellman_exact(m, fm, make_bellman_scheme(n, m.beta, 0.1), uniform_grid(-kPi, kPi, 800)),
        m);
    CHECK(std::abs(fine - coarse) < 0.05 * coarse);
  }
}

TEST_CASE("grid construction and validation") {
  const GridSpec g = uniform_grid(-1.0, 1.0, 4);
  REQUIRE(g.points.size() == 5);
  CHECK(g.points.front() == -1.0);
  CHECK(g.points.back() == 1.0);
  CHECK(g.points[2] == doctest::Approx(0.0).scale(1.0));

  const DiffusionModel m = make_ou(-0.1, 1.0, "quadratic", 1.0);
  const FeatureMap fm = parse_basis_spec("quadratic");
  GridSpec bad;
  bad.points = {0.0, 1.0, 1.0};
  CHECK_THROWS_AS(solve_bellman_exact(m, fm, make_bellman_scheme(2, m.beta, 0.1), bad),
                  ctpe::DomainError);
  GridSpec negw = uniform_grid(-1.0, 1.0, 4);
  negw.weights = {1.0, 1.0, -1.0, 1.0, 1.0};
  CHECK_THROWS_AS(solve_bellman_exact(m, fm, make_bellman_scheme(2, m.beta, 0.1), negw),
                  ctpe::DomainError);

  // Models without an exact transition law cannot be solved at population level.
  const DiffusionModel lan = ctpe::make_langevin([](double x) { return x; }, 1.0);
  CHECK_THROWS_AS(solve_bellman_exact(lan, fm, make_bellman_scheme(2, 1.0, 0.1), g),
                  ctpe::DomainError);
}

TEST_CASE("diagnostics and parallel assembly") {
  const DiffusionModel m = make_ou(-0.1, 1.0, "quadratic", 1.0);
  const FeatureMap fm = parse_basis_spec("quadratic");
  const GridSpec grid = default_solve_grid();
  const auto scheme = make_bellman_scheme(2, m.beta, 0.1);
  const ValueApproximation seq = solve_bellman_exact(m, fm, scheme, grid);
  CHECK(seq.sample_count == static_cast<long long>(grid.points.size()));
  CHECK(seq.diagnostics.condition_estimate > 0.0);

  const ValueApproximation par = solve_bellman_exact(m, fm, scheme, grid, true);
  for (std::size_t j = 0; j < seq.theta.size(); ++j) {
    CHECK(par.theta[j] == doctest::Approx(seq.theta[j]).epsilon(1e-12));
  }

  // Grid weights are honored: weighting every point equally is the default.
  GridSpec weighted = grid;
  weighted.weights.assign(grid.points.size(), 2.0);
  const ValueApproximation scaled = solve_bellman_exact(m, fm, scheme, weighted);
  for (std::size_t j = 0; j < seq.theta.size(); ++j) {
    CHECK(scaled.theta[j] == doctest::Approx(seq.theta[j]).epsilon(1e-12));
  }
}
