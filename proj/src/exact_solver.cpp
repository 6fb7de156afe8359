#include "ctpe/exact_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ctpe/quadrature.hpp"
#include "parallel_util.hpp"

namespace ctpe {
namespace {

void validate_grid(const GridSpec& grid) {
  if (grid.points.size() < 2) throw DomainError("grid needs at least two points");
  for (std::size_t i = 1; i < grid.points.size(); ++i) {
    if (!(grid.points[i] > grid.points[i - 1])) {
      throw DomainError("grid points must be strictly increasing");
    }
  }
  if (!grid.weights.empty()) {
    if (grid.weights.size() != grid.points.size()) {
      throw DomainError("grid weights must match points in length");
    }
    for (double w : grid.weights) {
      if (!(w >= 0.0)) throw DomainError("grid weights must be nonnegative");
    }
  }
}

const ExactKernel& require_kernel(const DiffusionModel& model) {
  if (!model.exact_kernel) {
    throw DomainError("exact solver requires a model with a closed-form transition kernel");
  }
  return *model.exact_kernel;
}

// E[psi(X_t) | x] into out; closed form when the kernel supports the family,
// Gauss-Hermite otherwise.
void expect_features(const DiffusionModel& model, const FeatureMap& fm, double x, double t,
                     double* out) {
  if (t == 0.0) {
    fm.eval_into(x, out);
    return;
  }
  const ExactKernel& kernel = require_kernel(model);
  if (kernel.expect_feature && kernel.expect_feature(fm, x, t, out)) return;
  const double mu = kernel.conditional_mean(x, t);
  const double s2 = kernel.conditional_variance(t);
  if (s2 <= 0.0) {
    fm.eval_into(mu, out);
    return;
  }
  const QuadratureRule& gh = gauss_hermite(kGaussHermitePoints);
  const double scale = std::sqrt(2.0 * s2);
  const int m = fm.size();
  std::fill(out, out + m, 0.0);
  std::vector<double> row(m);
  for (std::size_t q = 0; q < gh.nodes.size(); ++q) {
    fm.eval_into(mu + scale * gh.nodes[q], row.data());
    for (int j = 0; j < m; ++j) out[j] += gh.weights[q] * row[j];
  }
  const double inv = 1.0 / std::sqrt(std::numbers::pi);
  for (int j = 0; j < m; ++j) out[j] *= inv;
}

// E[g(X_t) | x] for scalar g.
double expect_scalar(const DiffusionModel& model, const std::function<double(double)>& g,
                     double x, double t) {
  if (t == 0.0) return g(x);
  const ExactKernel& kernel = require_kernel(model);
  const double mu = kernel.conditional_mean(x, t);
  const double s2 = kernel.conditional_variance(t);
  if (s2 <= 0.0) return g(mu);
  const QuadratureRule& gh = gauss_hermite(kGaussHermitePoints);
  const double scale = std::sqrt(2.0 * s2);
  double s = 0.0;
  for (std::size_t q = 0; q < gh.nodes.size(); ++q) {
    s += gh.weights[q] * g(mu + scale * gh.nodes[q]);
  }
  return s / std::sqrt(std::numbers::pi);
}

// eta * sum_i kappa_i E[r(X_{i eta}) | x]; the i = 0 term is r(x) itself.
double discounted_reward_row(const DiffusionModel& model, const BellmanScheme& scheme, double x) {
  double s = 0.0;
  for (std::size_t i = 0; i < scheme.kappa.size(); ++i) {
    s += scheme.kappa[i] * expect_scalar(model, model.reward, x, i * scheme.eta);
  }
  return scheme.eta * s;
}

struct Accumulator {
  Matrix A;
  std::vector<double> b;
};

ValueApproximation finish(const FeatureMap& fm, Accumulator& acc, long long rows) {
  SolveReport report = solve(acc.A, acc.b);
  return ValueApproximation{std::move(report.solution), fm,
                            SolveReport{{}, report.condition_estimate, report.residual_norm,
                                        report.regularization, report.condition_warning},
                            rows};
}

}  // namespace

GridSpec uniform_grid(double a, double b, int cells) {
  if (!(a < b)) throw DomainError("uniform_grid: need a < b");
  if (cells < 1) throw DomainError("uniform_grid: need cells >= 1");
  GridSpec grid;
  grid.points.resize(cells + 1);
  for (int k = 0; k <= cells; ++k) {
    grid.points[k] = a + (b - a) * static_cast<double>(k) / cells;
  }
  return grid;
}

ValueApproximation solve_bellman_exact(const DiffusionModel& model, const FeatureMap& fm,
                                       const BellmanScheme& scheme, const GridSpec& grid,
                                       bool parallel) {
  validate_grid(grid);
  require_kernel(model);
  const int m = fm.size();
  const std::size_t G = grid.points.size();
  const double look_t = scheme.lookahead_steps * scheme.eta;

  const auto assemble = [&](std::size_t g0, std::size_t g1, Accumulator& acc) {
    std::vector<double> psi(m), fwd(m);
    for (std::size_t g = g0; g < g1; ++g) {
      const double x = grid.points[g];
      const double w = grid.weights.empty() ? 1.0 : grid.weights[g];
      if (w == 0.0) continue;
      fm.eval_into(x, psi.data());
      expect_features(model, fm, x, look_t, fwd.data());
      const double rhs = discounted_reward_row(model, scheme, x);
      for (int a = 0; a < m; ++a) {
        const double pa = w * psi[a];
        double* row = acc.A.row(a);
        for (int c = 0; c < m; ++c) {
          row[c] += pa * (psi[c] - scheme.lookahead_discount * fwd[c]);
        }
        acc.b[a] += pa * rhs;
      }
    }
  };

  Accumulator total{Matrix(m, m), std::vector<double>(m, 0.0)};
  if (!parallel) {
    assemble(0, G, total);
  } else {
    std::vector<Accumulator> parts;
    unsigned hw = std::thread::hardware_concurrency();
    parts.resize(std::max(1u, hw), Accumulator{Matrix(m, m), std::vector<double>(m, 0.0)});
    detail::chunked_reduce(
        G, [&](int c, std::size_t lo, std::size_t hi) { assemble(lo, hi, parts[c]); },
        [&](int c) {
          for (int a = 0; a < m; ++a) {
            for (int j = 0; j < m; ++j) total.A(a, j) += parts[c].A(a, j);
            total.b[a] += parts[c].b[a];
          }
        });
  }
  return finish(fm, total, static_cast<long long>(G));
}

ValueApproximation solve_generator_exact(const DiffusionModel& model, const FeatureMap& fm,
                                         const GeneratorScheme& scheme, const GridSpec& grid,
                                         bool parallel) {
  validate_grid(grid);
  require_kernel(model);
  const int m = fm.size();
  const int n = scheme.order;
  const std::size_t G = grid.points.size();

  const auto assemble = [&](std::size_t g0, std::size_t g1, Accumulator& acc) {
    std::vector<double> psi(m), step(m);
    std::vector<long double> comb(m);
    for (std::size_t g = g0; g < g1; ++g) {
      const double x = grid.points[g];
      const double w = grid.weights.empty() ? 1.0 : grid.weights[g];
      if (w == 0.0) continue;
      fm.eval_into(x, psi.data());
      // (1/eta) sum_j c_j E[psi(X_{j eta}) | x], combined in extended
      // precision to keep the stencil's small-coefficient cancellations.
      std::fill(comb.begin(), comb.end(), 0.0L);
      for (int j = 0; j <= n; ++j) {
        expect_features(model, fm, x, j * scheme.eta, step.data());
        for (int a = 0; a < m; ++a) comb[a] += scheme.c[j] * static_cast<long double>(step[a]);
      }
      const double r = model.reward(x);
      for (int a = 0; a < m; ++a) {
        const double pa = w * psi[a];
        double* row = acc.A.row(a);
        for (int c = 0; c < m; ++c) {
          row[c] += pa * (model.beta * psi[c] -
                          static_cast<double>(comb[c] / static_cast<long double>(scheme.eta)));
        }
        acc.b[a] += pa * r;
      }
    }
  };

  Accumulator total{Matrix(m, m), std::vector<double>(m, 0.0)};
  if (!parallel) {
    assemble(0, G, total);
  } else {
    std::vector<Accumulator> parts;
    unsigned hw = std::thread::hardware_concurrency();
    parts.resize(std::max(1u, hw), Accumulator{Matrix(m, m), std::vector<double>(m, 0.0)});
    detail::chunked_reduce(
        G, [&](int c, std::size_t lo, std::size_t hi) { assemble(lo, hi, parts[c]); },
        [&](int c) {
          for (int a = 0; a < m; ++a) {
            for (int j = 0; j < m; ++j) total.A(a, j) += parts[c].A(a, j);
            total.b[a] += parts[c].b[a];
          }
        });
  }
  return finish(fm, total, static_cast<long long>(G));
}

namespace {

// Clamped linear interpolation of grid values: off-grid queries use the two
// bracketing nodes, queries outside [min, max] clamp to the end values. The
// result is always a convex combination of f_on_grid.
double interpolate(const GridSpec& grid, const std::vector<double>& f, double x) {
  const auto& p = grid.points;
  if (x <= p.front()) return f.front();
  if (x >= p.back()) return f.back();
  const auto it = std::upper_bound(p.begin(), p.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - p.begin());
  const std::size_t lo = hi - 1;
  const double t = (x - p[lo]) / (p[hi] - p[lo]);
  return (1.0 - t) * f[lo] + t * f[hi];
}

}  // namespace

std::vector<double> apply_bellman_operator(const BellmanScheme& scheme,
                                           const DiffusionModel& model,
                                           const std::function<double(double)>& f,
                                           const GridSpec& grid) {
  validate_grid(grid);
  require_kernel(model);
  const double look_t = scheme.lookahead_steps * scheme.eta;
  std::vector<double> out(grid.points.size());
  for (std::size_t g = 0; g < grid.points.size(); ++g) {
    const double x = grid.points[g];
    out[g] = discounted_reward_row(model, scheme, x) +
             scheme.lookahead_discount * expect_scalar(model, f, x, look_t);
  }
  return out;
}

std::vector<double> apply_bellman_operator(const BellmanScheme& scheme,
                                           const DiffusionModel& model,
                                           const std::vector<double>& f_on_grid,
                                           const GridSpec& grid) {
  validate_grid(grid);
  if (f_on_grid.size() != grid.points.size()) {
    throw DomainError("apply_bellman_operator: grid values length mismatch");
  }
  return apply_bellman_operator(
      scheme, model, [&](double x) { return interpolate(grid, f_on_grid, x); }, grid);
}

}  // namespace ctpe
