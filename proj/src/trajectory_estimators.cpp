#include "ctpe/trajectory_estimators.hpp"

#include <cmath>
#include <cstddef>

#include "parallel_util.hpp"

namespace ctpe {
namespace {

struct Accumulator {
  Matrix A;
  std::vector<double> b;
  explicit Accumulator(int m) : A(m, m), b(m, 0.0) {}
  void merge(const Accumulator& o) {
    const int m = static_cast<int>(b.size());
    for (int a = 0; a < m; ++a) {
      for (int j = 0; j < m; ++j) A(a, j) += o.A(a, j);
      b[a] += o.b[a];
    }
  }
};

// Feature rows for a window of consecutive states, recomputed streaming so
// memory stays O(m * window) regardless of trajectory length.
class FeatureWindow {
 public:
  FeatureWindow(const FeatureMap& fm, const std::vector<double>& states, int span)
      : fm_(fm), states_(states), span_(span), rows_(static_cast<std::size_t>(span) * fm.size()) {}

  // Positions the window at state index k (monotone nondecreasing calls).
  void advance_to(std::size_t k) {
    while (next_ <= k + span_ - 1) {
      fm_.eval_into(states_[next_], &rows_[(next_ % span_) * fm_.size()]);
      ++next_;
    }
  }

  const double* row(std::size_t state_index) const {
    return &rows_[(state_index % span_) * fm_.size()];
  }

  void reset(std::size_t k) {
    next_ = k;
    advance_to(k);
  }

 private:
  const FeatureMap& fm_;
  const std::vector<double>& states_;
  std::size_t span_;
  std::vector<double> rows_;
  std::size_t next_ = 0;
};

void check_trajectory(const Trajectory& traj) {
  if (!(traj.eta > 0.0)) throw DomainError("estimator: trajectory eta must be > 0");
  if (traj.states.size() != traj.rewards.size()) {
    throw DomainError("estimator: states/rewards length mismatch");
  }
}

void check_scheme_step(double scheme_eta, double traj_eta) {
  if (std::abs(scheme_eta - traj_eta) > 1e-12 * (scheme_eta + traj_eta)) {
    throw DomainError("estimator: scheme step does not match trajectory spacing");
  }
}

// Accumulates Bellman windows k = k0..k1-1 of one trajectory.
void accumulate_bellman(const Trajectory& traj, const FeatureMap& fm,
                        const BellmanScheme& scheme, std::size_t k0, std::size_t k1,
                        Accumulator& acc) {
  const int m = fm.size();
  const int look = scheme.lookahead_steps;
  const int nk = static_cast<int>(scheme.kappa.size());
  FeatureWindow win(fm, traj.states, look + 1);
  win.reset(k0);
  for (std::size_t k = k0; k < k1; ++k) {
    win.advance_to(k);
    const double* psi = win.row(k);
    const double* fwd = win.row(k + look);
    double rw = 0.0;
    for (int i = 0; i < nk; ++i) rw += scheme.kappa[i] * traj.rewards[k + i];
    rw *= scheme.eta;
    for (int a = 0; a < m; ++a) {
      const double pa = psi[a];
      double* row = acc.A.row(a);
      for (int c = 0; c < m; ++c) row[c] += pa * (psi[c] - scheme.lookahead_discount * fwd[c]);
      acc.b[a] += pa * rw;
    }
  }
}

void accumulate_generator(const Trajectory& traj, const FeatureMap& fm,
                          const GeneratorScheme& scheme, double beta, std::size_t k0,
                          std::size_t k1, Accumulator& acc) {
  const int m = fm.size();
  const int n = scheme.order;
  FeatureWindow win(fm, traj.states, n + 1);
  win.reset(k0);
  std::vector<double> comb(m);
  // Pre-narrowed stencil: c_j / eta in double is accurate enough for the
  // row combination (the extended-precision storage matters for the moment
  // identities, not for O(1/eta) row sums).
  std::vector<double> cj(n + 1);
  for (int j = 0; j <= n; ++j) {
    cj[j] = static_cast<double>(scheme.c[j] / static_cast<long double>(scheme.eta));
  }
  for (std::size_t k = k0; k < k1; ++k) {
    win.advance_to(k);
    const double* psi = win.row(k);
    for (int c = 0; c < m; ++c) comb[c] = 0.0;
    for (int j = 0; j <= n; ++j) {
      const double* rj = win.row(k + j);
      for (int c = 0; c < m; ++c) comb[c] += cj[j] * rj[c];
    }
    const double r = traj.rewards[k];
    for (int a = 0; a < m; ++a) {
      const double pa = psi[a];
      double* row = acc.A.row(a);
      for (int c = 0; c < m; ++c) row[c] += pa * (beta * psi[c] - comb[c]);
      acc.b[a] += pa * r;
    }
  }
}

ValueApproximation finish(const FeatureMap& fm, Accumulator& acc, long long windows) {
  SolveReport report = solve(acc.A, acc.b);
  std::vector<double> theta = std::move(report.solution);
  report.solution.clear();
  return ValueApproximation{std::move(theta), fm, std::move(report), windows};
}

// Number of windows contributed by a trajectory alive for states 0..alive.
long long window_count(long long alive_last, int order) {
  const long long lookback = (order >= 2) ? order : 1;
  return std::max<long long>(alive_last - lookback + 1, 0);
}

long long alive_last_index(const Trajectory& traj) {
  const long long last = static_cast<long long>(traj.states.size()) - 1;
  if (!traj.kill_step) return last;
  if (*traj.kill_step < 0) throw DomainError("estimator: negative kill step");
  if (*traj.kill_step > last) {
    throw DomainError("estimator: trajectory shorter than its kill step");
  }
  return *traj.kill_step;
}

template <typename Scheme, typename Accumulate>
ValueApproximation estimate_single(const Trajectory& traj, const FeatureMap& fm,
                                   const Scheme& scheme, bool parallel,
                                   const Accumulate& accumulate) {
  check_trajectory(traj);
  check_scheme_step(scheme.eta, traj.eta);
  const long long windows = window_count(static_cast<long long>(traj.states.size()) - 1,
                                         scheme.order);
  if (windows <= 0) {
    throw InsufficientDataError("estimator: trajectory too short for order " +
                                std::to_string(scheme.order));
  }
  const int m = fm.size();
  Accumulator total(m);
  if (!parallel) {
    accumulate(traj, 0, static_cast<std::size_t>(windows), total);
  } else {
    std::vector<Accumulator> parts;
    unsigned hw = std::thread::hardware_concurrency();
    parts.resize(std::max(1u, hw), Accumulator(m));
    detail::chunked_reduce(
        static_cast<std::size_t>(windows),
        [&](int c, std::size_t lo, std::size_t hi) { accumulate(traj, lo, hi, parts[c]); },
        [&](int c) { total.merge(parts[c]); });
  }
  return finish(fm, total, windows);
}

template <typename Scheme, typename Accumulate>
ValueApproximation estimate_batch(const TrajectoryBatch& batch, const FeatureMap& fm,
                                  const Scheme& scheme, bool parallel,
                                  const Accumulate& accumulate) {
  if (batch.trajectories.empty()) throw InsufficientDataError("estimator: empty batch");
  long long windows = 0;
  for (const Trajectory& traj : batch.trajectories) {
    check_trajectory(traj);
    check_scheme_step(scheme.eta, traj.eta);
    windows += window_count(alive_last_index(traj), scheme.order);
  }
  if (windows <= 0) {
    throw InsufficientDataError(
        "estimator: no usable windows, every kill step is below the scheme order");
  }
  const int m = fm.size();
  Accumulator total(m);
  const auto run_range = [&](std::size_t t0, std::size_t t1, Accumulator& acc) {
    for (std::size_t i = t0; i < t1; ++i) {
      const Trajectory& traj = batch.trajectories[i];
      const long long w = window_count(alive_last_index(traj), scheme.order);
      if (w > 0) accumulate(traj, 0, static_cast<std::size_t>(w), acc);
    }
  };
  if (!parallel) {
    run_range(0, batch.trajectories.size(), total);
  } else {
    std::vector<Accumulator> parts;
    unsigned hw = std::thread::hardware_concurrency();
    parts.resize(std::max(1u, hw), Accumulator(m));
    detail::chunked_reduce(
        batch.trajectories.size(),
        [&](int c, std::size_t lo, std::size_t hi) { run_range(lo, hi, parts[c]); },
        [&](int c) { total.merge(parts[c]); });
  }
  return finish(fm, total, windows);
}

}  // namespace

double evaluate(const ValueApproximation& approx, double x) {
  const int m = approx.feature_map.size();
  if (static_cast<int>(approx.theta.size()) != m) {
    throw DomainError("evaluate: theta/feature size mismatch");
  }
  std::vector<double> psi(m);
  approx.feature_map.eval_into(x, psi.data());
  double s = 0.0;
  for (int j = 0; j < m; ++j) s += approx.theta[j] * psi[j];
  return s;
}

ValueApproximation estimate_bellman(const Trajectory& traj, const FeatureMap& fm,
                                    const BellmanScheme& scheme, bool parallel) {
  return estimate_single(traj, fm, scheme, parallel,
                         [&](const Trajectory& t, std::size_t lo, std::size_t hi,
                             Accumulator& acc) { accumulate_bellman(t, fm, scheme, lo, hi, acc); });
}

ValueApproximation estimate_generator(const Trajectory& traj, const FeatureMap& fm,
                                      const GeneratorScheme& scheme, bool parallel) {
  return estimate_single(
      traj, fm, scheme, parallel,
      [&](const Trajectory& t, std::size_t lo, std::size_t hi, Accumulator& acc) {
        accumulate_generator(t, fm, scheme, scheme.beta, lo, hi, acc);
      });
}

ValueApproximation estimate_bellman_killed(const TrajectoryBatch& batch, const FeatureMap& fm,
                                           const BellmanScheme& scheme, bool parallel) {
  return estimate_batch(batch, fm, scheme, parallel,
                        [&](const Trajectory& t, std::size_t lo, std::size_t hi,
                            Accumulator& acc) { accumulate_bellman(t, fm, scheme, lo, hi, acc); });
}

ValueApproximation estimate_generator_killed(const TrajectoryBatch& batch, const FeatureMap& fm,
                                             const GeneratorScheme& scheme, bool parallel) {
  return estimate_batch(
      batch, fm, scheme, parallel,
      [&](const Trajectory& t, std::size_t lo, std::size_t hi, Accumulator& acc) {
        accumulate_generator(t, fm, scheme, scheme.beta, lo, hi, acc);
      });
}

}  // namespace ctpe
