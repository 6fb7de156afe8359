#include "ctpe/process_models.hpp"

#include <cmath>
#include <numbers>

namespace ctpe {
namespace {

constexpr double kPi = std::numbers::pi;

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-12 * (std::abs(a) + std::abs(b) + 1.0);
}

// Closed-form E[psi(X_t) | x] for Gaussian kernels and the families with
// analytic Gaussian moments. E[cos a(mu+sZ)] = cos(a mu) e^{-a^2 s^2/2},
// same damping for sin; quadratic monomials use E[(mu+sZ)^2] = mu^2 + s^2.
bool gaussian_expect_feature(const FeatureMap& fm, double mu, double s2, double* out) {
  switch (fm.family()) {
    case BasisFamily::fourier: {
      fm.eval_into(mu, out);
      for (int f = 1; f <= fm.max_frequency(); ++f) {
        const double damp = std::exp(-0.5 * f * f * s2);
        out[2 * f - 1] *= damp;
        out[2 * f] *= damp;
      }
      return true;
    }
    case BasisFamily::monomial:
    case BasisFamily::quadratic: {
      if (fm.max_degree() > 2) return false;
      fm.eval_into(mu, out);
      if (fm.max_degree() == 2) out[2] += s2;
      return true;
    }
    default:
      return false;
  }
}

ExactKernel make_ou_kernel(double lambda, double sigma) {
  ExactKernel k;
  k.conditional_mean = [lambda](double x, double t) { return x * std::exp(lambda * t); };
  k.conditional_variance = [lambda, sigma](double t) {
    // sigma^2 (e^{2 lambda t} - 1) / (2 lambda); expm1 keeps small t exact.
    return sigma * sigma * std::expm1(2.0 * lambda * t) / (2.0 * lambda);
  };
  k.expect_feature = [lambda, sigma](const FeatureMap& fm, double x, double t, double* out) {
    const double mu = x * std::exp(lambda * t);
    const double s2 = sigma * sigma * std::expm1(2.0 * lambda * t) / (2.0 * lambda);
    return gaussian_expect_feature(fm, mu, s2, out);
  };
  return k;
}

ExactKernel make_flow_kernel(double lambda) {
  ExactKernel k;
  k.conditional_mean = [lambda](double x, double t) { return x * std::exp(lambda * t); };
  k.conditional_variance = [](double) { return 0.0; };
  k.expect_feature = [lambda](const FeatureMap& fm, double x, double t, double* out) {
    fm.eval_into(x * std::exp(lambda * t), out);
    return true;
  };
  return k;
}

double require_param(const std::map<std::string, double>& params, const std::string& key,
                     double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

double ExactKernel::sample(double x, double t, RngStream& rng) const {
  const double z = rng.normal();
  const double v = conditional_variance(t);
  return conditional_mean(x, t) + (v > 0.0 ? std::sqrt(v) * z : 0.0);
}

DiffusionModel make_deterministic_linear(double lambda, const std::string& reward_id,
                                         const RewardParams& params, double beta) {
  if (!(beta > 0.0)) throw DomainError("make_deterministic_linear: beta must be > 0");
  DiffusionModel m;
  m.drift = [lambda](double x) { return lambda * x; };
  m.diffusion_sqrt = [](double) { return 0.0; };
  m.beta = beta;
  m.exact_kernel = make_flow_kernel(lambda);
  m.linear = LinearDynamics{lambda, 0.0};
  if (reward_id == "cos3") {
    const double k = params.k;
    m.id = "deterministic-cos3";
    m.reward = [beta, lambda, k](double x) {
      const double c = std::cos(k * x), s = std::sin(k * x);
      return beta * c * c * c + 3.0 * k * lambda * x * c * c * s;
    };
    m.true_value = [k](double x) {
      const double c = std::cos(k * x);
      return c * c * c;
    };
  } else if (reward_id == "power") {
    const double alpha = params.alpha, b = params.b;
    if (nearly_equal(beta, alpha * lambda)) {
      throw DomainError("make_deterministic_linear: beta == alpha*lambda, value function singular");
    }
    m.id = "deterministic-power";
    m.reward = [b, alpha](double x) { return b * std::pow(x, alpha); };
    m.true_value = [b, alpha, beta, lambda](double x) {
      return b * std::pow(x, alpha) / (beta - alpha * lambda);
    };
  } else {
    throw DomainError("make_deterministic_linear: unknown reward '" + reward_id + "'");
  }
  return m;
}

DiffusionModel make_ou(double lambda, double sigma, const std::string& reward_id, double beta,
                       const RewardParams& params) {
  (void)params;
  if (!(lambda < 0.0)) {
    throw DomainError("make_ou: lambda must be < 0 (no stationary distribution otherwise)");
  }
  if (!(sigma > 0.0)) throw DomainError("make_ou: sigma must be > 0");
  if (!(beta > 0.0)) throw DomainError("make_ou: beta must be > 0");
  DiffusionModel m;
  m.drift = [lambda](double x) { return lambda * x; };
  m.diffusion_sqrt = [sigma](double) { return sigma; };
  m.beta = beta;
  m.exact_kernel = make_ou_kernel(lambda, sigma);
  m.linear = LinearDynamics{lambda, sigma};
  const double stat_sd = sigma / std::sqrt(2.0 * std::abs(lambda));
  m.stationary_sampler = [stat_sd](RngStream& rng) { return stat_sd * rng.normal(); };
  if (reward_id == "quadratic") {
    m.id = "ou-quadratic";
    m.reward = [](double x) { return x * x; };
    if (nearly_equal(beta, 2.0 * lambda)) {
      throw DomainError("make_ou: beta == 2*lambda, value function singular");
    }
    m.true_value = [lambda, sigma, beta](double x) {
      const double s2 = sigma * sigma;
      return (s2 / (2.0 * lambda) + x * x) / (beta - 2.0 * lambda) - s2 / (2.0 * lambda * beta);
    };
  } else if (reward_id == "periodic-exp") {
    // r is constructed so that V = e^{sin x} solves beta V - A V = r only
    // for these exact rates; other rates would silently test the wrong pair.
    if (!(nearly_equal(lambda, -0.1) && nearly_equal(sigma, 1.0) && nearly_equal(beta, 1.0))) {
      throw DomainError(
          "make_ou: periodic-exp reward is tied to (lambda, sigma, beta) = (-0.1, 1, 1)");
    }
    m.id = "ou-periodic-exp";
    m.reward = [](double x) {
      const double s = std::sin(x), c = std::cos(x);
      return (1.0 + x * c / 10.0 + (s - c * c) / 2.0) * std::exp(s);
    };
    m.true_value = [](double x) { return std::exp(std::sin(x)); };
  } else {
    throw DomainError("make_ou: unknown reward '" + reward_id + "'");
  }
  return m;
}

DiffusionModel make_langevin(std::function<double(double)> potential_grad, double beta) {
  if (!potential_grad) throw DomainError("make_langevin: potential gradient required");
  if (!(beta > 0.0)) throw DomainError("make_langevin: beta must be > 0");
  DiffusionModel m;
  m.id = "langevin";
  m.drift = [g = std::move(potential_grad)](double x) { return -0.5 * g(x); };
  m.diffusion_sqrt = [](double) { return 1.0; };
  m.reward = [](double x) { return x * x; };
  m.beta = beta;
  return m;
}

DiffusionModel make_model(const std::string& id, const std::map<std::string, double>& params) {
  const auto check_keys = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : params) {
      (void)value;
      bool ok = false;
      for (const char* a : allowed) {
        if (key == a) ok = true;
      }
      if (!ok) throw ConfigError("model '" + id + "': unknown parameter '" + key + "'");
    }
  };
  try {
    if (id == "deterministic-cos3") {
      check_keys({"lambda", "k", "beta"});
      RewardParams rp;
      rp.k = require_param(params, "k", 1.0);
      return make_deterministic_linear(require_param(params, "lambda", 0.05), "cos3", rp,
                                       require_param(params, "beta", 0.1));
    }
    if (id == "deterministic-power") {
      check_keys({"lambda", "alpha", "b", "beta"});
      RewardParams rp;
      rp.alpha = require_param(params, "alpha", 5.0);
      rp.b = require_param(params, "b", 1.0);
      return make_deterministic_linear(require_param(params, "lambda", 0.01), "power", rp,
                                       require_param(params, "beta", 0.1));
    }
    if (id == "ou-quadratic") {
      check_keys({"lambda", "sigma", "beta"});
      return make_ou(require_param(params, "lambda", -0.1), require_param(params, "sigma", 1.0),
                     "quadratic", require_param(params, "beta", 1.0));
    }
    if (id == "ou-periodic-exp") {
      check_keys({"lambda", "sigma", "beta"});
      return make_ou(require_param(params, "lambda", -0.1), require_param(params, "sigma", 1.0),
                     "periodic-exp", require_param(params, "beta", 1.0));
    }
    if (id == "langevin-harmonic") {
      check_keys({"beta"});
      DiffusionModel m =
          make_langevin([](double x) { return x; }, require_param(params, "beta", 1.0));
      m.id = "langevin-harmonic";
      return m;
    }
  } catch (const DomainError& e) {
    throw ConfigError("model '" + id + "': " + e.what());
  }
  throw ConfigError("unknown model '" + id + "'");
}

namespace {

// Shared path loop. Appends `steps` new states to traj (which must already
// hold the initial state), consuming `rng`.
void extend_path(const DiffusionModel& model, double eta, long long steps, int substeps,
                 RngStream& rng, Trajectory& traj) {
  double x = traj.states.back();
  const bool exact = model.exact_kernel.has_value();
  double sd = 0.0;
  if (exact) {
    const double v = model.exact_kernel->conditional_variance(eta);
    sd = v > 0.0 ? std::sqrt(v) : 0.0;
  }
  const double dt = eta / substeps;
  const double sqdt = std::sqrt(dt);
  for (long long k = 0; k < steps; ++k) {
    if (exact) {
      const double z = rng.normal();
      x = model.exact_kernel->conditional_mean(x, eta) + sd * z;
    } else {
      for (int j = 0; j < substeps; ++j) {
        x += model.drift(x) * dt + model.diffusion_sqrt(x) * sqdt * rng.normal();
      }
    }
    if (!std::isfinite(x)) {
      throw DivergenceError("simulated state diverged at step " +
                                std::to_string(traj.states.size()),
                            static_cast<long long>(traj.states.size()));
    }
    traj.states.push_back(x);
    traj.rewards.push_back(model.reward(x));
  }
}

}  // namespace

Trajectory simulate_trajectory(const DiffusionModel& model, double x0, double eta,
                               long long steps, std::uint64_t seed, int substeps,
                               std::uint64_t stream) {
  if (!(eta > 0.0)) throw DomainError("simulate_trajectory: eta must be > 0");
  if (steps < 1) throw DomainError("simulate_trajectory: need steps >= 1");
  if (substeps < 1) throw DomainError("simulate_trajectory: need substeps >= 1");
  Trajectory traj;
  traj.eta = eta;
  traj.seed = seed;
  traj.states.reserve(steps + 1);
  traj.rewards.reserve(steps + 1);
  traj.states.push_back(x0);
  traj.rewards.push_back(model.reward(x0));
  RngStream rng(seed, stream);
  extend_path(model, eta, steps, substeps, rng, traj);
  return traj;
}

TrajectoryBatch simulate_killed_batch(const DiffusionModel& model,
                                      const std::function<double(RngStream&)>& initial_sampler,
                                      double eta, long long n_traj, double beta,
                                      std::uint64_t seed, int substeps) {
  if (!(eta > 0.0)) throw DomainError("simulate_killed_batch: eta must be > 0");
  if (!(beta > 0.0)) throw DomainError("simulate_killed_batch: beta must be > 0");
  if (n_traj < 1) throw DomainError("simulate_killed_batch: need n_traj >= 1");
  if (!initial_sampler) throw DomainError("simulate_killed_batch: initial sampler required");
  TrajectoryBatch batch;
  batch.eta = eta;
  batch.seed = seed;
  batch.trajectories.reserve(n_traj);
  for (long long i = 0; i < n_traj; ++i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    const double x0 = initial_sampler(rng);
    // P(K >= k) = e^{-beta eta k}: inverse-transform of the geometric
    // survival count. uniform() is in (0, 1], so the log is finite.
    const long long kill =
        static_cast<long long>(std::floor(std::log(rng.uniform()) / (-beta * eta)));
    Trajectory traj;
    traj.eta = eta;
    traj.seed = seed;
    traj.kill_step = kill;
    traj.states.reserve(kill + 1);
    traj.rewards.reserve(kill + 1);
    traj.states.push_back(x0);
    traj.rewards.push_back(model.reward(x0));
    extend_path(model, eta, kill, substeps, rng, traj);
    batch.trajectories.push_back(std::move(traj));
  }
  return batch;
}

}  // namespace ctpe
