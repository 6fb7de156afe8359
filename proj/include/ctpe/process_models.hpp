#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctpe/basis_functions.hpp"
#include "ctpe/rng.hpp"

namespace ctpe {

// Closed-form one-step transition law X_t | X_0 = x ~ N(mean, variance)
// (variance may be 0 for deterministic flows).
struct ExactKernel {
  std::function<double(double x, double t)> conditional_mean;
  std::function<double(double t)> conditional_variance;
  // Closed-form conditional feature expectations E[psi(X_t) | x] when the
  // (kernel, family) pair has one; returns false to request the quadrature
  // fallback. May be null.
  std::function<bool(const FeatureMap&, double x, double t, double* out)> expect_feature;

  // Draws X_t | x. Consumes exactly one normal even when variance == 0, so
  // stream positions do not depend on the model.
  double sample(double x, double t, RngStream& rng) const;
};

// Linear-dynamics tag dX = lambda X dt + sigma dB, set by the factories that
// have it; lets callers (e.g. derive_lq_truth) read the rates back.
struct LinearDynamics {
  double lambda = 0.0;
  double sigma = 0.0;
};

// Scalar diffusion dX = drift(X) dt + diffusion_sqrt(X) dB with running
// reward r and discount rate beta. true_value / stationary_sampler /
// exact_kernel are present only when the model has them in closed form.
struct DiffusionModel {
  int dimension = 1;
  std::function<double(double)> drift;
  std::function<double(double)> diffusion_sqrt;
  std::function<double(double)> reward;
  double beta = 1.0;
  std::optional<ExactKernel> exact_kernel;
  std::function<double(double)> true_value;              // null when unknown
  std::function<double(RngStream&)> stationary_sampler;  // null when absent
  std::optional<LinearDynamics> linear;
  std::string id = "custom";
};

// Equally spaced discrete observations of one path. kill_step K means the
// trajectory is alive for states 0..K (it carries exactly K+1 states when
// produced by simulate_killed_batch).
struct Trajectory {
  double eta = 0.0;
  std::vector<double> states;
  std::vector<double> rewards;
  std::uint64_t seed = 0;
  std::optional<long long> kill_step;
};

struct TrajectoryBatch {
  double eta = 0.0;
  std::uint64_t seed = 0;
  std::vector<Trajectory> trajectories;
};

// Reward-shape parameters shared by the factories below.
struct RewardParams {
  double k = 1.0;      // frequency of the cosine reward
  double alpha = 2.0;  // exponent of the power reward
  double b = 1.0;      // scale of the power reward
};

// dX = lambda X dt (no noise), reward_id in {"cos3", "power"}:
//   cos3:  r = beta cos^3(kx) + 3 k lambda x cos^2(kx) sin(kx),
//          V* = cos^3(kx)
//   power: r = b x^alpha (integer alpha), V* = b x^alpha / (beta - alpha
//          lambda); requires beta != alpha*lambda.
DiffusionModel make_deterministic_linear(double lambda, const std::string& reward_id,
                                         const RewardParams& params, double beta);

// dX = lambda X dt + sigma dB, lambda < 0, sigma > 0, with exact Gaussian
// kernel and stationary sampler N(0, sigma^2 / (2|lambda|)).
// reward_id in {"quadratic", "periodic-exp"}:
//   quadratic:    r = x^2, V* = (sigma^2/(2 lambda) + x^2)/(beta - 2 lambda)
//                 - sigma^2/(2 lambda beta)
//   periodic-exp: r = {1 + x cos(x)/10 + (sin x - cos^2 x)/2} e^{sin x},
//                 V* = e^{sin x}; this reward/value pair solves the
//                 evaluation identity only at (lambda, sigma, beta) =
//                 (-0.1, 1, 1), anything else is a DomainError.
DiffusionModel make_ou(double lambda, double sigma, const std::string& reward_id, double beta,
                       const RewardParams& params = {});

// Overdamped Langevin dX = -(1/2) U'(x) dt + dB; no closed-form kernel, so
// simulation goes through Euler-Maruyama substeps. Reward defaults to x^2.
DiffusionModel make_langevin(std::function<double(double)> potential_grad, double beta);

// Registry used by the CLI and the experiment harness. Ids:
//   deterministic-cos3   (lambda, k, beta)
//   deterministic-power  (lambda, alpha, b, beta)
//   ou-quadratic         (lambda, sigma, beta)
//   ou-periodic-exp      (lambda, sigma, beta)
//   langevin-harmonic    (beta)            [U(x) = x^2 / 2]
// Unknown ids or parameter names throw ConfigError naming the offender.
DiffusionModel make_model(const std::string& id, const std::map<std::string, double>& params);

inline constexpr int kDefaultSubsteps = 16;

// steps+1 states sampled at spacing eta from x0, rewards evaluated at every
// state. Uses the exact kernel when present, Euler-Maruyama with `substeps`
// sub-intervals per step otherwise. Raises DivergenceError at the first
// non-finite state.
Trajectory simulate_trajectory(const DiffusionModel& model, double x0, double eta,
                               long long steps, std::uint64_t seed,
                               int substeps = kDefaultSubsteps, std::uint64_t stream = 0);

// n_traj independent trajectories, each killed at an independent geometric
// time K ~ #{survivals at rate e^{-beta eta} per step} (mean
// e^{-beta eta} / (1 - e^{-beta eta})); trajectory i uses stream i of
// `seed` and carries exactly K_i + 1 states with kill_step = K_i.
TrajectoryBatch simulate_killed_batch(const DiffusionModel& model,
                                      const std::function<double(RngStream&)>& initial_sampler,
                                      double eta, long long n_traj, double beta,
                                      std::uint64_t seed, int substeps = kDefaultSubsteps);

}  // namespace ctpe
