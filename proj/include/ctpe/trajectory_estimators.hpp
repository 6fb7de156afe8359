#pragma once

#include "ctpe/process_models.hpp"
#include "ctpe/scheme_coefficients.hpp"
#include "ctpe/value_approximation.hpp"

namespace ctpe {

// Least-squares temporal-difference estimators from discretely observed
// trajectories. With S observed states and order n, the usable windows are
// k = 0..S-1-n for n >= 2 (sample_count = S - n) and k = 0..S-2 for the
// one-step schemes (sample_count = S - 1); the fitted theta solves
//   [sum_k psi_k (psi_k - d psi_{k+L})^T] theta
//     = eta sum_k (sum_i kappa_i R_{k+i}) psi_k
// with L = lookahead_steps and d = lookahead_discount.
ValueApproximation estimate_bellman(const Trajectory& traj, const FeatureMap& fm,
                                    const BellmanScheme& scheme, bool parallel = false);

// Generator form on windows k = 0..S-1-n:
//   [sum_k psi_k (beta psi_k - (1/eta) sum_{j=0}^n c_j psi_{k+j})^T] theta
//     = sum_k R_k psi_k.
ValueApproximation estimate_generator(const Trajectory& traj, const FeatureMap& fm,
                                      const GeneratorScheme& scheme, bool parallel = false);

// Killed-batch variants: trajectory i contributes windows k = 0..K_i-n
// (none when K_i < n), where K_i is its kill step; a missing kill_step means
// the whole trajectory is alive, K_i = states.size()-1, which reduces each
// batch member to the unkilled estimator above. Requires states.size() >=
// kill_step + 1 per trajectory; raises InsufficientDataError when no
// trajectory contributes a window.
ValueApproximation estimate_bellman_killed(const TrajectoryBatch& batch, const FeatureMap& fm,
                                           const BellmanScheme& scheme, bool parallel = false);
ValueApproximation estimate_generator_killed(const TrajectoryBatch& batch, const FeatureMap& fm,
                                             const GeneratorScheme& scheme, bool parallel = false);

}  // namespace ctpe
