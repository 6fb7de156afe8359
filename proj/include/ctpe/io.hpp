#pragma once

#include <iosfwd>
#include <string>

#include "ctpe/process_models.hpp"

namespace ctpe {

// Standard header comment carried by every output file: tool version, the
// fully resolved configuration of the command that produced it, and the seed.
void write_output_header(std::ostream& out, const std::string& resolved_config,
                         std::uint64_t seed);

// Single trajectory: "step,state,reward" rows; eta / seed / model id / kill
// step ride along as '#' header comments.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const std::string& model_id,
                          const std::string& resolved_config);

// Batch: "traj,step,state,reward" rows plus one "# kill: traj=I step=K"
// comment per killed trajectory.
void write_batch_csv(std::ostream& out, const TrajectoryBatch& batch, const std::string& model_id,
                     const std::string& resolved_config);

// Readers accept both layouts above (the batch reader treats a single
// trajectory file as a batch of one). Malformed input throws ConfigError.
Trajectory read_trajectory_csv(std::istream& in);
TrajectoryBatch read_batch_csv(std::istream& in);

}  // namespace ctpe
