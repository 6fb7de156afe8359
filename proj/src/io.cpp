#include "ctpe/io.hpp"

#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "ctpe/errors.hpp"
#include "ctpe/version.hpp"

namespace ctpe {
namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_output_header(std::ostream& out, const std::string& resolved_config,
                         std::uint64_t seed) {
  out << "# ctpe " << kVersion << "\n";
  out << "# config: " << resolved_config << "\n";
  out << "# seed: " << seed << "\n";
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const std::string& model_id,
                          const std::string& resolved_config) {
  write_output_header(out, resolved_config, traj.seed);
  out << "# eta: " << fmt17(traj.eta) << "\n";
  out << "# model: " << model_id << "\n";
  if (traj.kill_step) out << "# kill: traj=0 step=" << *traj.kill_step << "\n";
  out << "step,state,reward\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << k << "," << fmt17(traj.states[k]) << "," << fmt17(traj.rewards[k]) << "\n";
  }
}

void write_batch_csv(std::ostream& out, const TrajectoryBatch& batch, const std::string& model_id,
                     const std::string& resolved_config) {
  write_output_header(out, resolved_config, batch.seed);
  out << "# eta: " << fmt17(batch.eta) << "\n";
  out << "# model: " << model_id << "\n";
  for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
    if (batch.trajectories[i].kill_step) {
      out << "# kill: traj=" << i << " step=" << *batch.trajectories[i].kill_step << "\n";
    }
  }
  out << "traj,step,state,reward\n";
  for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
    const Trajectory& traj = batch.trajectories[i];
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      out << i << "," << k << "," << fmt17(traj.states[k]) << "," << fmt17(traj.rewards[k])
          << "\n";
    }
  }
}

namespace {

struct ParsedCsv {
  double eta = 0.0;
  std::uint64_t seed = 0;
  std::map<long long, long long> kills;   // traj index -> kill step
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> rewards;
  bool has_traj_column = false;
};

ParsedCsv parse_csv(std::istream& in) {
  ParsedCsv parsed;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream is(line.substr(1));
      std::string tag;
      is >> tag;
      if (tag == "eta:") is >> parsed.eta;
      if (tag == "seed:") is >> parsed.seed;
      if (tag == "kill:") {
        std::string a, b;
        is >> a >> b;
        long long ti = -1, ks = -1;
        if (std::sscanf(a.c_str(), "traj=%lld", &ti) == 1 &&
            std::sscanf(b.c_str(), "step=%lld", &ks) == 1) {
          parsed.kills[ti] = ks;
        }
      }
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      if (line == "traj,step,state,reward") {
        parsed.has_traj_column = true;
        continue;
      }
      if (line == "step,state,reward") {
        parsed.has_traj_column = false;
        continue;
      }
      throw ConfigError("trajectory csv line " + std::to_string(lineno) +
                        ": unrecognized column header '" + line + "'");
    }
    std::vector<double> fields;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
      try {
        fields.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("trajectory csv line " + std::to_string(lineno) + ": bad number '" +
                          cell + "'");
      }
    }
    const std::size_t expect = parsed.has_traj_column ? 4 : 3;
    if (fields.size() != expect) {
      throw ConfigError("trajectory csv line " + std::to_string(lineno) + ": expected " +
                        std::to_string(expect) + " fields");
    }
    const std::size_t ti = parsed.has_traj_column ? static_cast<std::size_t>(fields[0]) : 0;
    if (ti >= parsed.states.size()) {
      parsed.states.resize(ti + 1);
      parsed.rewards.resize(ti + 1);
    }
    parsed.states[ti].push_back(fields[expect - 2]);
    parsed.rewards[ti].push_back(fields[expect - 1]);
  }
  if (!(parsed.eta > 0.0)) {
    throw ConfigError("trajectory csv: missing or nonpositive '# eta:' header");
  }
  if (parsed.states.empty()) throw ConfigError("trajectory csv: no data rows");
  return parsed;
}

}  // namespace

Trajectory read_trajectory_csv(std::istream& in) {
  ParsedCsv parsed = parse_csv(in);
  if (parsed.states.size() != 1) {
    throw ConfigError("trajectory csv: expected a single trajectory, found " +
                      std::to_string(parsed.states.size()));
  }
  Trajectory traj;
  traj.eta = parsed.eta;
  traj.seed = parsed.seed;
  traj.states = std::move(parsed.states[0]);
  traj.rewards = std::move(parsed.rewards[0]);
  const auto kill = parsed.kills.find(0);
  if (kill != parsed.kills.end()) traj.kill_step = kill->second;
  return traj;
}

TrajectoryBatch read_batch_csv(std::istream& in) {
  ParsedCsv parsed = parse_csv(in);
  TrajectoryBatch batch;
  batch.eta = parsed.eta;
  batch.seed = parsed.seed;
  for (std::size_t i = 0; i < parsed.states.size(); ++i) {
    Trajectory traj;
    traj.eta = parsed.eta;
    traj.seed = parsed.seed;
    traj.states = std::move(parsed.states[i]);
    traj.rewards = std::move(parsed.rewards[i]);
    const auto kill = parsed.kills.find(static_cast<long long>(i));
    if (kill != parsed.kills.end()) traj.kill_step = kill->second;
    batch.trajectories.push_back(std::move(traj));
  }
  return batch;
}

}  // namespace ctpe
