#pragma once

#include <string>
#include <vector>

#include "fishsim/trajectory.hpp"

namespace fishsim {

/// One recording run as stored on disk: explicit timestamps, positions in cm,
/// all agents sampled on the same time grid.
struct CsvRun {
    std::vector<double> times;
    std::vector<std::vector<Vec2>> agents; // [agent][frame]

    std::size_t frames() const { return times.size(); }
    std::size_t agent_count() const { return agents.size(); }
};

/// Read a `t,agent,x,y` file. Validates the header, row format, agent id
/// coverage and strictly increasing timestamps. Errors carry line numbers.
CsvRun read_csv_run(const std::string& path);

/// Interpret a run as a uniformly sampled trajectory with the arena's
/// timestep. Gaps larger than 1.5*dt split segments; within a segment the
/// grid must be uniform to 1e-6 s.
Trajectory trajectory_from_run(const CsvRun& run, const ArenaSpec& arena);

Trajectory read_trajectory_csv(const std::string& path, const ArenaSpec& arena);

/// Write in the same schema, always in cm (normalized trajectories are
/// scaled back on the way out). Formatting is fixed, so identical
/// trajectories produce identical bytes.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

} // namespace fishsim
