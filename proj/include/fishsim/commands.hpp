#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fishsim/arena.hpp"
#include "fishsim/trajectory.hpp"

namespace fishsim {

/// Parse and run one CLI invocation. `args` excludes the program name.
/// Returns the process exit code (0 iff all outputs were written).
int run_cli(const std::vector<std::string>& args);

/// FNV-1a over a file's bytes, recorded in rollout sidecars.
std::uint64_t fnv1a_file(const std::string& path);

/// Read a dataset: a single trajectory CSV, or a directory whose *.csv files
/// (sorted by name) are concatenated segment-wise.
Trajectory load_dataset(const std::string& path, const ArenaSpec& arena);

/// Cut segments longer than `frames` into consecutive pieces of at most that
/// length, so a single long run can feed the train/validation/test split.
Trajectory chop_segments(const Trajectory& traj, std::size_t frames);

} // namespace fishsim
