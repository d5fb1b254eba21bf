#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fishsim/csv_io.hpp"
#include "fishsim/trajectory.hpp"

namespace fishsim {

/// One recording run at the source frame rate, positions in cm.
struct RawTrajectory {
    std::string run_id;
    std::string species;
    double frame_rate_hz = 25.0;
    double t0 = 0.0;
    std::vector<std::vector<Vec2>> agents; // [agent][frame]

    std::size_t frames() const { return agents.empty() ? 0 : agents[0].size(); }
    double source_dt() const { return 1.0 / frame_rate_hz; }
};

/// Read a run file and validate a uniform source time grid.
RawTrajectory load_raw(const std::string& path);

/// Working segment during cleaning: source-rate frames plus a validity mask.
struct DraftSegment {
    double t0 = 0.0;
    std::vector<std::vector<Vec2>> agents;
    std::vector<char> valid;

    std::size_t frames() const { return valid.size(); }
};

/// Frames where any agent's source-rate speed falls below 1 BL/s are excised
/// and the run is split at the holes. The first frame inherits the activity
/// of the second (it has no backward velocity of its own).
std::vector<DraftSegment> remove_inactive(const RawTrajectory& raw, double body_length_cm);

/// Mark frames that follow a displacement > 1.5 BL (tracking leaps) invalid.
void remove_leaps(DraftSegment& seg, double body_length_cm);

struct GapFillResult {
    std::vector<DraftSegment> segments; // fully valid
    std::size_t interpolated = 0;       // invalid frames restored
};

/// Interior runs of invalid frames up to max_gap_frames are linearly
/// interpolated per agent and coordinate; longer runs (and invalid edges)
/// split or trim the segment. source_dt clocks the split pieces.
GapFillResult fill_gaps(const std::vector<DraftSegment>& segments, int max_gap_frames,
                        double source_dt);

/// Keep every ratio-th frame starting from the first. The ratio must be an
/// integer (checked from the two timesteps to 1e-6).
std::vector<DraftSegment> resample(const std::vector<DraftSegment>& segments, double source_dt,
                                   double target_dt);

struct ProvenanceLog {
    std::size_t input_frames = 0;
    std::size_t output_frames = 0;
    std::size_t removed_inactive = 0;
    std::size_t removed_leap = 0;
    std::size_t boundary_dropped = 0;
    std::size_t interpolated = 0;
    std::size_t segments = 0;
};

struct IngestConfig {
    ArenaSpec arena;        // arena.dt_s is the target timestep
    int max_gap_frames = 5; // 0.2 s at 25 Hz
};

struct IngestResult {
    Trajectory clean; // cm, target dt, one entry per surviving segment
    ProvenanceLog log;
};

/// The full cleaning pipeline for one run: inactivity filter, leap filter,
/// gap fill, resample. Output positions stay in cm; use normalize() for the
/// [-1, 1] form. Segments shorter than 2 output frames are dropped.
IngestResult clean_run(const RawTrajectory& raw, const IngestConfig& config);

struct SplitIndices {
    std::vector<std::size_t> train, val, test;
};

/// Assign whole segments to train/validation/test, approximating the
/// fractions by cumulative frame count over a seeded shuffle order. Fails if
/// a set with a positive fraction would stay empty.
SplitIndices split_segments(const std::vector<std::size_t>& frames_per_segment,
                            const std::array<double, 3>& fractions, std::uint64_t seed);

/// Convenience wrapper splitting a trajectory's segments into three.
std::array<Trajectory, 3> split(const Trajectory& traj, const std::array<double, 3>& fractions,
                                std::uint64_t seed);

} // namespace fishsim
