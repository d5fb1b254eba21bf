#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fishsim/arena.hpp"
#include "fishsim/vec2.hpp"

namespace fishsim {

/// One contiguous uniformly sampled stretch of positions. All agents share
/// the frame grid t0 + k*dt.
struct Segment {
    double t0 = 0.0;
    std::vector<std::vector<Vec2>> agents; // [agent][frame]

    std::size_t frames() const { return agents.empty() ? 0 : agents[0].size(); }
    std::size_t agent_count() const { return agents.size(); }

    void validate() const {
        for (const auto& a : agents)
            if (a.size() != frames())
                throw std::invalid_argument("Segment: agents disagree on frame count");
    }
};

/// A set of segments sharing one arena, timestep and unit scale.
/// Stored coordinates times scale_cm give centimeters; scale_cm is 1 for raw
/// data and radius_cm for normalized datasets.
struct Trajectory {
    ArenaSpec arena;
    double scale_cm = 1.0;
    std::vector<Segment> segments;

    std::size_t agent_count() const { return segments.empty() ? 0 : segments[0].agent_count(); }
    std::size_t total_frames() const {
        std::size_t n = 0;
        for (const auto& s : segments)
            n += s.frames();
        return n;
    }

    void validate() const {
        arena.validate();
        if (!(scale_cm > 0.0))
            throw std::invalid_argument("Trajectory: unit scale must be positive");
        for (const auto& s : segments) {
            s.validate();
            if (s.agent_count() != agent_count())
                throw std::invalid_argument("Trajectory: segments disagree on agent count");
        }
    }
};

/// Backward-difference velocities for one agent of a segment, in the
/// segment's units per second. Entry k corresponds to frame k+1; the first
/// frame has no velocity.
inline std::vector<Vec2> backward_velocities(const std::vector<Vec2>& pos, double dt) {
    if (!(dt > 0.0))
        throw std::invalid_argument("backward_velocities: timestep must be positive");
    std::vector<Vec2> v;
    if (pos.size() < 2)
        return v;
    v.reserve(pos.size() - 1);
    for (std::size_t k = 1; k < pos.size(); ++k)
        v.push_back((pos[k] - pos[k - 1]) / dt);
    return v;
}

/// Normalize positions to tank radii ([-1, 1] coordinates). Rejects frames
/// outside the tank.
Trajectory normalize(const Trajectory& traj);

/// Inverse of normalize.
Trajectory denormalize(const Trajectory& traj);

} // namespace fishsim
