#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "fishsim/rng.hpp"
#include "fishsim/trajectory.hpp"

namespace fishsim::testing {

/// Unique scratch directory, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& stem) {
        path = std::filesystem::temp_directory_path() /
               (stem + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }

private:
    static int& counter() {
        static int n = 0;
        return n;
    }
};

/// Uniform circular motion with exact per-tick speed v: the angular step is
/// chosen so the chord length equals v*dt, making backward-difference speeds
/// exactly v. The matching analytic curves use omega = alpha/dt.
inline Trajectory circle_trajectory(double r0, double v, std::size_t ticks, int agents = 1,
                                    ArenaSpec arena = {}) {
    double alpha = 2.0 * std::asin(v * arena.dt_s / (2.0 * r0));
    Trajectory traj;
    traj.arena = arena;
    traj.scale_cm = 1.0;
    Segment seg;
    seg.t0 = 0.0;
    for (int a = 0; a < agents; ++a) {
        std::vector<Vec2> pos;
        pos.reserve(ticks);
        double phase = a * 3.14159265358979323846; // mirrored through the center
        for (std::size_t k = 0; k < ticks; ++k)
            pos.emplace_back(r0 * std::cos(alpha * k + phase), r0 * std::sin(alpha * k + phase));
        seg.agents.push_back(std::move(pos));
    }
    traj.segments.push_back(std::move(seg));
    return traj;
}

inline double circle_omega(double r0, double v, const ArenaSpec& arena = {}) {
    return 2.0 * std::asin(v * arena.dt_s / (2.0 * r0)) / arena.dt_s;
}

/// Straight-line motion at constant velocity, one or two parallel agents.
inline Trajectory straight_trajectory(Vec2 start, Vec2 vel, std::size_t ticks, int agents = 1,
                                      ArenaSpec arena = {}) {
    Trajectory traj;
    traj.arena = arena;
    traj.scale_cm = 1.0;
    Segment seg;
    for (int a = 0; a < agents; ++a) {
        std::vector<Vec2> pos;
        for (std::size_t k = 0; k < ticks; ++k)
            pos.push_back(start + vel * (arena.dt_s * k) + Vec2(0.0, 2.0 * a));
        seg.agents.push_back(std::move(pos));
    }
    traj.segments.push_back(std::move(seg));
    return traj;
}

/// Smooth seeded pair wander: headings diffuse, speed fixed, gentle steering
/// keeps both agents well inside the tank. Produces tie-free generic geometry.
inline Trajectory random_pair_walk(std::uint64_t seed, std::size_t ticks, ArenaSpec arena = {}) {
    Rng rng(seed, "test-walk");
    Trajectory traj;
    traj.arena = arena;
    traj.scale_cm = 1.0;
    Segment seg;
    seg.agents.resize(2);
    Vec2 pos[2] = {{-6.0, 1.0}, {5.0, -2.0}};
    double phi[2] = {0.3, 2.1};
    double speed[2] = {8.0, 9.0};
    for (std::size_t k = 0; k < ticks; ++k) {
        for (int a = 0; a < 2; ++a) {
            seg.agents[a].push_back(pos[a]);
            phi[a] += 0.25 * rng.normal();
            Vec2 step{speed[a] * arena.dt_s * std::cos(phi[a]),
                      speed[a] * arena.dt_s * std::sin(phi[a])};
            Vec2 next = pos[a] + step;
            if (next.norm() > 0.7 * arena.radius_cm) {
                // steer back toward the center instead of drifting out
                phi[a] = std::atan2(-pos[a].y, -pos[a].x) + 0.1 * rng.normal();
                next = pos[a] + Vec2{speed[a] * arena.dt_s * std::cos(phi[a]),
                                     speed[a] * arena.dt_s * std::sin(phi[a])};
            }
            pos[a] = next;
        }
    }
    traj.segments.push_back(std::move(seg));
    return traj;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i)
        m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

/// Worst coordinate difference over all frames; infinity on shape mismatch.
inline double max_abs_diff(const Trajectory& a, const Trajectory& b) {
    if (a.segments.size() != b.segments.size())
        return std::numeric_limits<double>::infinity();
    double m = 0.0;
    for (std::size_t s = 0; s < a.segments.size(); ++s) {
        const Segment& sa = a.segments[s];
        const Segment& sb = b.segments[s];
        if (sa.agent_count() != sb.agent_count() || sa.frames() != sb.frames())
            return std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < sa.agents.size(); ++i)
            for (std::size_t k = 0; k < sa.agents[i].size(); ++k) {
                m = std::max(m, std::fabs(sa.agents[i][k].x - sb.agents[i][k].x));
                m = std::max(m, std::fabs(sa.agents[i][k].y - sb.agents[i][k].y));
            }
    }
    return m;
}

} // namespace fishsim::testing
