#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fishsim/arena.hpp"
#include "fishsim/dli.hpp"
#include "fishsim/rng.hpp"
#include "fishsim/trajectory.hpp"
#include "fishsim/vec2.hpp"

namespace fishsim {

enum class ContainmentPolicy { reflect, clamp };

ContainmentPolicy containment_from_string(const std::string& s);
std::string containment_to_string(ContainmentPolicy p);

struct RolloutConfig {
    ArenaSpec arena;
    int agents = 2;
    long steps = 500000;
    std::uint64_t seed = 0;
    ContainmentPolicy containment = ContainmentPolicy::reflect;
    bool strict_paper_noise = false;
    std::vector<int> processing_order; // test hook; empty = agent index order

    void validate() const;
};

/// Straight-line warm-up history for one agent, in normalized units. The
/// last position is the agent's state when the rollout starts; the constant
/// velocity matches the frame-to-frame displacement.
struct AgentInit {
    std::vector<Vec2> positions;
    Vec2 velocity;
};

/// Seeded warm-up placement: every frame keeps at least 2 cm of wall
/// clearance and at least 1 cm of separation between agents.
std::vector<AgentInit> init_agents(const RolloutConfig& cfg);

/// a = mu + sigma * g with g ~ N(0,1) i.i.d. Under the strict flag the y
/// noise is scaled by sigma_x instead (the formula as printed); both
/// components always consume one draw each.
Vec2 sample_acceleration(const GaussianAccelPrediction& pred, bool strict_paper_noise, Rng& rng);

/// Semi-implicit Euler: v' = v + dt*a, then u' = u + dt*v'.
void integrate(Vec2& u, Vec2& v, const Vec2& a, double dt);

/// Keep the agent inside the circle of the given radius. Returns true when
/// the state was modified.
bool contain(Vec2& u, Vec2& v, double radius, ContainmentPolicy policy);

struct RolloutResult {
    Trajectory trajectory; // centimeters
    long containment_events = 0;
};

/// Closed-loop rollout for N >= 2 agents. Each focal agent evaluates the
/// pair network against every neighbor; the two largest predicted
/// accelerations (by |mu|) are summed and their sigmas averaged. With N = 2
/// this reduces to plain pair prediction.
RolloutResult rollout_group(const AccelNet& net, const RolloutConfig& cfg);

/// Two-agent rollout; identical to rollout_group at N = 2.
RolloutResult rollout_pair(const AccelNet& net, const RolloutConfig& cfg);

} // namespace fishsim
