#pragma once

#include <stdexcept>

#include "fishsim/angles.hpp"
#include "fishsim/arena.hpp"
#include "fishsim/vec2.hpp"

namespace fishsim {

/// Kinematic state of one agent at one tick. Units follow the containing
/// dataset (cm and cm/s, or tank radii when normalized).
struct AgentState {
    Vec2 pos;
    Vec2 vel;
    double wall_dist = 0.0;

    AgentState() = default;
    AgentState(const Vec2& pos_, const Vec2& vel_, double tank_radius)
        : pos(pos_), vel(vel_), wall_dist(tank_radius - pos_.norm()) {
        if (wall_dist < -1e-9)
            throw std::invalid_argument("AgentState: position outside the tank");
    }

    double speed() const { return vel.norm(); }
};

/// Pair state from the focal agent's perspective.
struct SystemState {
    AgentState focal;
    AgentState neighbor;
    double distance = 0.0;

    SystemState() = default;
    SystemState(const AgentState& focal_, const AgentState& neighbor_)
        : focal(focal_), neighbor(neighbor_), distance((neighbor_.pos - focal_.pos).norm()) {}
};

/// The per-frame quantities the validation battery histograms. Angle fields
/// are degrees in (-180, 180]; has_heading is false when the agent's speed is
/// zero (headings undefined) and the angular fields are then meaningless.
struct InstantObservables {
    double speed = 0.0;
    double wall_dist = 0.0;
    double incidence_deg = 0.0;
    double neighbor_dist = 0.0;
    double heading_diff_deg = 0.0; // phi_j - phi_i, wrapped
    double viewing_deg = 0.0;      // bearing of the neighbor in the focal frame
    bool is_leader = false;
    bool has_heading = false;      // focal speed > 0 and focal off tank center
    bool has_pair_angles = false;  // both headings defined and agents not coincident
};

/// Observables for one agent of a pair at one frame.
inline InstantObservables pair_observables(const AgentState& focal, const AgentState& other) {
    InstantObservables o;
    o.speed = focal.speed();
    o.wall_dist = focal.wall_dist;
    o.neighbor_dist = (other.pos - focal.pos).norm();
    bool focal_heading = focal.speed() > 0.0 && !(focal.pos.x == 0.0 && focal.pos.y == 0.0);
    bool other_heading = other.speed() > 0.0;
    if (focal_heading) {
        o.has_heading = true;
        o.incidence_deg = incidence_angle_deg(focal.pos, focal.vel);
    }
    if (focal.speed() > 0.0 && other_heading && o.neighbor_dist > 0.0) {
        double phi_i = heading_deg(focal.vel);
        double phi_j = heading_deg(other.vel);
        o.heading_diff_deg = wrap_degrees(phi_j - phi_i);
        o.viewing_deg = viewing_angle_deg(focal.pos, phi_i, other.pos);
        double psi_ji = viewing_angle_deg(other.pos, phi_j, focal.pos);
        o.is_leader = geometric_leader(o.viewing_deg, psi_ji) == 0;
        o.has_pair_angles = true;
    }
    return o;
}

} // namespace fishsim
