#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fishsim/vec2.hpp"

namespace fishsim {

inline constexpr double pi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * (pi / 180.0); }
inline double rad_to_deg(double rad) { return rad * (180.0 / pi); }

/// Wrap an angle in degrees to the interval (-180, 180].
inline double wrap_degrees(double deg) {
    if (!std::isfinite(deg))
        throw std::invalid_argument("wrap_degrees: non-finite angle");
    double w = std::fmod(deg, 360.0);
    if (w <= -180.0)
        w += 360.0;
    else if (w > 180.0)
        w -= 360.0;
    return w;
}

/// Heading of a velocity vector, degrees in (-180, 180]. Zero velocity has
/// no heading and is rejected.
inline double heading_deg(const Vec2& vel) {
    if (vel.x == 0.0 && vel.y == 0.0)
        throw std::invalid_argument("heading_deg: zero velocity");
    if (!std::isfinite(vel.x) || !std::isfinite(vel.y))
        throw std::invalid_argument("heading_deg: non-finite velocity");
    return rad_to_deg(std::atan2(vel.y, vel.x));
}

/// Angle of incidence to the wall: heading relative to the outward normal
/// at the agent's position (tank-centered coordinates). 0 means swimming
/// straight at the wall, +-180 straight toward the center.
inline double incidence_angle_deg(const Vec2& pos, const Vec2& vel) {
    if (pos.x == 0.0 && pos.y == 0.0)
        throw std::invalid_argument("incidence_angle_deg: position at tank center has no wall normal");
    double phi = heading_deg(vel);
    double radial = rad_to_deg(std::atan2(pos.y, pos.x));
    return wrap_degrees(phi - radial);
}

/// Viewing angle of agent j from agent i: bearing of j in i's heading frame.
inline double viewing_angle_deg(const Vec2& pos_i, double heading_i_deg, const Vec2& pos_j) {
    Vec2 d = pos_j - pos_i;
    if (d.x == 0.0 && d.y == 0.0)
        throw std::invalid_argument("viewing_angle_deg: coincident agents");
    double bearing = rad_to_deg(std::atan2(d.y, d.x));
    return wrap_degrees(bearing - heading_i_deg);
}

/// Geometric leader of a pair: the agent that needs the larger turn to face
/// the other. Returns 0 if agent i leads, 1 if agent j leads; ties go to i.
inline int geometric_leader(double psi_ij_deg, double psi_ji_deg) {
    return std::abs(psi_ij_deg) >= std::abs(psi_ji_deg) ? 0 : 1;
}

} // namespace fishsim
