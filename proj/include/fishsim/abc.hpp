#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fishsim/arena.hpp"
#include "fishsim/rng.hpp"
#include "fishsim/trajectory.hpp"
#include "fishsim/vec2.hpp"

namespace fishsim {

/// One burst-and-coast decision. phi_deg is the heading the agent arrives
/// with; the glide that starts here runs along phi_deg + dphi_deg for length
/// len_cm over tau_s, ending at the next event.
struct KickEvent {
    double t_s = 0.0;
    double phi_deg = 0.0;
    Vec2 pos_cm;
    double tau_s = 0.0;
    double len_cm = 0.0;
    double dphi_deg = 0.0;

    double glide_heading_deg() const { return phi_deg + dphi_deg; }
    double t_end() const { return t_s + tau_s; }
    Vec2 end_pos() const;
    Vec2 pos_at(double t) const;   // linear progress along the glide
    double speed() const { return len_cm / tau_s; }
};

/// Samplers for kick length and duration: shifted-Gamma defaults, or a
/// weighted empirical table of (l, tau) pairs when loaded.
struct KickDistributions {
    double tau_min_s = 0.1;
    double tau_mean_s = 0.5;
    double tau_shape = 2.0;
    double len_min_cm = 1.0;
    double len_mean_cm = 7.0;
    double len_shape = 2.0;

    std::vector<double> table_len, table_tau, table_weight;

    bool empirical() const { return !table_len.empty(); }
    void validate() const;
    /// Returns (len_cm, tau_s).
    std::array<double, 2> sample(Rng& rng) const;

    /// CSV with header `l_cm,tau_s,weight`.
    static KickDistributions from_table_csv(const std::string& path);
};

/// Defaults are calibrated so a long default run stays cohesive
/// (mean neighbor distance well inside the tank diameter) while
/// keeping the wall-following and speed statistics plausible.
struct InteractionParams {
    double wall_strength_deg = 15.0;
    double wall_range_cm = 6.0;
    double ccw_asymmetry = 0.1;
    double attraction_strength_deg = 50.0;
    double attraction_range_cm = 50.0;
    double equilibrium_distance_cm = 3.0;
    double alignment_strength_deg = 30.0;
    double alignment_range_cm = 50.0;
    double noise_std_deg = 12.0;

    void validate() const;
};

InteractionParams params_from_kv(const std::string& path);
void params_to_kv(const InteractionParams& p, const std::string& path);

/// Geometry a kick decision sees. Angles in degrees.
struct KernelInputs {
    double wall_dist_cm = 0.0;
    double incidence_deg = 0.0;
    bool at_center = false; // wall normal undefined, wall term is 0
    bool has_neighbor = false;
    double neighbor_dist_cm = 0.0;
    double viewing_deg = 0.0;
    double heading_diff_deg = 0.0;
};

KernelInputs kernel_inputs(const Vec2& focal_pos, double focal_heading_deg, bool has_neighbor,
                           const Vec2& neighbor_pos, double neighbor_heading_deg,
                           const ArenaSpec& arena);

/// Deterministic part of the heading change (wall + social terms).
double heading_change_mean_deg(const KernelInputs& in, const InteractionParams& p);

/// Full heading change including the Gaussian noise term.
double heading_change_deg(const KernelInputs& in, const InteractionParams& p, Rng& rng);

struct AbcConfig {
    ArenaSpec arena;
    InteractionParams params;
    KickDistributions dists;
    double duration_s = 60.0;
    std::uint64_t seed = 0;
};

using KickTimelines = std::array<std::vector<KickEvent>, 2>;

/// Simulate a pair: each agent kicks on its own clock, always advancing the
/// agent whose next decision time is smaller. Both timelines cover
/// [0, duration].
KickTimelines simulate_abc(const AbcConfig& config);

/// Sample the straight glides onto the uniform grid k*dt,
/// k = 0 .. floor(duration/dt) - 1. Positions in cm.
Trajectory resample_events(const KickTimelines& timelines, const ArenaSpec& arena,
                           double duration_s);

} // namespace fishsim
