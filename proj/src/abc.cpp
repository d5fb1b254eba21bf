#include "fishsim/abc.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fishsim/angles.hpp"
#include "fishsim/kv_file.hpp"

namespace fishsim {

Vec2 KickEvent::end_pos() const {
    double h = deg_to_rad(glide_heading_deg());
    return pos_cm + Vec2{std::cos(h), std::sin(h)} * len_cm;
}

Vec2 KickEvent::pos_at(double t) const {
    double w = (t - t_s) / tau_s;
    double h = deg_to_rad(glide_heading_deg());
    return pos_cm + Vec2{std::cos(h), std::sin(h)} * (len_cm * w);
}

void KickDistributions::validate() const {
    if (empirical()) {
        if (table_len.size() != table_tau.size() || table_len.size() != table_weight.size())
            throw std::invalid_argument("KickDistributions: ragged table");
        double wsum = 0.0;
        for (std::size_t i = 0; i < table_len.size(); ++i) {
            if (!(table_len[i] > 0.0) || !(table_tau[i] > 0.0))
                throw std::invalid_argument("KickDistributions: table lengths/durations must be positive");
            if (!(table_weight[i] >= 0.0))
                throw std::invalid_argument("KickDistributions: negative table weight");
            wsum += table_weight[i];
        }
        if (!(wsum > 0.0))
            throw std::invalid_argument("KickDistributions: table weights sum to zero");
        return;
    }
    if (!(tau_min_s > 0.0) || !(tau_mean_s > tau_min_s) || !(tau_shape > 0.0))
        throw std::invalid_argument("KickDistributions: need tau_mean > tau_min > 0");
    if (!(len_min_cm > 0.0) || !(len_mean_cm > len_min_cm) || !(len_shape > 0.0))
        throw std::invalid_argument("KickDistributions: need len_mean > len_min > 0");
}

std::array<double, 2> KickDistributions::sample(Rng& rng) const {
    if (empirical()) {
        std::size_t i = rng.weighted_index(table_weight);
        return {table_len[i], table_tau[i]};
    }
    double l = len_min_cm + rng.gamma(len_shape, (len_mean_cm - len_min_cm) / len_shape);
    double tau = tau_min_s + rng.gamma(tau_shape, (tau_mean_s - tau_min_s) / tau_shape);
    return {l, tau};
}

KickDistributions KickDistributions::from_table_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("Could not open file: " + path);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line))
        throw std::runtime_error(path + ": empty file");
    ++lineno;
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != "l_cm,tau_s,weight")
        throw std::runtime_error(path + ": expected header `l_cm,tau_s,weight`");
    KickDistributions d;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::istringstream ss(line);
        std::string f1, f2, f3;
        if (!std::getline(ss, f1, ',') || !std::getline(ss, f2, ',') || !std::getline(ss, f3))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 3 fields");
        try {
            d.table_len.push_back(std::stod(f1));
            d.table_tau.push_back(std::stod(f2));
            d.table_weight.push_back(std::stod(f3));
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad number");
        }
    }
    d.validate();
    return d;
}

void InteractionParams::validate() const {
    if (wall_strength_deg < 0.0 || attraction_strength_deg < 0.0 || alignment_strength_deg < 0.0 ||
        noise_std_deg < 0.0)
        throw std::invalid_argument("InteractionParams: strengths must be >= 0");
    if (!(wall_range_cm > 0.0) || !(attraction_range_cm > 0.0) || !(alignment_range_cm > 0.0))
        throw std::invalid_argument("InteractionParams: ranges must be > 0");
}

InteractionParams params_from_kv(const std::string& path) {
    KvPairs kv = read_kv_file(path);
    InteractionParams p;
    p.wall_strength_deg = kv_get_double(kv, "wall_strength_deg");
    p.wall_range_cm = kv_get_double(kv, "wall_range_cm");
    p.ccw_asymmetry = kv_get_double(kv, "ccw_asymmetry");
    p.attraction_strength_deg = kv_get_double(kv, "attraction_strength_deg");
    p.attraction_range_cm = kv_get_double(kv, "attraction_range_cm");
    p.equilibrium_distance_cm = kv_get_double(kv, "equilibrium_distance_cm");
    p.alignment_strength_deg = kv_get_double(kv, "alignment_strength_deg");
    p.alignment_range_cm = kv_get_double(kv, "alignment_range_cm");
    p.noise_std_deg = kv_get_double(kv, "noise_std_deg");
    p.validate();
    return p;
}

void params_to_kv(const InteractionParams& p, const std::string& path) {
    KvPairs kv;
    kv.emplace_back("wall_strength_deg", format_double(p.wall_strength_deg));
    kv.emplace_back("wall_range_cm", format_double(p.wall_range_cm));
    kv.emplace_back("ccw_asymmetry", format_double(p.ccw_asymmetry));
    kv.emplace_back("attraction_strength_deg", format_double(p.attraction_strength_deg));
    kv.emplace_back("attraction_range_cm", format_double(p.attraction_range_cm));
    kv.emplace_back("equilibrium_distance_cm", format_double(p.equilibrium_distance_cm));
    kv.emplace_back("alignment_strength_deg", format_double(p.alignment_strength_deg));
    kv.emplace_back("alignment_range_cm", format_double(p.alignment_range_cm));
    kv.emplace_back("noise_std_deg", format_double(p.noise_std_deg));
    write_kv_file(path, kv);
}

KernelInputs kernel_inputs(const Vec2& focal_pos, double focal_heading_deg, bool has_neighbor,
                           const Vec2& neighbor_pos, double neighbor_heading_deg,
                           const ArenaSpec& arena) {
    KernelInputs in;
    in.wall_dist_cm = arena.radius_cm - focal_pos.norm();
    if (focal_pos.x == 0.0 && focal_pos.y == 0.0) {
        in.at_center = true;
    } else {
        double radial = rad_to_deg(std::atan2(focal_pos.y, focal_pos.x));
        in.incidence_deg = wrap_degrees(focal_heading_deg - radial);
    }
    in.has_neighbor = has_neighbor;
    if (has_neighbor) {
        in.neighbor_dist_cm = (neighbor_pos - focal_pos).norm();
        if (in.neighbor_dist_cm > 0.0)
            in.viewing_deg = viewing_angle_deg(focal_pos, focal_heading_deg, neighbor_pos);
        in.heading_diff_deg = wrap_degrees(neighbor_heading_deg - focal_heading_deg);
    }
    return in;
}

double heading_change_mean_deg(const KernelInputs& in, const InteractionParams& p) {
    double dphi = 0.0;
    if (!in.at_center) {
        double th = deg_to_rad(in.incidence_deg);
        double envelope = std::exp(-(in.wall_dist_cm / p.wall_range_cm) *
                                   (in.wall_dist_cm / p.wall_range_cm));
        dphi += p.wall_strength_deg * envelope *
                (std::sin(th) + p.ccw_asymmetry * (1.0 + std::cos(th)));
    }
    if (in.has_neighbor && in.neighbor_dist_cm > 0.0) {
        double d = in.neighbor_dist_cm;
        double psi = deg_to_rad(in.viewing_deg);
        double phij = deg_to_rad(in.heading_diff_deg);
        double f_att = (d - p.equilibrium_distance_cm) / p.attraction_range_cm *
                       std::exp(-(d / p.attraction_range_cm) * (d / p.attraction_range_cm));
        double f_ali = std::exp(-(d / p.alignment_range_cm) * (d / p.alignment_range_cm));
        dphi += p.attraction_strength_deg * f_att * std::sin(psi) * 0.5 * (1.0 + std::cos(phij));
        dphi += p.alignment_strength_deg * f_ali * std::sin(phij);
    }
    return dphi;
}

double heading_change_deg(const KernelInputs& in, const InteractionParams& p, Rng& rng) {
    return heading_change_mean_deg(in, p) + rng.normal(0.0, p.noise_std_deg);
}

namespace {

/// Reflect a heading (degrees) about the wall tangent at pos.
double reflect_about_tangent(const Vec2& pos, double heading_deg_) {
    double radial = rad_to_deg(std::atan2(pos.y, pos.x));
    // tangent direction is radial + 90; reflecting v about the tangent maps
    // the angle (v - tangent) to -(v - tangent)
    double tangent = radial + 90.0;
    return wrap_degrees(2.0 * tangent - heading_deg_);
}

struct AgentSim {
    std::vector<KickEvent> timeline;
    std::size_t glide = 0; // index of the glide covering "now"
    Rng rng;

    explicit AgentSim(Rng r) : rng(std::move(r)) {}

    const KickEvent& current() const { return timeline.back(); }
    double next_decision() const { return timeline.back().t_end(); }

    Vec2 pos_at(double t) const {
        // the caller guarantees t lies within the newest glide
        return timeline.back().pos_at(t);
    }
    double motion_heading() const { return timeline.back().glide_heading_deg(); }
};

/// Choose dphi so the straight glide of length len stays inside the tank;
/// redraw the noise up to 50 times, then reflect about the wall tangent,
/// then head for the center, finally shorten the kick. Returns the heading
/// change and may shrink len.
double contained_dphi(const Vec2& pos, double phi_deg, double mean_dphi, double& len,
                      const InteractionParams& p, const ArenaSpec& arena, Rng& rng) {
    auto exits = [&](double dphi) {
        double h = deg_to_rad(phi_deg + dphi);
        Vec2 end = pos + Vec2{std::cos(h), std::sin(h)} * len;
        return end.norm() > arena.radius_cm;
    };
    double dphi = mean_dphi + rng.normal(0.0, p.noise_std_deg);
    for (int attempt = 0; attempt < 50 && exits(dphi); ++attempt)
        dphi = mean_dphi + rng.normal(0.0, p.noise_std_deg);
    if (!exits(dphi))
        return dphi;
    double reflected = reflect_about_tangent(pos, phi_deg + dphi);
    dphi = reflected - phi_deg;
    if (!exits(dphi))
        return dphi;
    double to_center = rad_to_deg(std::atan2(-pos.y, -pos.x));
    dphi = to_center - phi_deg;
    if (!exits(dphi))
        return dphi;
    len = std::max(0.0, pos.norm() + arena.radius_cm - 1e-9);
    return dphi;
}

} // namespace

KickTimelines simulate_abc(const AbcConfig& config) {
    config.arena.validate();
    config.params.validate();
    config.dists.validate();
    if (!(config.duration_s > 0.0))
        throw std::invalid_argument("simulate_abc: duration must be positive");
    const ArenaSpec& arena = config.arena;

    Rng init_rng(config.seed, "abc-init");
    std::array<AgentSim, 2> agents{AgentSim(Rng(config.seed, "abc-agent", 0)),
                                   AgentSim(Rng(config.seed, "abc-agent", 1))};

    // initial positions away from the wall, not on top of each other
    std::array<Vec2, 2> pos0;
    std::array<double, 2> phi0;
    for (int i = 0; i < 2; ++i) {
        for (;;) {
            Vec2 u{init_rng.uniform(-1.0, 1.0), init_rng.uniform(-1.0, 1.0)};
            u = u * (arena.radius_cm - 5.0);
            if (u.norm() > arena.radius_cm - 5.0)
                continue;
            if (i == 1 && (u - pos0[0]).norm() < 1.0)
                continue;
            pos0[i] = u;
            break;
        }
        phi0[i] = init_rng.uniform(-180.0, 180.0);
    }

    // first decisions see the partner's initial heading
    for (int i = 0; i < 2; ++i) {
        AgentSim& a = agents[i];
        auto [len, tau] = config.dists.sample(a.rng);
        KernelInputs in = kernel_inputs(pos0[i], phi0[i], true, pos0[1 - i], phi0[1 - i], arena);
        double mean = heading_change_mean_deg(in, config.params);
        KickEvent ev;
        ev.t_s = 0.0;
        ev.phi_deg = phi0[i];
        ev.pos_cm = pos0[i];
        ev.len_cm = len;
        ev.dphi_deg = contained_dphi(pos0[i], phi0[i], mean, ev.len_cm, config.params, arena, a.rng);
        ev.tau_s = tau;
        a.timeline.push_back(ev);
    }

    for (;;) {
        int i = agents[0].next_decision() <= agents[1].next_decision() ? 0 : 1;
        if (agents[i].next_decision() >= config.duration_s)
            break;
        AgentSim& a = agents[i];
        const AgentSim& b = agents[1 - i];
        const KickEvent& prev = a.current();

        KickEvent ev;
        ev.t_s = prev.t_end();
        ev.phi_deg = wrap_degrees(prev.glide_heading_deg());
        ev.pos_cm = prev.end_pos();

        auto [len, tau] = config.dists.sample(a.rng);
        ev.len_cm = len;
        ev.tau_s = tau;

        Vec2 bpos = b.current().pos_at(ev.t_s);
        KernelInputs in = kernel_inputs(ev.pos_cm, ev.phi_deg, true, bpos, b.motion_heading(), arena);
        double mean = heading_change_mean_deg(in, config.params);
        ev.dphi_deg = contained_dphi(ev.pos_cm, ev.phi_deg, mean, ev.len_cm, config.params, arena, a.rng);

        a.timeline.push_back(ev);
    }

    return {std::move(agents[0].timeline), std::move(agents[1].timeline)};
}

Trajectory resample_events(const KickTimelines& timelines, const ArenaSpec& arena,
                           double duration_s) {
    arena.validate();
    const std::size_t ticks = static_cast<std::size_t>(std::floor(duration_s / arena.dt_s + 1e-9));
    if (ticks == 0)
        throw std::invalid_argument("resample_events: duration shorter than one tick");

    Trajectory traj;
    traj.arena = arena;
    traj.scale_cm = 1.0;
    Segment seg;
    seg.t0 = 0.0;
    seg.agents.assign(2, {});

    for (int i = 0; i < 2; ++i) {
        const auto& tl = timelines[i];
        if (tl.empty())
            throw std::invalid_argument("resample_events: empty timeline");
        std::size_t e = 0;
        seg.agents[i].reserve(ticks);
        for (std::size_t k = 0; k < ticks; ++k) {
            double t = static_cast<double>(k) * arena.dt_s;
            if (t < tl.front().t_s)
                throw std::out_of_range("resample_events: tick before the first event");
            while (e < tl.size() && tl[e].t_end() < t)
                ++e;
            if (e == tl.size())
                throw std::out_of_range("resample_events: timeline does not cover t = " +
                                        std::to_string(t));
            seg.agents[i].push_back(tl[e].pos_at(t));
        }
    }
    traj.segments.push_back(std::move(seg));
    traj.validate();
    return traj;
}

} // namespace fishsim
