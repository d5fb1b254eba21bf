#include "fishsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fishsim {

ContainmentPolicy containment_from_string(const std::string& s) {
    if (s == "reflect")
        return ContainmentPolicy::reflect;
    if (s == "clamp")
        return ContainmentPolicy::clamp;
    throw std::invalid_argument("unknown containment policy: " + s);
}

std::string containment_to_string(ContainmentPolicy p) {
    return p == ContainmentPolicy::reflect ? "reflect" : "clamp";
}

void RolloutConfig::validate() const {
    arena.validate();
    if (agents < 2)
        throw std::invalid_argument("RolloutConfig: need at least two agents");
    if (steps <= 0)
        throw std::invalid_argument("RolloutConfig: steps must be positive");
    if (!processing_order.empty()) {
        if (processing_order.size() != static_cast<std::size_t>(agents))
            throw std::invalid_argument("RolloutConfig: processing order size mismatch");
        std::vector<bool> seen(static_cast<std::size_t>(agents), false);
        for (int k : processing_order) {
            if (k < 0 || k >= agents || seen[static_cast<std::size_t>(k)])
                throw std::invalid_argument("RolloutConfig: processing order is not a permutation");
            seen[static_cast<std::size_t>(k)] = true;
        }
    }
}

namespace {

constexpr int kInitFrames = 5;

} // namespace

std::vector<AgentInit> init_agents(const RolloutConfig& cfg) {
    cfg.validate();
    const double R = cfg.arena.radius_cm;
    const double clearance = 2.0 / R;  // 2 cm in normalized units
    const double separation = 1.0 / R; // 1 cm
    const double dt = cfg.arena.dt_s;

    std::vector<AgentInit> agents;
    for (int i = 0; i < cfg.agents; ++i) {
        Rng rng(cfg.seed, "rollout-init", static_cast<std::uint64_t>(i));
        AgentInit a;
        bool placed = false;
        for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
            // uniform position in the allowed disk, via sqrt radius
            double r = (1.0 - clearance) * std::sqrt(rng.uniform());
            double phi = rng.uniform(0.0, 2.0 * pi);
            Vec2 end{r * std::cos(phi), r * std::sin(phi)};
            double heading = rng.uniform(0.0, 2.0 * pi);
            double speed = rng.uniform(5.0, 15.0) / R; // cm/s in normalized units
            Vec2 v{speed * std::cos(heading), speed * std::sin(heading)};

            std::vector<Vec2> line(kInitFrames);
            bool ok = true;
            for (int k = 0; k < kInitFrames; ++k) {
                line[k] = end - static_cast<double>(kInitFrames - 1 - k) * dt * v;
                if (line[k].norm() > 1.0 - clearance)
                    ok = false;
            }
            for (const auto& placed_agent : agents)
                for (int k = 0; k < kInitFrames && ok; ++k)
                    if ((line[k] - placed_agent.positions[k]).norm() < separation)
                        ok = false;
            if (ok) {
                a.positions = std::move(line);
                a.velocity = v;
                placed = true;
            }
        }
        if (!placed)
            throw std::runtime_error("init_agents: could not place agent " + std::to_string(i));
        agents.push_back(std::move(a));
    }
    return agents;
}

Vec2 sample_acceleration(const GaussianAccelPrediction& pred, bool strict_paper_noise, Rng& rng) {
    double gx = rng.normal();
    double gy = rng.normal();
    double sy = strict_paper_noise ? pred.sigma.x : pred.sigma.y;
    return {pred.mu.x + pred.sigma.x * gx, pred.mu.y + sy * gy};
}

void integrate(Vec2& u, Vec2& v, const Vec2& a, double dt) {
    v = v + dt * a;
    u = u + dt * v;
}

bool contain(Vec2& u, Vec2& v, double radius, ContainmentPolicy policy) {
    double r = u.norm();
    if (r <= radius)
        return false;
    Vec2 outward = u / r;
    double folded = 2.0 * radius - r;
    if (policy == ContainmentPolicy::reflect && folded > 0.0) {
        u = folded * outward;
        double radial = v.dot(outward);
        if (radial > 0.0)
            v = v - 2.0 * radial * outward;
    } else {
        // clamp, or reflect overshooting past the center
        u = (radius - 1e-6) * outward;
        double radial = v.dot(outward);
        if (radial > 0.0)
            v = v - radial * outward;
    }
    return true;
}

namespace {

struct AgentBuffer {
    // last `window` frames, oldest first
    std::vector<Vec2> pos;
    std::vector<Vec2> vel;

    void push(const Vec2& p, const Vec2& v) {
        pos.erase(pos.begin());
        vel.erase(vel.begin());
        pos.push_back(p);
        vel.push_back(v);
    }
};

RolloutResult run_rollout(const AccelNet& net, const RolloutConfig& cfg) {
    cfg.validate();
    const int N = cfg.agents;
    const int W = net.topology().window;
    if (W > kInitFrames)
        throw std::invalid_argument("rollout: network window exceeds the warm-up length");
    const double dt = cfg.arena.dt_s;
    const double R = cfg.arena.radius_cm;

    std::vector<AgentInit> init = init_agents(cfg);
    std::vector<AgentBuffer> buf(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        auto& b = buf[static_cast<std::size_t>(i)];
        const auto& a = init[static_cast<std::size_t>(i)];
        b.pos.assign(a.positions.end() - W, a.positions.end());
        b.vel.assign(static_cast<std::size_t>(W), a.velocity);
    }

    std::vector<Rng> noise;
    noise.reserve(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i)
        noise.emplace_back(cfg.seed, "rollout-agent", static_cast<std::uint64_t>(i));

    std::vector<int> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), 0);
    if (!cfg.processing_order.empty())
        order = cfg.processing_order;

    // all ordered pairs, focal-major; with N=2 these are (0,1) and (1,0)
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            if (j != i)
                pairs.emplace_back(i, j);

    const Eigen::Index cols = static_cast<Eigen::Index>(pairs.size());
    std::vector<Mat> window(static_cast<std::size_t>(W), Mat(11, cols));
    AccelNet::Workspace ws;

    Segment seg;
    seg.t0 = 0.0;
    seg.agents.assign(static_cast<std::size_t>(N), {});
    for (auto& a : seg.agents)
        a.reserve(static_cast<std::size_t>(cfg.steps));

    RolloutResult out;
    std::vector<Vec2> accel(static_cast<std::size_t>(N));

    for (long tick = 0; tick < cfg.steps; ++tick) {
        for (int t = 0; t < W; ++t) {
            Mat& x = window[static_cast<std::size_t>(t)];
            for (Eigen::Index c = 0; c < cols; ++c) {
                const auto& [i, j] = pairs[static_cast<std::size_t>(c)];
                const auto& bi = buf[static_cast<std::size_t>(i)];
                const auto& bj = buf[static_cast<std::size_t>(j)];
                const Vec2& pi = bi.pos[static_cast<std::size_t>(t)];
                const Vec2& pj = bj.pos[static_cast<std::size_t>(t)];
                x(0, c) = pi.x;
                x(1, c) = pi.y;
                x(2, c) = bi.vel[static_cast<std::size_t>(t)].x;
                x(3, c) = bi.vel[static_cast<std::size_t>(t)].y;
                x(4, c) = 1.0 - pi.norm();
                x(5, c) = pj.x;
                x(6, c) = pj.y;
                x(7, c) = bj.vel[static_cast<std::size_t>(t)].x;
                x(8, c) = bj.vel[static_cast<std::size_t>(t)].y;
                x(9, c) = 1.0 - pj.norm();
                x(10, c) = (pi - pj).norm();
            }
        }
        Mat z = net.forward(window, ws);

        for (int oi : order) {
            // this focal agent's candidate columns, in neighbor index order
            GaussianAccelPrediction best[2];
            double best_mag[2] = {-1.0, -1.0};
            int found = 0;
            for (Eigen::Index c = 0; c < cols; ++c) {
                if (pairs[static_cast<std::size_t>(c)].first != oi)
                    continue;
                GaussianAccelPrediction p;
                p.mu = {z(0, c), z(1, c)};
                p.sigma = {std::exp(z(2, c)), std::exp(z(3, c))};
                double mag = p.mu.norm();
                if (mag > best_mag[0]) {
                    best[1] = best[0];
                    best_mag[1] = best_mag[0];
                    best[0] = p;
                    best_mag[0] = mag;
                } else if (mag > best_mag[1]) {
                    best[1] = p;
                    best_mag[1] = mag;
                }
                ++found;
            }
            GaussianAccelPrediction pred;
            if (found == 1) {
                pred = best[0];
            } else {
                pred.mu = best[0].mu + best[1].mu;
                pred.sigma = 0.5 * (best[0].sigma + best[1].sigma);
            }
            accel[static_cast<std::size_t>(oi)] =
                sample_acceleration(pred, cfg.strict_paper_noise,
                                    noise[static_cast<std::size_t>(oi)]);
        }

        for (int oi : order) {
            auto& b = buf[static_cast<std::size_t>(oi)];
            Vec2 u = b.pos.back();
            Vec2 v = b.vel.back();
            integrate(u, v, accel[static_cast<std::size_t>(oi)], dt);
            if (contain(u, v, 1.0, cfg.containment))
                ++out.containment_events;
            if (!std::isfinite(u.x) || !std::isfinite(u.y) || !std::isfinite(v.x) ||
                !std::isfinite(v.y))
                throw std::runtime_error("rollout: non-finite state at tick " +
                                         std::to_string(tick) + " (last good tick " +
                                         std::to_string(tick - 1) + ")");
            b.push(u, v);
            seg.agents[static_cast<std::size_t>(oi)].push_back(R * u);
        }
    }

    out.trajectory.arena = cfg.arena;
    out.trajectory.scale_cm = 1.0;
    out.trajectory.segments.push_back(std::move(seg));
    return out;
}

} // namespace

RolloutResult rollout_group(const AccelNet& net, const RolloutConfig& cfg) {
    return run_rollout(net, cfg);
}

RolloutResult rollout_pair(const AccelNet& net, const RolloutConfig& cfg) {
    if (cfg.agents != 2)
        throw std::invalid_argument("rollout_pair: config must have exactly two agents");
    return run_rollout(net, cfg);
}

} // namespace fishsim
