#include "fishsim/trajectory.hpp"

#include <stdexcept>
#include <string>

namespace fishsim {

Trajectory normalize(const Trajectory& traj) {
    traj.validate();
    if (traj.scale_cm == traj.arena.radius_cm)
        return traj;
    if (traj.scale_cm != 1.0)
        throw std::invalid_argument("normalize: trajectory already carries a unit scale");
    const double r = traj.arena.radius_cm;
    Trajectory out = traj;
    out.scale_cm = r;
    std::string bad;
    for (std::size_t s = 0; s < out.segments.size(); ++s)
        for (auto& agent : out.segments[s].agents)
            for (std::size_t k = 0; k < agent.size(); ++k) {
                if (agent[k].norm() > r + 1e-9 && bad.size() < 200)
                    bad += " segment " + std::to_string(s) + " frame " + std::to_string(k) + ";";
                agent[k] = agent[k] / r;
            }
    if (!bad.empty())
        throw std::runtime_error("normalize: positions outside the tank:" + bad);
    return out;
}

Trajectory denormalize(const Trajectory& traj) {
    traj.validate();
    if (traj.scale_cm == 1.0)
        return traj;
    Trajectory out = traj;
    out.scale_cm = 1.0;
    for (auto& seg : out.segments)
        for (auto& agent : seg.agents)
            for (auto& p : agent)
                p = p * traj.scale_cm;
    return out;
}

} // namespace fishsim
