#include "fishsim/csv_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace fishsim {

namespace {

[[noreturn]] void fail(const std::string& path, std::size_t lineno, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + what);
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty())
        return false;
    std::size_t used = 0;
    try {
        out = std::stod(s, &used);
    } catch (const std::exception&) {
        return false;
    }
    return used == s.size() && std::isfinite(out);
}

} // namespace

CsvRun read_csv_run(const std::string& path) {
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
    if (line != "t,agent,x,y")
        fail(path, lineno, "expected header `t,agent,x,y`, got `" + line + "`");

    CsvRun run;
    double current_t = 0.0;
    std::vector<bool> seen; // agent coverage of the current timestamp
    bool first_block = true;

    auto close_block = [&](std::size_t at_line) {
        for (std::size_t a = 0; a < seen.size(); ++a)
            if (!seen[a])
                fail(path, at_line, "agent " + std::to_string(a) + " missing at t = " + std::to_string(current_t));
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::size_t c1 = line.find(',');
        std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        std::size_t c3 = c2 == std::string::npos ? std::string::npos : line.find(',', c2 + 1);
        if (c3 == std::string::npos || line.find(',', c3 + 1) != std::string::npos)
            fail(path, lineno, "expected 4 comma-separated fields");
        double t, x, y;
        if (!parse_double(line.substr(0, c1), t))
            fail(path, lineno, "bad time value");
        const std::string agent_s = line.substr(c1 + 1, c2 - c1 - 1);
        std::size_t used = 0;
        long agent = -1;
        try {
            agent = std::stol(agent_s, &used);
        } catch (const std::exception&) {
            fail(path, lineno, "bad agent id `" + agent_s + "`");
        }
        if (used != agent_s.size() || agent < 0)
            fail(path, lineno, "bad agent id `" + agent_s + "`");
        if (!parse_double(line.substr(c2 + 1, c3 - c2 - 1), x) || !parse_double(line.substr(c3 + 1), y))
            fail(path, lineno, "bad coordinate value");

        bool new_block = first_block || t != current_t;
        if (new_block) {
            if (!first_block) {
                close_block(lineno);
                if (t <= current_t)
                    fail(path, lineno, "timestamps must increase");
            }
            first_block = false;
            current_t = t;
            run.times.push_back(t);
            seen.assign(seen.size(), false);
        }
        if (static_cast<std::size_t>(agent) >= run.agents.size()) {
            if (run.times.size() > 1)
                fail(path, lineno, "agent " + std::to_string(agent) + " appears after the first timestamp");
            run.agents.resize(agent + 1);
            seen.resize(agent + 1, false);
        }
        if (seen[agent])
            fail(path, lineno, "duplicate agent " + std::to_string(agent) + " at t = " + std::to_string(t));
        seen[agent] = true;
        auto& series = run.agents[agent];
        series.resize(run.times.size() - 1, Vec2{});
        series.push_back({x, y});
    }
    if (first_block)
        throw std::runtime_error(path + ": no data rows");
    close_block(lineno);
    if (run.agents.empty())
        throw std::runtime_error(path + ": no agents");
    return run;
}

Trajectory trajectory_from_run(const CsvRun& run, const ArenaSpec& arena) {
    arena.validate();
    if (run.frames() == 0)
        throw std::runtime_error("trajectory_from_run: empty run");
    const double dt = arena.dt_s;
    Trajectory traj;
    traj.arena = arena;
    traj.scale_cm = 1.0;

    auto start_segment = [&](std::size_t frame) {
        Segment seg;
        seg.t0 = run.times[frame];
        seg.agents.resize(run.agent_count());
        for (std::size_t a = 0; a < run.agent_count(); ++a)
            seg.agents[a].push_back(run.agents[a][frame]);
        traj.segments.push_back(std::move(seg));
    };

    start_segment(0);
    for (std::size_t k = 1; k < run.frames(); ++k) {
        double step = run.times[k] - run.times[k - 1];
        if (step > 1.5 * dt) {
            start_segment(k);
            continue;
        }
        if (std::fabs(step - dt) > 1e-6)
            throw std::runtime_error("trajectory_from_run: non-uniform timestep " + std::to_string(step) +
                                     " s at t = " + std::to_string(run.times[k]) + " (expected " +
                                     std::to_string(dt) + " s)");
        for (std::size_t a = 0; a < run.agent_count(); ++a)
            traj.segments.back().agents[a].push_back(run.agents[a][k]);
    }
    traj.validate();
    return traj;
}

Trajectory read_trajectory_csv(const std::string& path, const ArenaSpec& arena) {
    return trajectory_from_run(read_csv_run(path), arena);
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    traj.validate();
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f)
        throw std::runtime_error("Could not open file for writing: " + path);
    std::fputs("t,agent,x,y\n", f);
    const double scale = traj.scale_cm;
    bool ok = true;
    for (const auto& seg : traj.segments) {
        for (std::size_t k = 0; k < seg.frames(); ++k) {
            double t = seg.t0 + static_cast<double>(k) * traj.arena.dt_s;
            for (std::size_t a = 0; a < seg.agent_count(); ++a) {
                const Vec2 p = seg.agents[a][k] * scale;
                ok = ok && std::fprintf(f, "%.10g,%zu,%.10g,%.10g\n", t, a, p.x, p.y) > 0;
            }
        }
    }
    if (std::fclose(f) != 0 || !ok)
        throw std::runtime_error("Write failed: " + path);
}

} // namespace fishsim
