#include "fishsim/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "fishsim/rng.hpp"

namespace fishsim {

RawTrajectory load_raw(const std::string& path) {
    CsvRun run = read_csv_run(path);
    if (run.frames() < 2)
        throw std::runtime_error(path + ": a run needs at least 2 frames");
    const double step = run.times[1] - run.times[0];
    for (std::size_t k = 1; k < run.frames(); ++k)
        if (std::fabs(run.times[k] - run.times[k - 1] - step) > 1e-6)
            throw std::runtime_error(path + ": non-uniform source frame step at t = " +
                                     std::to_string(run.times[k]));
    RawTrajectory raw;
    raw.run_id = std::filesystem::path(path).stem().string();
    raw.frame_rate_hz = 1.0 / step;
    raw.t0 = run.times[0];
    raw.agents = std::move(run.agents);
    return raw;
}

std::vector<DraftSegment> remove_inactive(const RawTrajectory& raw, double body_length_cm) {
    const std::size_t n = raw.frames();
    const double dt = raw.source_dt();
    const double min_step = body_length_cm * dt; // 1 BL/s expressed as displacement
    std::vector<char> active(n, 1);
    for (std::size_t k = 1; k < n; ++k)
        for (const auto& agent : raw.agents)
            if ((agent[k] - agent[k - 1]).norm() < min_step) {
                active[k] = 0;
                break;
            }
    if (n >= 2)
        active[0] = active[1];

    std::vector<DraftSegment> out;
    std::size_t k = 0;
    while (k < n) {
        if (!active[k]) {
            ++k;
            continue;
        }
        std::size_t end = k;
        while (end < n && active[end])
            ++end;
        DraftSegment seg;
        seg.t0 = raw.t0 + static_cast<double>(k) * dt;
        seg.valid.assign(end - k, 1);
        seg.agents.resize(raw.agents.size());
        for (std::size_t a = 0; a < raw.agents.size(); ++a)
            seg.agents[a].assign(raw.agents[a].begin() + k, raw.agents[a].begin() + end);
        out.push_back(std::move(seg));
        k = end;
    }
    return out;
}

void remove_leaps(DraftSegment& seg, double body_length_cm) {
    const double max_step = 1.5 * body_length_cm;
    for (std::size_t k = 1; k < seg.frames(); ++k)
        for (const auto& agent : seg.agents)
            if ((agent[k] - agent[k - 1]).norm() > max_step) {
                seg.valid[k] = 0;
                break;
            }
}

GapFillResult fill_gaps(const std::vector<DraftSegment>& segments, int max_gap_frames,
                        double source_dt) {
    if (max_gap_frames < 0)
        throw std::invalid_argument("fill_gaps: max gap must be non-negative");
    if (!(source_dt > 0.0))
        throw std::invalid_argument("fill_gaps: timestep must be positive");
    GapFillResult res;
    for (const auto& seg : segments) {
        DraftSegment work = seg;
        const std::size_t n = work.frames();
        // bridge interior gaps short enough to fill
        std::size_t k = 0;
        while (k < n) {
            if (work.valid[k]) {
                ++k;
                continue;
            }
            std::size_t end = k;
            while (end < n && !work.valid[end])
                ++end;
            bool interior = k > 0 && end < n;
            std::size_t len = end - k;
            if (interior && len <= static_cast<std::size_t>(max_gap_frames)) {
                for (std::size_t a = 0; a < work.agents.size(); ++a) {
                    const Vec2 lo = work.agents[a][k - 1];
                    const Vec2 hi = work.agents[a][end];
                    for (std::size_t j = k; j < end; ++j) {
                        double w = static_cast<double>(j - k + 1) / static_cast<double>(len + 1);
                        work.agents[a][j] = lo + (hi - lo) * w;
                    }
                }
                for (std::size_t j = k; j < end; ++j)
                    work.valid[j] = 1;
                res.interpolated += len;
            }
            k = end;
        }
        // split on what is still invalid
        k = 0;
        while (k < n) {
            if (!work.valid[k]) {
                ++k;
                continue;
            }
            std::size_t end = k;
            while (end < n && work.valid[end])
                ++end;
            DraftSegment piece;
            piece.t0 = work.t0 + static_cast<double>(k) * source_dt;
            piece.valid.assign(end - k, 1);
            piece.agents.resize(work.agents.size());
            for (std::size_t a = 0; a < work.agents.size(); ++a)
                piece.agents[a].assign(work.agents[a].begin() + k, work.agents[a].begin() + end);
            res.segments.push_back(std::move(piece));
            k = end;
        }
    }
    return res;
}

std::vector<DraftSegment> resample(const std::vector<DraftSegment>& segments, double source_dt,
                                   double target_dt) {
    if (!(source_dt > 0.0) || !(target_dt > 0.0))
        throw std::invalid_argument("resample: timesteps must be positive");
    double ratio_f = target_dt / source_dt;
    long ratio = std::lround(ratio_f);
    if (ratio < 1 || std::fabs(ratio_f - static_cast<double>(ratio)) > 1e-6)
        throw std::invalid_argument("resample: target timestep " + std::to_string(target_dt) +
                                    " s is not an integer multiple of the source step " +
                                    std::to_string(source_dt) + " s");
    std::vector<DraftSegment> out;
    out.reserve(segments.size());
    for (const auto& seg : segments) {
        DraftSegment dec;
        dec.t0 = seg.t0;
        dec.agents.resize(seg.agents.size());
        for (std::size_t k = 0; k < seg.frames(); k += static_cast<std::size_t>(ratio)) {
            for (std::size_t a = 0; a < seg.agents.size(); ++a)
                dec.agents[a].push_back(seg.agents[a][k]);
            dec.valid.push_back(1);
        }
        out.push_back(std::move(dec));
    }
    return out;
}

IngestResult clean_run(const RawTrajectory& raw, const IngestConfig& config) {
    config.arena.validate();
    const double bl = config.arena.body_length_cm;
    const double src_dt = raw.source_dt();

    IngestResult res;
    res.log.input_frames = raw.frames();

    std::vector<DraftSegment> segs = remove_inactive(raw, bl);
    std::size_t kept_active = 0;
    for (const auto& s : segs)
        kept_active += s.frames();
    res.log.removed_inactive = raw.frames() - kept_active;

    std::size_t marked = 0;
    for (auto& s : segs) {
        remove_leaps(s, bl);
        for (char v : s.valid)
            if (!v)
                ++marked;
    }

    GapFillResult filled = fill_gaps(segs, config.max_gap_frames, src_dt);
    res.log.interpolated = filled.interpolated;
    res.log.removed_leap = marked - filled.interpolated;

    const long ratio = std::lround(config.arena.dt_s / src_dt);
    const std::size_t min_source = static_cast<std::size_t>(ratio) + 1; // 2 output frames
    std::vector<DraftSegment> survivors;
    for (auto& s : filled.segments) {
        if (s.frames() < min_source)
            res.log.boundary_dropped += s.frames();
        else
            survivors.push_back(std::move(s));
    }

    std::vector<DraftSegment> decimated = resample(survivors, src_dt, config.arena.dt_s);

    res.clean.arena = config.arena;
    res.clean.scale_cm = 1.0;
    std::size_t out_frames = 0;
    for (std::size_t i = 0; i < decimated.size(); ++i) {
        Segment seg;
        seg.t0 = decimated[i].t0;
        seg.agents = std::move(decimated[i].agents);
        out_frames += seg.frames();
        res.log.boundary_dropped += survivors[i].frames() - seg.frames();
        res.clean.segments.push_back(std::move(seg));
    }
    res.log.output_frames = out_frames;
    res.log.segments = res.clean.segments.size();
    res.clean.validate();
    return res;
}

SplitIndices split_segments(const std::vector<std::size_t>& frames_per_segment,
                            const std::array<double, 3>& fractions, std::uint64_t seed) {
    double sum = fractions[0] + fractions[1] + fractions[2];
    for (double f : fractions)
        if (f < 0.0)
            throw std::invalid_argument("split: negative fraction");
    if (std::fabs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("split: fractions must sum to 1");

    std::vector<std::size_t> order(frames_per_segment.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    Rng rng(seed, "split");
    rng.shuffle(order);

    double total = 0.0;
    for (std::size_t f : frames_per_segment)
        total += static_cast<double>(f);

    SplitIndices out;
    std::vector<std::size_t>* sets[3] = {&out.train, &out.val, &out.test};
    double cum = 0.0;
    std::size_t set = 0;
    double target = fractions[0] * total;
    for (std::size_t idx : order) {
        // a straddling segment joins the set whose boundary is nearer
        double w = static_cast<double>(frames_per_segment[idx]);
        while (set + 1 < 3 && (fractions[set] == 0.0 || cum + 0.5 * w > target)) {
            ++set;
            target += fractions[set] * total;
        }
        sets[set]->push_back(idx);
        cum += w;
    }
    for (std::size_t s = 0; s < 3; ++s) {
        if (fractions[s] > 0.0 && sets[s]->empty())
            throw std::runtime_error("split: not enough segments to populate all requested sets");
        std::sort(sets[s]->begin(), sets[s]->end());
    }
    return out;
}

std::array<Trajectory, 3> split(const Trajectory& traj, const std::array<double, 3>& fractions,
                                std::uint64_t seed) {
    traj.validate();
    std::vector<std::size_t> frames;
    frames.reserve(traj.segments.size());
    for (const auto& s : traj.segments)
        frames.push_back(s.frames());
    SplitIndices idx = split_segments(frames, fractions, seed);

    std::array<Trajectory, 3> out;
    const std::vector<std::size_t>* sets[3] = {&idx.train, &idx.val, &idx.test};
    for (std::size_t s = 0; s < 3; ++s) {
        out[s].arena = traj.arena;
        out[s].scale_cm = traj.scale_cm;
        for (std::size_t i : *sets[s])
            out[s].segments.push_back(traj.segments[i]);
    }
    return out;
}

} // namespace fishsim
