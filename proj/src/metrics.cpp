#include "fishsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "fishsim/state.hpp"

namespace fishsim {

void HistogramSpec::validate() const {
    if (!(hi > lo) || bins < 1)
        throw std::invalid_argument("HistogramSpec: need hi > lo and bins >= 1");
}

double RunningStats::stddev() const {
    double v = variance();
    return v > 0.0 ? std::sqrt(v) : 0.0;
}

HistogramAccumulator::HistogramAccumulator(const HistogramSpec& spec) : spec_(spec) {
    spec_.validate();
    counts_.assign(spec_.bins, 0);
}

void HistogramAccumulator::add(double v) {
    if (!std::isfinite(v))
        throw std::invalid_argument("Histogram: non-finite sample");
    if (v < spec_.lo || v > spec_.hi)
        return;
    int k = static_cast<int>((v - spec_.lo) / spec_.bin_width());
    if (k >= spec_.bins)
        k = spec_.bins - 1; // v == hi lands in the last (closed) bin
    ++counts_[k];
    ++total_;
}

Histogram HistogramAccumulator::finalize() const {
    Histogram h;
    h.spec = spec_;
    h.counts = counts_;
    h.total = total_;
    h.density.assign(spec_.bins, 0.0);
    if (total_ > 0) {
        double norm = 1.0 / (static_cast<double>(total_) * spec_.bin_width());
        for (int k = 0; k < spec_.bins; ++k)
            h.density[k] = static_cast<double>(counts_[k]) * norm;
    }
    return h;
}

BinningConfig BinningConfig::for_arena(const ArenaSpec& arena) {
    BinningConfig b;
    b.wall_dist = {0.0, arena.radius_cm, 50};
    b.neighbor_dist = {0.0, 2.0 * arena.radius_cm, 100};
    return b;
}

namespace {

/// Frame-by-frame walk over a pair trajectory in cm. Callback receives the
/// two agent states at every frame that has a velocity (frame index >= 1).
template <typename F>
void for_each_pair_frame(const Trajectory& traj, F&& f) {
    traj.validate();
    const double r = traj.arena.radius_cm;
    const double dt = traj.arena.dt_s;
    const double scale = traj.scale_cm;
    for (const auto& seg : traj.segments) {
        if (seg.frames() < 2)
            continue;
        for (std::size_t k = 1; k < seg.frames(); ++k) {
            AgentState a({seg.agents[0][k].x * scale, seg.agents[0][k].y * scale},
                         (seg.agents[0][k] - seg.agents[0][k - 1]) * (scale / dt), r);
            AgentState b({seg.agents[1][k].x * scale, seg.agents[1][k].y * scale},
                         (seg.agents[1][k] - seg.agents[1][k - 1]) * (scale / dt), r);
            f(a, b);
        }
    }
}

struct PairFrameSink {
    virtual void individual(const InstantObservables& o) = 0;
    virtual void collective(const InstantObservables& from_i, const InstantObservables& from_j) = 0;
    virtual ~PairFrameSink() = default;
};

void scan_pairs(const Trajectory& traj, PairFrameSink& sink) {
    if (traj.agent_count() != 2)
        throw std::invalid_argument("collective observables need exactly 2 agents, got " +
                                    std::to_string(traj.agent_count()));
    for_each_pair_frame(traj, [&](const AgentState& a, const AgentState& b) {
        InstantObservables oi = pair_observables(a, b);
        InstantObservables oj = pair_observables(b, a);
        sink.individual(oi);
        sink.individual(oj);
        sink.collective(oi, oj);
    });
}

} // namespace

PdfSet instantaneous_pdfs(const Trajectory& traj, const BinningConfig& bins, bool roles) {
    struct Sink : PairFrameSink {
        const BinningConfig& b;
        bool roles;
        HistogramAccumulator speed, wall, incidence, ndist, hdiff, viewing;
        HistogramAccumulator speed_l, speed_f, wall_l, wall_f, inc_l, inc_f, view_l, view_f;

        explicit Sink(const BinningConfig& b_, bool roles_)
            : b(b_), roles(roles_), speed(b.speed), wall(b.wall_dist), incidence(b.angle),
              ndist(b.neighbor_dist), hdiff(b.angle), viewing(b.angle), speed_l(b.speed),
              speed_f(b.speed), wall_l(b.wall_dist), wall_f(b.wall_dist), inc_l(b.angle),
              inc_f(b.angle), view_l(b.angle), view_f(b.angle) {}

        void individual(const InstantObservables& o) override {
            speed.add(o.speed);
            wall.add(o.wall_dist);
            if (o.has_heading)
                incidence.add(o.incidence_deg);
            if (roles && o.has_pair_angles) {
                (o.is_leader ? speed_l : speed_f).add(o.speed);
                (o.is_leader ? wall_l : wall_f).add(o.wall_dist);
                if (o.has_heading)
                    (o.is_leader ? inc_l : inc_f).add(o.incidence_deg);
                (o.is_leader ? view_l : view_f).add(o.viewing_deg);
            }
        }
        void collective(const InstantObservables& oi, const InstantObservables& oj) override {
            ndist.add(oi.neighbor_dist);
            if (oi.has_pair_angles) {
                hdiff.add(oi.heading_diff_deg);
                hdiff.add(oj.heading_diff_deg);
                viewing.add(oi.viewing_deg);
                viewing.add(oj.viewing_deg);
            }
        }
    } sink(bins, roles);

    scan_pairs(traj, sink);

    PdfSet out;
    out["speed"] = sink.speed.finalize();
    out["wall_distance"] = sink.wall.finalize();
    out["incidence"] = sink.incidence.finalize();
    out["neighbor_distance"] = sink.ndist.finalize();
    out["heading_difference"] = sink.hdiff.finalize();
    out["viewing_angle"] = sink.viewing.finalize();
    if (roles) {
        out["speed_leader"] = sink.speed_l.finalize();
        out["speed_follower"] = sink.speed_f.finalize();
        out["wall_distance_leader"] = sink.wall_l.finalize();
        out["wall_distance_follower"] = sink.wall_f.finalize();
        out["incidence_leader"] = sink.inc_l.finalize();
        out["incidence_follower"] = sink.inc_f.finalize();
        out["viewing_angle_leader"] = sink.view_l.finalize();
        out["viewing_angle_follower"] = sink.view_f.finalize();
    }
    return out;
}

SummaryStats summary(const Trajectory& traj) {
    struct Acc {
        std::uint64_t n = 0;
        double sum = 0.0, sum_sq = 0.0;
        void add(double v) { ++n; sum += v; sum_sq += v * v; }
        StatEntry entry() const {
            StatEntry e;
            e.count = n;
            if (n == 0)
                return e;
            e.mean = sum / static_cast<double>(n);
            double var = sum_sq / static_cast<double>(n) - e.mean * e.mean;
            e.stddev = var > 0.0 ? std::sqrt(var) : 0.0;
            return e;
        }
    };
    struct Sink : PairFrameSink {
        Acc speed, wall, incidence, ndist, hdiff, viewing;
        Acc speed_l, speed_f, wall_l, wall_f, inc_l, inc_f, view_l, view_f;

        void individual(const InstantObservables& o) override {
            speed.add(o.speed);
            wall.add(o.wall_dist);
            if (o.has_heading)
                incidence.add(o.incidence_deg);
            if (o.has_pair_angles) {
                (o.is_leader ? speed_l : speed_f).add(o.speed);
                (o.is_leader ? wall_l : wall_f).add(o.wall_dist);
                if (o.has_heading)
                    (o.is_leader ? inc_l : inc_f).add(o.incidence_deg);
                (o.is_leader ? view_l : view_f).add(o.viewing_deg);
            }
        }
        void collective(const InstantObservables& oi, const InstantObservables& oj) override {
            ndist.add(oi.neighbor_dist);
            if (oi.has_pair_angles) {
                hdiff.add(oi.heading_diff_deg);
                hdiff.add(oj.heading_diff_deg);
                viewing.add(oi.viewing_deg);
                viewing.add(oj.viewing_deg);
            }
        }
    } sink;

    scan_pairs(traj, sink);

    SummaryStats out;
    out["speed"] = sink.speed.entry();
    out["speed_leader"] = sink.speed_l.entry();
    out["speed_follower"] = sink.speed_f.entry();
    out["wall_distance"] = sink.wall.entry();
    out["wall_distance_leader"] = sink.wall_l.entry();
    out["wall_distance_follower"] = sink.wall_f.entry();
    out["incidence"] = sink.incidence.entry();
    out["incidence_leader"] = sink.inc_l.entry();
    out["incidence_follower"] = sink.inc_f.entry();
    out["neighbor_distance"] = sink.ndist.entry();
    out["heading_difference"] = sink.hdiff.entry();
    out["viewing_angle"] = sink.viewing.entry();
    out["viewing_angle_leader"] = sink.view_l.entry();
    out["viewing_angle_follower"] = sink.view_f.entry();
    return out;
}

namespace {

struct LagAccumulator {
    std::vector<double> sum;
    std::vector<std::uint64_t> count;

    explicit LagAccumulator(std::size_t lags) : sum(lags, 0.0), count(lags, 0) {}

    CorrelationCurve finalize(double dt, const char* what) const {
        if (count.back() == 0)
            throw std::runtime_error(std::string(what) +
                                     ": empty curve, max lag exceeds every segment");
        CorrelationCurve c;
        c.dt = dt;
        for (std::size_t k = 0; k < sum.size(); ++k) {
            if (count[k] == 0)
                continue;
            c.lag_s.push_back(static_cast<double>(k) * dt);
            c.value.push_back(sum[k] / static_cast<double>(count[k]));
            c.count.push_back(count[k]);
        }
        return c;
    }
};

std::size_t lag_count(const Trajectory& traj, double max_lag_s) {
    if (!(max_lag_s >= 0.0))
        throw std::invalid_argument("correlation: max lag must be non-negative");
    return static_cast<std::size_t>(std::floor(max_lag_s / traj.arena.dt_s + 1e-9)) + 1;
}

} // namespace

CorrelationCurve msd(const Trajectory& traj, double max_lag_s) {
    traj.validate();
    const std::size_t lags = lag_count(traj, max_lag_s);
    LagAccumulator acc(lags);
    const double scale = traj.scale_cm;
    for (const auto& seg : traj.segments) {
        const std::size_t n = seg.frames();
        for (const auto& agent : seg.agents) {
            std::size_t kmax = std::min(lags, n);
            for (std::size_t k = 0; k < kmax; ++k) {
                double s = 0.0;
                for (std::size_t t = 0; t + k < n; ++t)
                    s += (agent[t + k] - agent[t]).squared_norm();
                acc.sum[k] += s * scale * scale;
                acc.count[k] += n - k;
            }
        }
    }
    return acc.finalize(traj.arena.dt_s, "msd");
}

CorrelationCurve velocity_autocorrelation(const Trajectory& traj, double max_lag_s) {
    traj.validate();
    const std::size_t lags = lag_count(traj, max_lag_s);
    LagAccumulator acc(lags);
    for (const auto& seg : traj.segments) {
        for (const auto& agent : seg.agents) {
            std::vector<Vec2> v = backward_velocities(agent, traj.arena.dt_s);
            for (auto& w : v)
                w = w * traj.scale_cm;
            const std::size_t n = v.size();
            std::size_t kmax = std::min(lags, n);
            for (std::size_t k = 0; k < kmax; ++k) {
                double s = 0.0;
                for (std::size_t t = 0; t + k < n; ++t)
                    s += v[t + k].dot(v[t]);
                acc.sum[k] += s;
                acc.count[k] += n - k;
            }
        }
    }
    return acc.finalize(traj.arena.dt_s, "velocity_autocorrelation");
}

CorrelationCurve incidence_autocorrelation(const Trajectory& traj, double max_lag_s) {
    traj.validate();
    const std::size_t lags = lag_count(traj, max_lag_s);
    LagAccumulator acc(lags);
    for (const auto& seg : traj.segments) {
        for (const auto& agent : seg.agents) {
            const std::size_t n = agent.size();
            if (n < 2)
                continue;
            // unit heading-relative-to-normal vectors where defined
            std::vector<double> c(n - 1), s(n - 1);
            std::vector<char> ok(n - 1, 0);
            for (std::size_t k = 1; k < n; ++k) {
                Vec2 vel = agent[k] - agent[k - 1];
                if ((vel.x == 0.0 && vel.y == 0.0) || (agent[k].x == 0.0 && agent[k].y == 0.0))
                    continue;
                double th = deg_to_rad(incidence_angle_deg(agent[k], vel));
                c[k - 1] = std::cos(th);
                s[k - 1] = std::sin(th);
                ok[k - 1] = 1;
            }
            const std::size_t m = n - 1;
            std::size_t kmax = std::min(lags, m);
            for (std::size_t k = 0; k < kmax; ++k) {
                double sum = 0.0;
                std::uint64_t cnt = 0;
                for (std::size_t t = 0; t + k < m; ++t) {
                    if (!ok[t] || !ok[t + k])
                        continue;
                    sum += c[t + k] * c[t] + s[t + k] * s[t];
                    ++cnt;
                }
                acc.sum[k] += sum;
                acc.count[k] += cnt;
            }
        }
    }
    return acc.finalize(traj.arena.dt_s, "incidence_autocorrelation");
}

double compare(const Histogram& a, const Histogram& b) {
    if (a.spec.bins != b.spec.bins || std::fabs(a.spec.lo - b.spec.lo) > 1e-12 ||
        std::fabs(a.spec.hi - b.spec.hi) > 1e-12)
        throw std::invalid_argument("compare: histograms have different bin edges");
    double tv = 0.0;
    for (int k = 0; k < a.spec.bins; ++k)
        tv += std::fabs(a.density[k] - b.density[k]);
    return 0.5 * tv * a.spec.bin_width();
}

void write_histogram_csv(const Histogram& h, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f)
        throw std::runtime_error("Could not open file for writing: " + path);
    bool ok = std::fputs("bin_center,density\n", f) >= 0;
    for (int k = 0; k < h.spec.bins; ++k)
        ok = ok && std::fprintf(f, "%.10g,%.10g\n", h.bin_center(k), h.density[k]) > 0;
    if (std::fclose(f) != 0 || !ok)
        throw std::runtime_error("Write failed: " + path);
}

void write_curve_csv(const CorrelationCurve& c, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f)
        throw std::runtime_error("Could not open file for writing: " + path);
    bool ok = std::fputs("lag_s,value,count\n", f) >= 0;
    for (std::size_t k = 0; k < c.lag_s.size(); ++k)
        ok = ok && std::fprintf(f, "%.10g,%.10g,%llu\n", c.lag_s[k], c.value[k],
                                static_cast<unsigned long long>(c.count[k])) > 0;
    if (std::fclose(f) != 0 || !ok)
        throw std::runtime_error("Write failed: " + path);
}

} // namespace fishsim
