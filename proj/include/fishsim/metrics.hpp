#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fishsim/trajectory.hpp"

namespace fishsim {

struct HistogramSpec {
    double lo = 0.0;
    double hi = 1.0;
    int bins = 1;

    double bin_width() const { return (hi - lo) / bins; }
    void validate() const;
};

/// Uniform-bin probability density. Samples outside [lo, hi] are not counted;
/// the density integrates to 1 over the counted samples.
struct Histogram {
    HistogramSpec spec;
    std::vector<std::uint64_t> counts;
    std::vector<double> density;
    std::uint64_t total = 0;

    double bin_center(int k) const { return spec.lo + (k + 0.5) * spec.bin_width(); }
};

class HistogramAccumulator {
public:
    explicit HistogramAccumulator(const HistogramSpec& spec);
    void add(double v);
    Histogram finalize() const;

private:
    HistogramSpec spec_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

/// Welford running mean/std.
struct RunningStats {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double v) {
        ++n;
        double d = v - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (v - mean);
    }
    double variance() const { return n > 0 ? m2 / static_cast<double>(n) : 0.0; }
    double stddev() const;
};

/// Bin ranges for the observable battery; defaults follow the tank geometry
/// (speeds to 35 cm/s, distances to the diameter, 5 degree angle bins).
struct BinningConfig {
    HistogramSpec speed{0.0, 35.0, 70};
    HistogramSpec wall_dist{0.0, 25.0, 50};
    HistogramSpec angle{-180.0, 180.0, 72};
    HistogramSpec neighbor_dist{0.0, 50.0, 100};

    static BinningConfig for_arena(const ArenaSpec& arena);
};

/// Observable names used as map keys and file stems:
///   speed, wall_distance, incidence, neighbor_distance, heading_difference,
///   viewing_angle; role variants carry _leader/_follower suffixes.
using PdfSet = std::map<std::string, Histogram>;

struct StatEntry {
    double mean = 0.0;
    double stddev = 0.0;
    std::uint64_t count = 0;
};
using SummaryStats = std::map<std::string, StatEntry>;

/// The six instantaneous PDFs; with roles also the leader/follower splits of
/// the individual quantities and the viewing angle. Velocities are backward
/// differences, so the first frame of each segment is skipped. Requires pair
/// data (exactly 2 agents) for the collective observables.
PdfSet instantaneous_pdfs(const Trajectory& traj, const BinningConfig& bins, bool roles = true);

SummaryStats summary(const Trajectory& traj);

struct CorrelationCurve {
    double dt = 0.0;
    std::vector<double> lag_s;
    std::vector<double> value;
    std::vector<std::uint64_t> count;
};

CorrelationCurve msd(const Trajectory& traj, double max_lag_s);
CorrelationCurve velocity_autocorrelation(const Trajectory& traj, double max_lag_s);
CorrelationCurve incidence_autocorrelation(const Trajectory& traj, double max_lag_s);

/// Total-variation distance between two densities over identical bins,
/// in [0, 1].
double compare(const Histogram& a, const Histogram& b);

void write_histogram_csv(const Histogram& h, const std::string& path);
void write_curve_csv(const CorrelationCurve& c, const std::string& path);

} // namespace fishsim
