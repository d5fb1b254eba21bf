#include "fishsim/commands.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fishsim/abc.hpp"
#include "fishsim/csv_io.hpp"
#include "fishsim/dli.hpp"
#include "fishsim/engine.hpp"
#include "fishsim/ingest.hpp"
#include "fishsim/kv_file.hpp"
#include "fishsim/metrics.hpp"

namespace fs = std::filesystem;

namespace fishsim {

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open for hashing: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    auto mix = [&](std::streamsize n) {
        for (std::streamsize k = 0; k < n; ++k) {
            h ^= static_cast<unsigned char>(buf[k]);
            h *= 0x100000001b3ULL;
        }
    };
    while (in.read(buf, sizeof buf))
        mix(static_cast<std::streamsize>(sizeof buf));
    mix(in.gcount());
    return h;
}

Trajectory load_dataset(const std::string& path, const ArenaSpec& arena) {
    if (!fs::exists(path))
        throw std::runtime_error("no such input: " + path);
    std::vector<std::string> files;
    if (fs::is_directory(path)) {
        for (const auto& e : fs::directory_iterator(path))
            if (e.is_regular_file() && e.path().extension() == ".csv")
                files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw std::runtime_error("no csv files in directory: " + path);
    } else {
        files.push_back(path);
    }
    Trajectory out;
    out.arena = arena;
    out.scale_cm = 1.0;
    for (const auto& f : files) {
        Trajectory t = read_trajectory_csv(f, arena);
        for (auto& s : t.segments)
            out.segments.push_back(std::move(s));
    }
    out.validate();
    return out;
}

Trajectory chop_segments(const Trajectory& traj, std::size_t frames) {
    if (frames < 2)
        throw std::invalid_argument("chop_segments: need at least 2 frames per piece");
    Trajectory out;
    out.arena = traj.arena;
    out.scale_cm = traj.scale_cm;
    for (const auto& seg : traj.segments) {
        const std::size_t total = seg.frames();
        for (std::size_t lo = 0; lo < total; lo += frames) {
            const std::size_t hi = std::min(total, lo + frames);
            Segment piece;
            piece.t0 = seg.t0 + static_cast<double>(lo) * traj.arena.dt_s;
            piece.agents.resize(seg.agent_count());
            for (std::size_t a = 0; a < seg.agent_count(); ++a)
                piece.agents[a].assign(
                    seg.agents[a].begin() + static_cast<std::ptrdiff_t>(lo),
                    seg.agents[a].begin() + static_cast<std::ptrdiff_t>(hi));
            out.segments.push_back(std::move(piece));
        }
    }
    return out;
}

namespace {

void ensure_writable(const fs::path& p, bool force) {
    if (fs::exists(p) && !force)
        throw std::runtime_error("output exists: " + p.string() + " (pass --force to overwrite)");
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void kv_add_arena(KvPairs& kv, const ArenaSpec& a) {
    kv.emplace_back("radius", format_double(a.radius_cm));
    kv.emplace_back("bl", format_double(a.body_length_cm));
    kv.emplace_back("dt", format_double(a.dt_s));
}

// ---- per-command argument structs ----

struct IngestArgs {
    std::string input, out;
    ArenaSpec arena;
    int max_gap = 5;
    std::uint64_t seed = 0; // logged for downstream reuse, cleaning is deterministic
    bool force = false;
};

struct AbcArgs {
    std::string out, params, kick_table;
    ArenaSpec arena;
    long steps = 500000;
    std::uint64_t seed = 0;
    bool force = false;
};

struct TrainArgs {
    std::string data, out;
    std::string ablation = "none";
    ArenaSpec arena;
    long epochs = 45;
    long batch = 512;
    double lr = 1e-4;
    long chop = 500;
    std::vector<double> split{0.8, 0.15, 0.05};
    std::uint64_t seed = 0;
    bool force = false;
};

struct RolloutArgs {
    std::string model, out;
    std::string containment = "reflect";
    ArenaSpec arena;
    long steps = 500000;
    int agents = 2;
    std::uint64_t seed = 0;
    bool strict = false;
    bool force = false;
};

struct ValidateArgs {
    std::string input, out;
    ArenaSpec arena;
    double max_lag = 25.0;
    bool roles = false;
    bool force = false;
};

struct CompareArgs {
    std::string a, b, out;
    ArenaSpec arena;
    bool force = false;
};

// ---- handlers ----

int do_ingest(const IngestArgs& a) {
    std::vector<std::string> run_files;
    if (!fs::exists(a.input))
        throw std::runtime_error("no such input: " + a.input);
    if (fs::is_directory(a.input)) {
        for (const auto& e : fs::directory_iterator(a.input))
            if (e.is_regular_file() && e.path().extension() == ".csv")
                run_files.push_back(e.path().string());
        std::sort(run_files.begin(), run_files.end());
        if (run_files.empty())
            throw std::runtime_error("no csv files in directory: " + a.input);
    } else {
        run_files.push_back(a.input);
    }

    fs::create_directories(a.out);
    IngestConfig cfg;
    cfg.arena = a.arena;
    cfg.max_gap_frames = a.max_gap;

    KvPairs kv;
    kv.emplace_back("command", "ingest");
    kv.emplace_back("input", a.input);
    kv.emplace_back("out", a.out);
    kv_add_arena(kv, a.arena);
    kv.emplace_back("max-gap", std::to_string(a.max_gap));
    kv.emplace_back("seed", std::to_string(a.seed));
    kv.emplace_back("log.runs", std::to_string(run_files.size()));

    for (const auto& f : run_files) {
        RawTrajectory raw = load_raw(f);
        IngestResult r = clean_run(raw, cfg);
        for (std::size_t k = 0; k < r.clean.segments.size(); ++k) {
            Trajectory one;
            one.arena = a.arena;
            one.scale_cm = 1.0;
            one.segments.push_back(r.clean.segments[k]);
            char name[64];
            std::snprintf(name, sizeof name, "_seg%03zu.csv", k);
            fs::path out_file = fs::path(a.out) / (raw.run_id + name);
            ensure_writable(out_file, a.force);
            write_trajectory_csv(one, out_file.string());
        }
        const ProvenanceLog& log = r.log;
        std::printf("%s: input_frames=%zu output_frames=%zu removed_inactive=%zu "
                    "removed_leap=%zu boundary_dropped=%zu interpolated=%zu segments=%zu\n",
                    raw.run_id.c_str(), log.input_frames, log.output_frames,
                    log.removed_inactive, log.removed_leap, log.boundary_dropped,
                    log.interpolated, log.segments);
        auto put = [&](const char* field, std::size_t v) {
            kv.emplace_back("log." + raw.run_id + "." + field, std::to_string(v));
        };
        put("input_frames", log.input_frames);
        put("output_frames", log.output_frames);
        put("removed_inactive", log.removed_inactive);
        put("removed_leap", log.removed_leap);
        put("boundary_dropped", log.boundary_dropped);
        put("interpolated", log.interpolated);
        put("segments", log.segments);
    }

    fs::path meta = fs::path(a.out) / "ingest.meta";
    ensure_writable(meta, a.force);
    write_kv_file(meta.string(), kv);
    return 0;
}

int do_simulate_abc(const AbcArgs& a) {
    AbcConfig cfg;
    cfg.arena = a.arena;
    if (!a.params.empty())
        cfg.params = params_from_kv(a.params);
    if (!a.kick_table.empty())
        cfg.dists = KickDistributions::from_table_csv(a.kick_table);
    cfg.duration_s = static_cast<double>(a.steps) * a.arena.dt_s;
    cfg.seed = a.seed;

    KickTimelines timelines = simulate_abc(cfg);
    Trajectory traj = resample_events(timelines, a.arena, cfg.duration_s);
    if (static_cast<long>(traj.total_frames()) != a.steps)
        throw std::logic_error("simulate-abc: tick count mismatch");

    ensure_writable(a.out, a.force);
    write_trajectory_csv(traj, a.out);

    KvPairs kv;
    kv.emplace_back("command", "simulate-abc");
    kv_add_arena(kv, a.arena);
    kv.emplace_back("steps", std::to_string(a.steps));
    kv.emplace_back("seed", std::to_string(a.seed));
    if (!a.params.empty())
        kv.emplace_back("params", a.params);
    if (!a.kick_table.empty())
        kv.emplace_back("kick-table", a.kick_table);
    kv.emplace_back("out", a.out);
    kv.emplace_back("log.duration_s", format_double(cfg.duration_s));
    kv.emplace_back("log.kicks_agent0", std::to_string(timelines[0].size()));
    kv.emplace_back("log.kicks_agent1", std::to_string(timelines[1].size()));
    ensure_writable(a.out + ".meta", a.force);
    write_kv_file(a.out + ".meta", kv);

    std::printf("wrote %s (%ld ticks, %.6g s)\n", a.out.c_str(), a.steps, cfg.duration_s);
    return 0;
}

int do_train(const TrainArgs& a) {
    if (a.split.size() != 3)
        throw std::invalid_argument("train: --split needs three fractions");
    if (a.ablation != "none" && a.ablation != "mli")
        throw std::invalid_argument("train: --ablation must be 'none' or 'mli'");

    Trajectory data = load_dataset(a.data, a.arena);
    Trajectory chopped = chop_segments(data, static_cast<std::size_t>(a.chop));
    Trajectory norm = normalize(chopped);
    std::array<double, 3> fractions{a.split[0], a.split[1], a.split[2]};
    std::array<Trajectory, 3> sets = split(norm, fractions, a.seed);

    DliTopology topo = a.ablation == "mli" ? mli_topology() : DliTopology{};
    SampleSet train_samples = make_samples(sets[0], topo.window);
    SampleSet val_samples = make_samples(sets[1], topo.window);

    AccelNet net(topo);
    net.init_params(a.seed);

    TrainConfig tc;
    tc.epochs = a.epochs;
    tc.batch = a.batch;
    tc.seed = a.seed;
    tc.adam.lr = a.lr;
    tc.on_epoch = [](const EpochLoss& e) {
        std::fprintf(stderr, "epoch %ld: train_nll=%.6f val_nll=%.6f\n", e.epoch, e.train_nll,
                     e.val_nll);
    };
    TrainResult res = train(net, train_samples, val_samples, tc);

    const std::string final_path = a.out + ".final";
    const std::string loss_path = a.out + ".loss.csv";
    ensure_writable(a.out, a.force);
    ensure_writable(final_path, a.force);
    ensure_writable(loss_path, a.force);
    save_checkpoint(a.out, topo, res.best_params, a.seed, res.best_epoch);
    save_checkpoint(final_path, net, a.seed, a.epochs);
    write_loss_history(loss_path, res.history);

    KvPairs kv;
    kv.emplace_back("command", "train");
    kv.emplace_back("data", a.data);
    kv.emplace_back("out", a.out);
    kv_add_arena(kv, a.arena);
    kv.emplace_back("epochs", std::to_string(a.epochs));
    kv.emplace_back("batch", std::to_string(a.batch));
    kv.emplace_back("lr", format_double(a.lr));
    kv.emplace_back("chop", std::to_string(a.chop));
    kv.emplace_back("split", format_double(a.split[0]) + "," + format_double(a.split[1]) + "," +
                                 format_double(a.split[2]));
    kv.emplace_back("ablation", a.ablation);
    kv.emplace_back("seed", std::to_string(a.seed));
    kv.emplace_back("log.train_frames", std::to_string(sets[0].total_frames()));
    kv.emplace_back("log.val_frames", std::to_string(sets[1].total_frames()));
    kv.emplace_back("log.test_frames", std::to_string(sets[2].total_frames()));
    kv.emplace_back("log.train_samples", std::to_string(train_samples.size()));
    kv.emplace_back("log.val_samples", std::to_string(val_samples.size()));
    kv.emplace_back("log.param_count", std::to_string(net.params().size()));
    kv.emplace_back("log.best_epoch", std::to_string(res.best_epoch));
    kv.emplace_back("log.best_val_nll", format_double(res.best_val_nll));
    kv.emplace_back("log.final_checkpoint", final_path);
    kv.emplace_back("log.history", loss_path);
    ensure_writable(a.out + ".meta", a.force);
    write_kv_file(a.out + ".meta", kv);

    std::printf("trained %ld epochs on %zu samples (%zu params); best epoch %ld, val_nll %.6f\n",
                a.epochs, train_samples.size(), net.params().size(), res.best_epoch,
                res.best_val_nll);
    return 0;
}

int do_rollout(const RolloutArgs& a) {
    LoadedCheckpoint meta;
    AccelNet net = load_checkpoint(a.model, &meta);

    RolloutConfig rc;
    rc.arena = a.arena;
    rc.agents = a.agents;
    rc.steps = a.steps;
    rc.seed = a.seed;
    rc.containment = containment_from_string(a.containment);
    rc.strict_paper_noise = a.strict;

    RolloutResult rr = a.agents == 2 ? rollout_pair(net, rc) : rollout_group(net, rc);

    ensure_writable(a.out, a.force);
    write_trajectory_csv(rr.trajectory, a.out);

    KvPairs kv;
    kv.emplace_back("command", "rollout");
    kv.emplace_back("model", a.model);
    kv.emplace_back("out", a.out);
    kv_add_arena(kv, a.arena);
    kv.emplace_back("steps", std::to_string(a.steps));
    kv.emplace_back("agents", std::to_string(a.agents));
    kv.emplace_back("seed", std::to_string(a.seed));
    kv.emplace_back("containment", a.containment);
    if (a.strict)
        kv.emplace_back("strict-paper-noise", "true");
    kv.emplace_back("log.checkpoint_fnv1a", hex64(fnv1a_file(a.model)));
    kv.emplace_back("log.checkpoint_epoch", std::to_string(meta.epoch));
    kv.emplace_back("log.checkpoint_train_seed", std::to_string(meta.train_seed));
    kv.emplace_back("log.containment_events", std::to_string(rr.containment_events));
    ensure_writable(a.out + ".meta", a.force);
    write_kv_file(a.out + ".meta", kv);

    std::printf("wrote %s (%ld ticks, %d agents, %ld containment events)\n", a.out.c_str(),
                a.steps, a.agents, rr.containment_events);
    return 0;
}

const char* const kBasePdfs[6] = {"speed",
                                  "wall_distance",
                                  "incidence",
                                  "neighbor_distance",
                                  "heading_difference",
                                  "viewing_angle"};

int do_validate(const ValidateArgs& a) {
    Trajectory traj = load_dataset(a.input, a.arena);
    BinningConfig bins = BinningConfig::for_arena(a.arena);
    PdfSet pdfs = instantaneous_pdfs(traj, bins, a.roles);
    SummaryStats stats = summary(traj);
    CorrelationCurve cx = msd(traj, a.max_lag);
    CorrelationCurve cv = velocity_autocorrelation(traj, a.max_lag);
    CorrelationCurve cw = incidence_autocorrelation(traj, a.max_lag);

    auto check_hist = [](const Histogram& h, const std::string& name) {
        for (double d : h.density)
            if (!std::isfinite(d))
                throw std::runtime_error("non-finite density in " + name);
    };
    auto check_curve = [](const CorrelationCurve& c, const std::string& name) {
        for (double v : c.value)
            if (!std::isfinite(v))
                throw std::runtime_error("non-finite value in " + name);
    };

    std::vector<std::string> names(kBasePdfs, kBasePdfs + 6);
    if (a.roles)
        for (const char* n : {"speed_leader", "speed_follower", "wall_distance_leader",
                              "wall_distance_follower", "incidence_leader", "incidence_follower",
                              "viewing_angle_leader", "viewing_angle_follower"})
            names.push_back(n);
    for (const auto& n : names)
        check_hist(pdfs.at(n), n);
    check_curve(cx, "msd");
    check_curve(cv, "velocity_autocorrelation");
    check_curve(cw, "incidence_autocorrelation");

    fs::create_directories(a.out);
    for (const auto& n : names) {
        fs::path p = fs::path(a.out) / ("pdf_" + n + ".csv");
        ensure_writable(p, a.force);
        write_histogram_csv(pdfs.at(n), p.string());
    }
    const std::pair<const CorrelationCurve*, const char*> curves[3] = {
        {&cx, "corr_msd.csv"}, {&cv, "corr_velocity.csv"}, {&cw, "corr_incidence.csv"}};
    for (const auto& [curve, fname] : curves) {
        fs::path p = fs::path(a.out) / fname;
        ensure_writable(p, a.force);
        write_curve_csv(*curve, p.string());
    }

    KvPairs report;
    for (const auto& [key, e] : stats) {
        report.emplace_back(key + ".mean", format_double(e.mean));
        report.emplace_back(key + ".stddev", format_double(e.stddev));
        report.emplace_back(key + ".count", std::to_string(e.count));
    }
    fs::path report_path = fs::path(a.out) / "report.txt";
    ensure_writable(report_path, a.force);
    write_kv_file(report_path.string(), report);

    KvPairs kv;
    kv.emplace_back("command", "validate");
    kv.emplace_back("input", a.input);
    kv.emplace_back("out", a.out);
    kv_add_arena(kv, a.arena);
    kv.emplace_back("max-lag", format_double(a.max_lag));
    if (a.roles)
        kv.emplace_back("roles", "true");
    kv.emplace_back("log.frames", std::to_string(traj.total_frames()));
    kv.emplace_back("log.segments", std::to_string(traj.segments.size()));
    kv.emplace_back("log.observable_files", std::to_string(names.size() + 3));
    fs::path meta = fs::path(a.out) / "validate.meta";
    ensure_writable(meta, a.force);
    write_kv_file(meta.string(), kv);

    std::printf("wrote %zu observable files and report.txt to %s\n", names.size() + 3,
                a.out.c_str());
    return 0;
}

int do_compare(const CompareArgs& a) {
    Trajectory ta = load_dataset(a.a, a.arena);
    Trajectory tb = load_dataset(a.b, a.arena);
    BinningConfig bins = BinningConfig::for_arena(a.arena);
    PdfSet pa = instantaneous_pdfs(ta, bins, false);
    PdfSet pb = instantaneous_pdfs(tb, bins, false);

    std::vector<std::pair<std::string, double>> rows;
    for (const char* n : kBasePdfs)
        rows.emplace_back(n, compare(pa.at(n), pb.at(n)));

    std::printf("%-20s %s\n", "observable", "tv_distance");
    for (const auto& [n, tv] : rows)
        std::printf("%-20s %.6f\n", n.c_str(), tv);

    if (!a.out.empty()) {
        ensure_writable(a.out, a.force);
        std::FILE* f = std::fopen(a.out.c_str(), "wb");
        if (!f)
            throw std::runtime_error("cannot open for writing: " + a.out);
        std::fputs("observable,tv_distance\n", f);
        for (const auto& [n, tv] : rows)
            std::fprintf(f, "%s,%.10g\n", n.c_str(), tv);
        std::fclose(f);

        KvPairs kv;
        kv.emplace_back("command", "compare");
        kv.emplace_back("a", a.a);
        kv.emplace_back("b", a.b);
        kv.emplace_back("out", a.out);
        kv_add_arena(kv, a.arena);
        ensure_writable(a.out + ".meta", a.force);
        write_kv_file(a.out + ".meta", kv);
    }
    return 0;
}

// ---- option registration and the sidecar rerun mechanism ----

struct SubSpec {
    CLI::App* cmd = nullptr;
    std::set<std::string> flags;
    std::set<std::string> valued;
    std::vector<std::string> positional_keys;
};

bool user_has_option(const std::vector<std::string>& tokens, const std::string& key) {
    const std::string plain = "--" + key;
    const std::string assigned = plain + "=";
    for (std::size_t i = 1; i < tokens.size(); ++i)
        if (tokens[i] == plain || tokens[i].rfind(assigned, 0) == 0)
            return true;
    return false;
}

bool user_has_positional(const std::vector<std::string>& tokens, const SubSpec& spec) {
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        const std::string& t = tokens[i];
        if (t.rfind("--", 0) == 0) {
            if (t.find('=') == std::string::npos && spec.valued.count(t.substr(2)))
                ++i; // skip the option's value
        } else {
            return true;
        }
    }
    return false;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"pairwise fish interaction models: burst-and-coast simulation, "
                 "recurrent interaction networks and the observable battery"};
    app.require_subcommand(1);

    std::map<std::string, SubSpec> specs;
    auto make_sub = [&](const std::string& name, const std::string& desc) -> SubSpec& {
        SubSpec& s = specs[name];
        s.cmd = app.add_subcommand(name, desc);
        std::string dummy;
        s.cmd->add_option("--config", dummy,
                          "sidecar to rerun from (its values become defaults, "
                          "explicit flags override)");
        return s;
    };
    auto opt = [](SubSpec& s, const std::string& name, auto& var, const std::string& desc) {
        s.valued.insert(name);
        return s.cmd->add_option("--" + name, var, desc)->capture_default_str();
    };
    auto flg = [](SubSpec& s, const std::string& name, bool& var, const std::string& desc) {
        s.flags.insert(name);
        return s.cmd->add_flag("--" + name, var, desc);
    };
    auto arena_opts = [&opt](SubSpec& s, ArenaSpec& a) {
        opt(s, "radius", a.radius_cm, "tank radius in cm");
        opt(s, "bl", a.body_length_cm, "body length in cm");
        opt(s, "dt", a.dt_s, "timestep in s");
    };

    IngestArgs ia;
    SubSpec& ingest_sub = make_sub("ingest", "clean raw recordings into analysis segments");
    opt(ingest_sub, "input", ia.input, "run csv or directory of runs")->required();
    opt(ingest_sub, "out", ia.out, "output directory")->required();
    arena_opts(ingest_sub, ia.arena);
    opt(ingest_sub, "max-gap", ia.max_gap, "longest interpolatable gap in source frames")
        ->check(CLI::NonNegativeNumber);
    opt(ingest_sub, "seed", ia.seed, "pipeline seed, logged for downstream splits");
    flg(ingest_sub, "force", ia.force, "overwrite existing outputs");

    AbcArgs aa;
    SubSpec& abc_sub = make_sub("simulate-abc", "run the burst-and-coast pair simulation");
    opt(abc_sub, "out", aa.out, "trajectory csv to write")->required();
    arena_opts(abc_sub, aa.arena);
    opt(abc_sub, "steps", aa.steps, "ticks to emit")->check(CLI::PositiveNumber);
    opt(abc_sub, "seed", aa.seed, "random seed");
    opt(abc_sub, "params", aa.params, "interaction parameter file (key = value)");
    opt(abc_sub, "kick-table", aa.kick_table, "empirical kick table csv (l_cm,tau_s,weight)");
    flg(abc_sub, "force", aa.force, "overwrite existing outputs");

    TrainArgs ta;
    SubSpec& train_sub = make_sub("train", "fit the interaction network on pair data");
    opt(train_sub, "data", ta.data, "trajectory csv or directory")->required();
    opt(train_sub, "out", ta.out, "checkpoint path (best validation epoch)")->required();
    arena_opts(train_sub, ta.arena);
    opt(train_sub, "epochs", ta.epochs, "training epochs")->check(CLI::NonNegativeNumber);
    opt(train_sub, "batch", ta.batch, "minibatch size")->check(CLI::PositiveNumber);
    opt(train_sub, "lr", ta.lr, "Adam learning rate");
    opt(train_sub, "chop", ta.chop, "frames per split piece")->check(CLI::PositiveNumber);
    opt(train_sub, "split", ta.split, "train,val,test fractions")->delimiter(',')->expected(3);
    opt(train_sub, "ablation", ta.ablation, "'none' for the recurrent model, 'mli' for the "
                                            "memoryless variant");
    opt(train_sub, "seed", ta.seed, "random seed");
    flg(train_sub, "force", ta.force, "overwrite existing outputs");

    RolloutArgs ra;
    SubSpec& roll_sub = make_sub("rollout", "closed-loop simulation of a trained network");
    opt(roll_sub, "model", ra.model, "checkpoint to roll out")->required();
    opt(roll_sub, "out", ra.out, "trajectory csv to write")->required();
    arena_opts(roll_sub, ra.arena);
    opt(roll_sub, "steps", ra.steps, "ticks to emit")->check(CLI::PositiveNumber);
    opt(roll_sub, "agents", ra.agents, "number of agents")->check(CLI::Range(2, 64));
    opt(roll_sub, "seed", ra.seed, "random seed");
    opt(roll_sub, "containment", ra.containment, "wall policy: reflect or clamp");
    flg(roll_sub, "strict-paper-noise", ra.strict,
        "scale the y acceleration noise by sigma_x (the formula as printed)");
    flg(roll_sub, "force", ra.force, "overwrite existing outputs");

    ValidateArgs va;
    SubSpec& val_sub = make_sub("validate", "compute the observable battery for a trajectory");
    opt(val_sub, "input", va.input, "trajectory csv or directory")->required();
    opt(val_sub, "out", va.out, "output directory")->required();
    arena_opts(val_sub, va.arena);
    opt(val_sub, "max-lag", va.max_lag, "correlation horizon in s")->check(CLI::PositiveNumber);
    flg(val_sub, "roles", va.roles, "also write leader/follower splits");
    flg(val_sub, "force", va.force, "overwrite existing outputs");

    CompareArgs ca;
    SubSpec& cmp_sub = make_sub("compare", "total-variation distances between two datasets");
    cmp_sub.cmd->add_option("a", ca.a, "first trajectory csv or directory")->required();
    cmp_sub.cmd->add_option("b", ca.b, "second trajectory csv or directory")->required();
    cmp_sub.positional_keys = {"a", "b"};
    arena_opts(cmp_sub, ca.arena);
    opt(cmp_sub, "out", ca.out, "distance table csv to write");
    flg(cmp_sub, "force", ca.force, "overwrite existing outputs");

    // extract --config before parsing so sidecar values act as defaults
    std::vector<std::string> user(args);
    std::string config_path;
    for (auto it = user.begin(); it != user.end();) {
        if (*it == "--config") {
            if (std::next(it) == user.end()) {
                std::fprintf(stderr, "error: --config needs a path\n");
                return 1;
            }
            config_path = *std::next(it);
            it = user.erase(it, std::next(it, 2));
        } else if (it->rfind("--config=", 0) == 0) {
            config_path = it->substr(9);
            it = user.erase(it);
        } else {
            ++it;
        }
    }

    std::vector<std::string> tokens;
    if (!config_path.empty()) {
        if (user.empty() || !specs.count(user[0])) {
            std::fprintf(stderr, "error: --config requires a subcommand\n");
            return 1;
        }
        const SubSpec& spec = specs[user[0]];
        KvPairs kv;
        try {
            kv = read_kv_file(config_path);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 1;
        }
        if (auto cmd_key = kv_find(kv, "command"); cmd_key && *cmd_key != user[0]) {
            std::fprintf(stderr, "error: sidecar %s was written by '%s', not '%s'\n",
                         config_path.c_str(), cmd_key->c_str(), user[0].c_str());
            return 1;
        }
        const bool positionals_given = user_has_positional(user, spec);
        tokens.push_back(user[0]);
        for (const auto& [key, value] : kv) {
            if (key == "command" || key.rfind("log.", 0) == 0)
                continue;
            if (spec.flags.count(key)) {
                if ((value == "true" || value == "1") && !user_has_option(user, key))
                    tokens.push_back("--" + key);
            } else if (spec.valued.count(key)) {
                if (!user_has_option(user, key)) {
                    tokens.push_back("--" + key);
                    tokens.push_back(value);
                }
            } else if (std::find(spec.positional_keys.begin(), spec.positional_keys.end(), key) !=
                       spec.positional_keys.end()) {
                if (!positionals_given)
                    tokens.push_back(value);
            } else {
                std::fprintf(stderr, "error: sidecar key '%s' is not a %s option\n", key.c_str(),
                             user[0].c_str());
                return 1;
            }
        }
        tokens.insert(tokens.end(), user.begin() + 1, user.end());
    } else {
        tokens = user;
    }

    std::vector<const char*> argv;
    argv.reserve(tokens.size() + 1);
    argv.push_back("fishsim");
    for (const auto& t : tokens)
        argv.push_back(t.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (ingest_sub.cmd->parsed())
            return do_ingest(ia);
        if (abc_sub.cmd->parsed())
            return do_simulate_abc(aa);
        if (train_sub.cmd->parsed())
            return do_train(ta);
        if (roll_sub.cmd->parsed())
            return do_rollout(ra);
        if (val_sub.cmd->parsed())
            return do_validate(va);
        if (cmp_sub.cmd->parsed())
            return do_compare(ca);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

} // namespace fishsim
