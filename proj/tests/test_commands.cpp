#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fishsim/commands.hpp"
#include "fishsim/csv_io.hpp"
#include "fishsim/kv_file.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;
using namespace fishsim;
using fishsim::testing::TempDir;

namespace {

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// 25 Hz raw pair recording on two concentric circles, fast enough to
// stay above the activity threshold
void write_raw_run(const std::string& path, int frames) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f);
    std::fputs("t,agent,x,y\n", f);
    for (int k = 0; k < frames; ++k) {
        double t = k * 0.04;
        double a = 0.03 * k;
        std::fprintf(f, "%.6f,0,%.6f,%.6f\n", t, 10.0 * std::cos(a), 10.0 * std::sin(a));
        std::fprintf(f, "%.6f,1,%.6f,%.6f\n", t, 15.0 * std::cos(-a), 15.0 * std::sin(-a));
    }
    std::fclose(f);
}

std::string pair_csv(const TempDir& tmp, const std::string& name, std::uint64_t seed,
                     std::size_t ticks) {
    Trajectory traj = fishsim::testing::random_pair_walk(seed, ticks);
    std::string path = tmp.file(name);
    write_trajectory_csv(traj, path);
    return path;
}

} // namespace

TEST_CASE("dataset helpers") {
    TempDir tmp("cmd-helpers");
    std::string a = pair_csv(tmp, "a.csv", 1, 40);
    std::string b = pair_csv(tmp, "b.csv", 2, 30);

    Trajectory merged = load_dataset(tmp.path.string(), ArenaSpec{});
    CHECK(merged.segments.size() == 2);
    CHECK(merged.total_frames() == 70);
    CHECK_THROWS_AS(load_dataset(tmp.file("nope.csv"), ArenaSpec{}), std::runtime_error);

    fs::create_directories(tmp.file("empty"));
    CHECK_THROWS_AS(load_dataset(tmp.file("empty"), ArenaSpec{}), std::runtime_error);

    Trajectory chopped = chop_segments(merged, 25);
    REQUIRE(chopped.segments.size() == 4); // 25+15 and 25+5
    CHECK(chopped.segments[0].frames() == 25);
    CHECK(chopped.segments[1].frames() == 15);
    CHECK(chopped.segments[1].t0 ==
          doctest::Approx(merged.segments[0].t0 + 25 * merged.arena.dt_s));
    CHECK_THROWS_AS(chop_segments(merged, 1), std::invalid_argument);
}

TEST_CASE("file hashing distinguishes contents") {
    TempDir tmp("cmd-hash");
    std::ofstream(tmp.file("x")) << "abc";
    std::ofstream(tmp.file("y")) << "abd";
    std::ofstream(tmp.file("z")) << "abc";
    CHECK(fnv1a_file(tmp.file("x")) == fnv1a_file(tmp.file("z")));
    CHECK(fnv1a_file(tmp.file("x")) != fnv1a_file(tmp.file("y")));
    CHECK_THROWS_AS(fnv1a_file(tmp.file("missing")), std::runtime_error);
}

TEST_CASE("usage errors exit nonzero") {
    CHECK(run_cli({}) != 0);
    CHECK(run_cli({"frobnicate"}) != 0);
    CHECK(run_cli({"simulate-abc"}) != 0);                          // missing --out
    CHECK(run_cli({"simulate-abc", "--out", "x", "--steps", "0"}) != 0);
    CHECK(run_cli({"rollout", "--model", "m", "--out", "x", "--agents", "1"}) != 0);
    CHECK(run_cli({"simulate-abc", "--config"}) != 0);              // dangling path
    CHECK(run_cli({"--config", "whatever.meta"}) != 0);             // no subcommand
    CHECK(run_cli({"validate", "--input", "missing.csv", "--out", "vdir"}) != 0);
}

TEST_CASE("simulate-abc writes a rerunnable sidecar") {
    TempDir tmp("cmd-abc");
    std::string out = tmp.file("run.csv");
    REQUIRE(run_cli({"simulate-abc", "--out", out, "--steps", "300", "--seed", "5"}) == 0);
    REQUIRE(fs::exists(out));
    REQUIRE(fs::exists(out + ".meta"));

    KvPairs kv = read_kv_file(out + ".meta");
    CHECK(kv_get(kv, "command") == "simulate-abc");
    CHECK(kv_get(kv, "steps") == "300");
    CHECK(kv_get(kv, "seed") == "5");

    Trajectory traj = read_trajectory_csv(out, ArenaSpec{});
    CHECK(traj.total_frames() == 300);
    CHECK(traj.agent_count() == 2);

    // overwrite protection without --force
    CHECK(run_cli({"simulate-abc", "--out", out, "--steps", "300", "--seed", "5"}) != 0);

    // rerun from the sidecar into a fresh path: byte-identical trajectory
    std::string redo = tmp.file("redo.csv");
    REQUIRE(run_cli({"simulate-abc", "--config", out + ".meta", "--out", redo}) == 0);
    CHECK(read_all(redo) == read_all(out));
}

TEST_CASE("sidecar guards") {
    TempDir tmp("cmd-guards");
    std::string out = tmp.file("run.csv");
    REQUIRE(run_cli({"simulate-abc", "--out", out, "--steps", "120", "--seed", "2"}) == 0);

    // a sidecar from another command is rejected
    CHECK(run_cli({"validate", "--config", out + ".meta", "--out", tmp.file("v")}) != 0);

    // unknown non-log keys are rejected
    KvPairs kv = read_kv_file(out + ".meta");
    kv.emplace_back("banana", "1");
    write_kv_file(tmp.file("bad.meta"), kv);
    CHECK(run_cli({"simulate-abc", "--config", tmp.file("bad.meta"), "--out",
                   tmp.file("x.csv")}) != 0);

    // log.* keys are informational and ignored on rerun
    KvPairs ok = read_kv_file(out + ".meta");
    ok.emplace_back("log.note", "extra");
    write_kv_file(tmp.file("ok.meta"), ok);
    CHECK(run_cli({"simulate-abc", "--config", tmp.file("ok.meta"), "--out",
                   tmp.file("y.csv")}) == 0);
}

TEST_CASE("validate emits the observable battery") {
    TempDir tmp("cmd-validate");
    std::string data = pair_csv(tmp, "walk.csv", 31, 600);
    std::string out = tmp.file("obs");
    REQUIRE(run_cli({"validate", "--input", data, "--out", out, "--max-lag", "2"}) == 0);

    for (const char* n : {"speed", "wall_distance", "incidence", "neighbor_distance",
                          "heading_difference", "viewing_angle"})
        CHECK(fs::exists(fs::path(out) / ("pdf_" + std::string(n) + ".csv")));
    for (const char* n : {"corr_msd.csv", "corr_velocity.csv", "corr_incidence.csv"})
        CHECK(fs::exists(fs::path(out) / n));
    CHECK(!fs::exists(fs::path(out) / "pdf_speed_leader.csv"));

    KvPairs report = read_kv_file((fs::path(out) / "report.txt").string());
    CHECK(std::stod(kv_get(report, "speed.mean")) > 0.0);
    // frame 0 has no backward velocity, so counts run one short of the frames
    CHECK(std::stol(kv_get(report, "neighbor_distance.count")) == 599);

    // roles add the leader/follower splits
    std::string out2 = tmp.file("obs_roles");
    REQUIRE(run_cli({"validate", "--input", data, "--out", out2, "--max-lag", "2",
                     "--roles"}) == 0);
    CHECK(fs::exists(fs::path(out2) / "pdf_speed_leader.csv"));
    CHECK(fs::exists(fs::path(out2) / "pdf_viewing_angle_follower.csv"));

    // sidecar rerun reproduces every observable byte for byte
    std::string out3 = tmp.file("obs_redo");
    REQUIRE(run_cli({"validate", "--config", (fs::path(out) / "validate.meta").string(),
                     "--out", out3}) == 0);
    CHECK(read_all((fs::path(out3) / "pdf_speed.csv").string()) ==
          read_all((fs::path(out) / "pdf_speed.csv").string()));
    CHECK(read_all((fs::path(out3) / "corr_msd.csv").string()) ==
          read_all((fs::path(out) / "corr_msd.csv").string()));
    CHECK(read_all((fs::path(out3) / "report.txt").string()) ==
          read_all((fs::path(out) / "report.txt").string()));
}

TEST_CASE("compare writes the distance table") {
    TempDir tmp("cmd-compare");
    std::string a = pair_csv(tmp, "a.csv", 7, 500);
    std::string b = pair_csv(tmp, "b.csv", 8, 500);

    CHECK(run_cli({"compare", a, b}) == 0); // table on stdout only

    std::string table = tmp.file("tv.csv");
    REQUIRE(run_cli({"compare", a, b, "--out", table}) == 0);
    std::ifstream in(table);
    std::string line;
    std::getline(in, line);
    CHECK(line == "observable,tv_distance");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        double tv = std::stod(line.substr(line.find(',') + 1));
        CHECK(tv >= 0.0);
        CHECK(tv <= 1.0);
    }
    CHECK(rows == 6);

    // identical datasets are at distance zero everywhere
    std::string self_table = tmp.file("self.csv");
    REQUIRE(run_cli({"compare", a, a, "--out", self_table}) == 0);
    std::ifstream sin(self_table);
    std::getline(sin, line);
    while (std::getline(sin, line))
        CHECK(std::stod(line.substr(line.find(',') + 1)) == 0.0);

    // positionals can come from the sidecar
    std::string redo = tmp.file("redo.csv");
    REQUIRE(run_cli({"compare", "--config", table + ".meta", "--out", redo}) == 0);
    CHECK(read_all(redo) == read_all(table));
}

TEST_CASE("ingest cleans a raw run and reruns identically") {
    TempDir tmp("cmd-ingest");
    std::string raw = tmp.file("runA.csv");
    write_raw_run(raw, 250);

    std::string out = tmp.file("clean");
    REQUIRE(run_cli({"ingest", "--input", raw, "--out", out}) == 0);
    fs::path meta = fs::path(out) / "ingest.meta";
    REQUIRE(fs::exists(meta));
    fs::path seg0 = fs::path(out) / "runA_seg000.csv";
    REQUIRE(fs::exists(seg0));

    KvPairs kv = read_kv_file(meta.string());
    CHECK(kv_get(kv, "command") == "ingest");
    std::size_t input_frames = std::stoul(kv_get(kv, "log.runA.input_frames"));
    std::size_t output = std::stoul(kv_get(kv, "log.runA.output_frames"));
    std::size_t inactive = std::stoul(kv_get(kv, "log.runA.removed_inactive"));
    std::size_t leap = std::stoul(kv_get(kv, "log.runA.removed_leap"));
    std::size_t boundary = std::stoul(kv_get(kv, "log.runA.boundary_dropped"));
    CHECK(input_frames == 250);
    CHECK(input_frames == output + inactive + leap + boundary);

    // cleaned output parses and respects the resampled rate
    Trajectory clean = read_trajectory_csv(seg0.string(), ArenaSpec{});
    CHECK(clean.agent_count() == 2);
    CHECK(clean.total_frames() == output);

    // rerun from the sidecar into another directory
    std::string redo = tmp.file("clean2");
    REQUIRE(run_cli({"ingest", "--config", meta.string(), "--out", redo}) == 0);
    CHECK(read_all((fs::path(redo) / "runA_seg000.csv").string()) == read_all(seg0.string()));

    // existing outputs are protected
    CHECK(run_cli({"ingest", "--input", raw, "--out", out}) != 0);
    CHECK(run_cli({"ingest", "--input", raw, "--out", out, "--force"}) == 0);
}

TEST_CASE("train and rollout run end to end on a small corpus") {
    TempDir tmp("cmd-train");
    std::string data = tmp.file("abc.csv");
    REQUIRE(run_cli({"simulate-abc", "--out", data, "--steps", "1500", "--seed", "3"}) == 0);

    std::string model = tmp.file("model.ckpt");
    REQUIRE(run_cli({"train", "--data", data, "--out", model, "--ablation", "mli", "--epochs",
                     "1", "--batch", "256", "--chop", "40", "--seed", "11"}) == 0);
    REQUIRE(fs::exists(model));
    CHECK(fs::exists(model + ".final"));
    CHECK(fs::exists(model + ".loss.csv"));
    KvPairs kv = read_kv_file(model + ".meta");
    CHECK(kv_get(kv, "command") == "train");
    CHECK(kv_get(kv, "log.param_count") == "34948");
    CHECK(std::stol(kv_get(kv, "log.train_samples")) > 0);

    std::string out = tmp.file("roll.csv");
    REQUIRE(run_cli({"rollout", "--model", model, "--out", out, "--steps", "200", "--seed",
                     "4"}) == 0);
    Trajectory traj = read_trajectory_csv(out, ArenaSpec{});
    CHECK(traj.total_frames() == 200);
    CHECK(traj.agent_count() == 2);
    for (const auto& agent : traj.segments[0].agents)
        for (const Vec2& p : agent)
            REQUIRE(p.norm() <= ArenaSpec{}.radius_cm + 1e-9);

    // rollout sidecar rerun is byte-identical
    std::string redo = tmp.file("roll2.csv");
    REQUIRE(run_cli({"rollout", "--config", out + ".meta", "--out", redo}) == 0);
    CHECK(read_all(redo) == read_all(out));

    // the rollout records which checkpoint produced it
    KvPairs rkv = read_kv_file(out + ".meta");
    CHECK(kv_get(rkv, "model") == model);
    CHECK(kv_get(rkv, "log.checkpoint_fnv1a").size() == 16);
}
