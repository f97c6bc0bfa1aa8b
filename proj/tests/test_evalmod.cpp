#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "srl/common.hpp"
#include "srl/evalmod.hpp"
#include "srl/mdp.hpp"
#include "srl/network.hpp"
#include "srl/rng.hpp"
#include "srl/stats.hpp"
#include "srl/svg.hpp"
#include "srl/trainer.hpp"
#include "srl/volume.hpp"
#include "test_util.hpp"

using namespace srl;

namespace {

// Small geometry keeps rollouts and training runs to a fraction of a second.
Geometry tiny_geo() {
    Geometry g;
    g.dx = 16;
    g.dy = 16;
    g.dz = 12;
    g.bx = 5;
    g.by = 5;
    g.bz = 3;
    g.history = 2;
    return g;
}

std::vector<EnvData> make_envs(int n, uint64_t gen_seed) {
    const auto all = all_environments(gen_seed);
    std::vector<EnvData> out;
    for (int i = 0; i < n; ++i) {
        EnvData e;
        e.spec = all[i];
        auto [v, lm] = generate_environment(e.spec, tiny_geo());
        e.volume = std::move(v);
        e.landmarks = lm;
        out.push_back(std::move(e));
    }
    return out;
}

QNetwork<float> random_net(uint64_t seed) {
    QNetwork<float> net(NetworkArch::for_geometry(tiny_geo()), seed);
    for (int t = 0; t < kNumTasks; ++t) net.add_head(static_cast<TaskId>(t), seed + 11 * t + 1);
    return net;
}

// All-zero parameters give identical Q-values everywhere, so the greedy
// policy always picks action 0 (+x) and the rollout is fully predictable.
QNetwork<float> zeroed_net() {
    QNetwork<float> net = random_net(3);
    for_each_tensor(net, [](const std::string&, std::vector<float>& t) {
        std::fill(t.begin(), t.end(), 0.0f);
    });
    return net;
}

// The episode-stream key locate derives from environment identity and task,
// reproduced here so tests can replay the exact start-position draw.
uint64_t stream_key(const EnvironmentSpec& env, TaskId task) {
    const uint64_t s = static_cast<uint64_t>(env.sequence);
    const uint64_t p = static_cast<uint64_t>(env.pathology);
    const uint64_t o = static_cast<uint64_t>(env.orientation);
    return ((s * 2 + p) * 3 + o) * kNumTasks + static_cast<uint64_t>(task);
}

EnvironmentSpec spec_of(Sequence s, Pathology p, Orientation o, uint64_t seed = 0) {
    EnvironmentSpec e;
    e.sequence = s;
    e.pathology = p;
    e.orientation = o;
    e.seed = seed;
    return e;
}

EvalRecord rec(const std::string& regime, const EnvironmentSpec& env, TaskId task, uint64_t seed,
               double err) {
    EvalRecord r;
    r.regime = regime;
    r.env = env;
    r.task = task;
    r.seed = seed;
    r.terminal_error = err;
    return r;
}

bool same_record(const EvalRecord& a, const EvalRecord& b) {
    return a.regime == b.regime && a.env == b.env && a.task == b.task && a.seed == b.seed &&
           a.terminal_error == b.terminal_error;
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// Comma split that keeps empty fields, including trailing ones.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (ch == '\n') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string slurp_text(const std::filesystem::path& p) {
    const std::vector<char> bytes = testutil::slurp(p);
    return std::string(bytes.begin(), bytes.end());
}

size_t count_occurrences(const std::string& text, const std::string& needle) {
    size_t n = 0;
    for (size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size()))
        ++n;
    return n;
}

}  // namespace

TEST_CASE("evaluation configuration validation") {
    EvalConfig c;
    CHECK_NOTHROW(c.validate());
    c.epsilon = 0.0;
    CHECK_NOTHROW(c.validate());
    c.epsilon = 1.0;
    CHECK_NOTHROW(c.validate());

    c = EvalConfig{};
    c.episodes = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = EvalConfig{};
    c.epsilon = -0.01;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = EvalConfig{};
    c.epsilon = 1.01;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = EvalConfig{};
    c.threshold_scale = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = EvalConfig{};
    c.max_episode_steps = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = EvalConfig{};
    c.threads = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("the adequacy threshold scales with the smallest dimension") {
    // 15 voxels at the 240-voxel reference grid, linear in the smallest dim.
    const Geometry desk;  // 64 x 64 x 24
    CHECK(adequacy_threshold(desk) == doctest::Approx(1.5));
    CHECK(adequacy_threshold(desk, 2.0) == doctest::Approx(3.0));
    CHECK(adequacy_threshold(tiny_geo()) == doctest::Approx(0.75));

    // The minimum is permutation-invariant, so re-sliced volumes share it.
    Geometry permuted;
    permuted.dx = 24;
    permuted.dy = 64;
    permuted.dz = 64;
    permuted.bx = 7;
    permuted.by = 15;
    permuted.bz = 15;
    CHECK(adequacy_threshold(permuted) == doctest::Approx(1.5));

    // Strictly-below cutoff: exactly-at-threshold does not count.
    CHECK(adequate(1.4999, 1.5));
    CHECK_FALSE(adequate(1.5, 1.5));
    CHECK_FALSE(adequate(2.0, 1.5));
}

TEST_CASE("locate is deterministic and pairs episodes across models") {
    const Geometry geo = tiny_geo();
    const auto envs = make_envs(1, 2);
    const QNetwork<float> net_a = random_net(1);
    const QNetwork<float> net_b = random_net(2);
    Workspace<float> ws;
    ws.resize(net_a.arch);

    // With epsilon = 1 every action comes from the episode stream, so the
    // rollout is a pure function of (environment, task, seed): two different
    // models must produce byte-identical terminal errors.
    EvalConfig cfg;
    cfg.epsilon = 1.0;
    cfg.max_episode_steps = 40;

    for (uint64_t seed : {7u, 8u, 9u}) {
        const EvalRecord r1 =
            locate(net_a, envs[0].volume, envs[0].landmarks, TaskId::Center, seed, cfg, geo, "a", ws);
        const EvalRecord r2 =
            locate(net_a, envs[0].volume, envs[0].landmarks, TaskId::Center, seed, cfg, geo, "a", ws);
        const EvalRecord rb =
            locate(net_b, envs[0].volume, envs[0].landmarks, TaskId::Center, seed, cfg, geo, "b", ws);
        CHECK(r1.terminal_error == r2.terminal_error);
        CHECK(r1.terminal_error == rb.terminal_error);
        CHECK(r1.regime == "a");
        CHECK(rb.regime == "b");
        CHECK(r1.env == envs[0].spec);
        CHECK(r1.task == TaskId::Center);
        CHECK(r1.seed == seed);
        CHECK(r1.terminal_error >= 0.0);
    }

    // A model without the requested head is rejected before any rollout.
    QNetwork<float> headless(NetworkArch::for_geometry(geo), 5);
    CHECK_THROWS_AS(locate(headless, envs[0].volume, envs[0].landmarks, TaskId::Center, 7, cfg,
                           geo, "x", ws),
                    ConfigError);
}

TEST_CASE("a zero network walks the +x face and reads out the wall point") {
    const Geometry geo = tiny_geo();
    const auto envs = make_envs(1, 2);
    const Volume& v = envs[0].volume;
    const QNetwork<float> net = zeroed_net();
    Workspace<float> ws;
    ws.resize(net.arch);

    EvalConfig cfg;
    cfg.epsilon = 0.0;  // fully greedy: ties resolve to action 0 (+x)
    cfg.max_episode_steps = 40;

    for (TaskId task : kAllTasks) {
        for (uint64_t seed : {3u, 12u}) {
            // Replay the episode's start draw: the agent then marches +x until
            // clamped at the face and oscillates there until the revisit stop,
            // so the readout is the wall point at the start's (y, z).
            Rng ep = Rng(seed).fork(stream_key(v.spec, task));
            const Coord start = random_start(v, geo, ep);
            const Coord wall{v.dx - 1, start.y, start.z};
            const double want = euclidean(wall, landmark_of(envs[0].landmarks, task));

            const EvalRecord r =
                locate(net, v, envs[0].landmarks, task, seed, cfg, geo, "z", ws);
            CHECK(r.terminal_error == want);
        }
    }
}

TEST_CASE("evaluate_model covers the full grid and is thread-invariant") {
    const Geometry geo = tiny_geo();
    const auto envs = make_envs(2, 2);
    const QNetwork<float> net = random_net(1);

    EvalConfig cfg;
    cfg.episodes = 3;
    cfg.max_episode_steps = 30;
    cfg.seed = 7;

    const auto recs = evaluate_model(net, envs, cfg, geo, "ma");
    REQUIRE(recs.size() == 2u * kNumTasks * 3u);

    // Exactly one record per (environment, task, episode-seed) cell.
    std::set<std::tuple<uint64_t, int, uint64_t>> seen;
    for (const EvalRecord& r : recs) {
        CHECK(r.regime == "ma");
        CHECK((r.env == envs[0].spec || r.env == envs[1].spec));
        CHECK(r.seed >= 7);
        CHECK(r.seed <= 9);
        CHECK(r.terminal_error >= 0.0);
        seen.insert({r.env.seed * 1000 + stream_key(r.env, TaskId::TopLeft),
                     static_cast<int>(r.task), r.seed});
    }
    CHECK(seen.size() == recs.size());

    // Records come back already in canonical order.
    auto sorted = recs;
    sort_records(sorted);
    for (size_t i = 0; i < recs.size(); ++i) CHECK(same_record(recs[i], sorted[i]));

    // Splitting the grid across threads must not change a single byte.
    EvalConfig threaded = cfg;
    threaded.threads = 3;
    const auto recs3 = evaluate_model(net, envs, threaded, geo, "ma");
    REQUIRE(recs3.size() == recs.size());
    for (size_t i = 0; i < recs.size(); ++i) CHECK(same_record(recs[i], recs3[i]));

    CHECK_THROWS_AS(evaluate_model(net, {}, cfg, geo, "ma"), ConfigError);

    // A model whose architecture disagrees with the geometry is rejected
    // up front (its state tensors would be read at the wrong shape).
    Geometry other = geo;
    other.history = 3;
    CHECK_THROWS_AS(evaluate_model(net, envs, cfg, other, "ma"), ConfigError);
}

TEST_CASE("records sort in a canonical, stable order") {
    const std::vector<EnvironmentSpec> envs = {
        spec_of(Sequence::S1, Pathology::PLow, Orientation::Axial),
        spec_of(Sequence::S1, Pathology::PHigh, Orientation::Axial),
        spec_of(Sequence::S2, Pathology::PLow, Orientation::Coronal),
    };
    std::vector<EvalRecord> records;
    double err = 0.0;
    for (const char* regime : {"b", "a"})
        for (const EnvironmentSpec& env : envs)
            for (TaskId task : {TaskId::Center, TaskId::TopLeft})
                for (uint64_t seed : {2u, 1u}) records.push_back(rec(regime, env, task, seed, err += 0.1));

    // Reference order spelled out independently of the library comparator.
    auto expected = records;
    std::stable_sort(expected.begin(), expected.end(), [](const EvalRecord& a, const EvalRecord& b) {
        const auto key = [](const EvalRecord& r) {
            return std::make_tuple(r.regime, static_cast<int>(r.env.orientation),
                                   static_cast<int>(r.env.pathology),
                                   static_cast<int>(r.env.sequence), r.env.seed,
                                   static_cast<int>(r.task), r.seed);
        };
        return key(a) < key(b);
    });

    sort_records(records);
    REQUIRE(records.size() == expected.size());
    for (size_t i = 0; i < records.size(); ++i) CHECK(same_record(records[i], expected[i]));
    CHECK(records.front().regime == "a");
    CHECK(records.back().regime == "b");
}

TEST_CASE("error summaries and adequacy rates") {
    const EnvironmentSpec e = spec_of(Sequence::S1, Pathology::PLow, Orientation::Axial);
    std::vector<EvalRecord> records;
    for (int i = 0; i < 4; ++i)
        records.push_back(rec("m", e, TaskId::Center, static_cast<uint64_t>(i), i));

    const stats::Summary s = summarize_errors(records);
    CHECK(s.n == 4);
    CHECK(s.mean == doctest::Approx(1.5));
    CHECK(s.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK_FALSE(s.degenerate);

    // Errors 0 and 1 fall strictly below a threshold of 2; error 2 does not.
    CHECK(adequacy_rate(records, 2.0) == doctest::Approx(0.5));
    CHECK(adequacy_rate(records, 0.5) == doctest::Approx(0.25));
    CHECK(adequacy_rate({}, 2.0) == 0.0);

    const stats::Summary one = summarize_errors({records[0]});
    CHECK(one.n == 1);
    CHECK(one.degenerate);
}

TEST_CASE("paired comparisons match a direct t-test and drop unmatched rows") {
    const EnvironmentSpec e = spec_of(Sequence::S1, Pathology::PLow, Orientation::Axial);
    const std::vector<double> as = {1.0, 2.0, 1.5, 0.5, 2.5, 1.0};
    const std::vector<double> bs = {0.8, 2.2, 1.0, 0.9, 2.0, 1.6};
    std::vector<EvalRecord> a, b;
    for (size_t i = 0; i < as.size(); ++i) {
        a.push_back(rec("a", e, TaskId::Center, i + 1, as[i]));
        b.push_back(rec("b", e, TaskId::Center, i + 1, bs[i]));
    }

    const stats::TTestResult expected = stats::paired_ttest(as, bs);
    const stats::TTestResult r = paired_model_ttest(a, b);
    CHECK(r.t == expected.t);
    CHECK(r.p == expected.p);
    CHECK(r.df == 5);
    CHECK_FALSE(r.degenerate);

    // Row order is irrelevant: pairing goes through the (env, task, seed) key.
    auto a_rev = a;
    std::reverse(a_rev.begin(), a_rev.end());
    const stats::TTestResult r_rev = paired_model_ttest(a_rev, b);
    CHECK(r_rev.t == expected.t);
    CHECK(r_rev.p == expected.p);

    // Keys present on only one side are dropped before pairing.
    auto a_extra = a;
    a_extra.push_back(rec("a", e, TaskId::Center, 99, 9.0));
    auto b_extra = b;
    b_extra.push_back(rec("b", e, TaskId::TopLeft, 1, 9.0));
    const stats::TTestResult r_extra = paired_model_ttest(a_extra, b_extra);
    CHECK(r_extra.t == expected.t);
    CHECK(r_extra.p == expected.p);

    // Duplicate rows per key collapse to their mean before pairing.
    std::vector<EvalRecord> a_dup;
    for (size_t i = 0; i < as.size(); ++i) {
        a_dup.push_back(rec("a", e, TaskId::Center, i + 1, as[i] - 0.25));
        a_dup.push_back(rec("a", e, TaskId::Center, i + 1, as[i] + 0.25));
    }
    const stats::TTestResult r_dup = paired_model_ttest(a_dup, b);
    CHECK(r_dup.t == expected.t);
    CHECK(r_dup.p == expected.p);

    // Identical sides have zero-variance differences: degenerate, p = 1.
    const stats::TTestResult same = paired_model_ttest(a, a);
    CHECK(same.degenerate);
    CHECK(same.p == doctest::Approx(1.0));
    CHECK_FALSE(same.significant);

    // A single common key is too short for a t statistic.
    const stats::TTestResult tiny = paired_model_ttest({a[0]}, {b[0]});
    CHECK(tiny.degenerate);
    CHECK(tiny.p == doctest::Approx(1.0));
}

TEST_CASE("the forgetting matrix tracks retention of earlier environments") {
    testutil::TempDir dir;
    const auto envs = make_envs(2, 4);

    TrainConfig tc;
    tc.batch_size = 8;
    tc.epochs_single = 2;
    tc.steps_per_epoch = 12;
    tc.max_episode_steps = 20;
    tc.target_sync_interval = 10;
    tc.seed = 5;
    ReplayConfig rc;
    rc.ring_capacity = 500;
    rc.longterm_budget = 40;
    train_regime(Regime::Lifelong, envs, tc, rc, tiny_geo(), dir.path(), "fm", nullptr);
    // Re-evaluation consumes the manifest, which resolves checkpoint paths.
    const RegimeRun run = load_run_manifest(dir.path() / "fm.run.json");
    REQUIRE(run.env_checkpoints.size() == 2);

    EvalConfig cfg;
    cfg.episodes = 2;
    cfg.max_episode_steps = 30;
    cfg.seed = 11;

    const ForgettingMatrix fm = forgetting_matrix(run, envs, cfg, tiny_geo());
    REQUIRE(fm.f.size() == 2);
    REQUIRE(fm.f[0].size() == 2);
    REQUIRE(fm.f[1].size() == 2);

    // Upper triangle = not yet trained, never measured.
    CHECK(std::isnan(fm.f[0][1]));
    CHECK(std::isfinite(fm.f[0][0]));
    CHECK(std::isfinite(fm.f[1][0]));
    CHECK(std::isfinite(fm.f[1][1]));
    CHECK(fm.f[0][0] >= 0.0);

    CHECK(fm.bt_defined);
    CHECK(fm.bt == doctest::Approx(fm.f[0][0] - fm.f[1][0]).epsilon(1e-12));

    // Each cell is reproducible from the checkpoint alone: episode streams
    // depend on (environment, task, seed), not on which environments are
    // evaluated together.
    const auto cell = [&](const std::string& ckpt, const EnvData& env) {
        const QNetwork<float> net = load_checkpoint(ckpt);
        const auto recs = evaluate_model(net, {env}, cfg, tiny_geo(), "o");
        return summarize_errors(recs).mean;
    };
    CHECK(fm.f[0][0] == doctest::Approx(cell(run.env_checkpoints[0], envs[0])).epsilon(1e-12));
    CHECK(fm.f[1][0] == doctest::Approx(cell(run.env_checkpoints[1], envs[0])).epsilon(1e-12));
    CHECK(fm.f[1][1] == doctest::Approx(cell(run.env_checkpoints[1], envs[1])).epsilon(1e-12));

    // Runs without per-environment checkpoints cannot be scored this way.
    RegimeRun bare;
    bare.envs = {envs[0].spec};
    CHECK_THROWS_AS(forgetting_matrix(bare, {envs[0]}, cfg, tiny_geo()), ConfigError);

    // The environment list must match the run's training order exactly.
    const std::vector<EnvData> reversed = {envs[1], envs[0]};
    CHECK_THROWS_AS(forgetting_matrix(run, reversed, cfg, tiny_geo()), ConfigError);
    CHECK_THROWS_AS(forgetting_matrix(run, {envs[0]}, cfg, tiny_geo()), ConfigError);

    RegimeRun clipped = run;
    clipped.env_checkpoints.pop_back();
    CHECK_THROWS_AS(forgetting_matrix(clipped, envs, cfg, tiny_geo()), ConfigError);

    // Checkpoints trained under a different geometry are rejected before any
    // rollout, with the offending file named.
    Geometry other = tiny_geo();
    other.history = 3;
    CHECK_THROWS_AS(forgetting_matrix(run, envs, cfg, other), ConfigError);
}

TEST_CASE("metrics CSV round-trips and stays byte-stable") {
    testutil::TempDir dir;
    const auto p1 = dir.path() / "records.csv";
    const auto p2 = dir.path() / "records2.csv";

    // One-record file: pin the exact row layout.
    write_records_csv(p1, {rec("sert", spec_of(Sequence::S2, Pathology::PHigh, Orientation::Coronal),
                              TaskId::Center, 3, 1.25)});
    const auto lines = split_lines(slurp_text(p1));
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "regime,sequence,pathology,orientation,task,seed,terminal_error");
    CHECK(lines[1] == "sert,S2,PHigh,Coronal,Center,3,1.250000");

    // Round-trip: unsorted input comes back sorted; errors round to 6 decimals;
    // environment identity is (sequence, pathology, orientation) -- generation
    // seeds are not part of the record format and read back as zero.
    std::vector<EvalRecord> records = {
        rec("seril", spec_of(Sequence::S3, Pathology::PLow, Orientation::Sagittal), TaskId::TopRight,
            9, 1.23456789),
        rec("mert", spec_of(Sequence::S1, Pathology::PLow, Orientation::Axial), TaskId::TopLeft, 1,
            0.5),
        rec("mert", spec_of(Sequence::S1, Pathology::PLow, Orientation::Axial), TaskId::TopLeft, 0,
            0.0),
        rec("mert", spec_of(Sequence::S4, Pathology::PHigh, Orientation::Axial, 5),
            TaskId::BottomRight, 2, 7.000001),
    };
    write_records_csv(p1, records);
    write_records_csv(p2, records);
    CHECK(slurp_text(p1) == slurp_text(p2));

    auto expected = records;
    expected[3].env.seed = 0;  // not serialized
    sort_records(expected);
    const auto loaded = read_records_csv(p1);
    REQUIRE(loaded.size() == expected.size());
    for (size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].regime == expected[i].regime);
        CHECK(loaded[i].env == expected[i].env);
        CHECK(loaded[i].task == expected[i].task);
        CHECK(loaded[i].seed == expected[i].seed);
        CHECK(loaded[i].terminal_error ==
              doctest::Approx(expected[i].terminal_error).epsilon(1e-5));
    }
    CHECK(loaded[0].env.seed == 0);

    // A header-only file is a valid empty record set.
    testutil::spit(p1, "regime,sequence,pathology,orientation,task,seed,terminal_error\n");
    CHECK(read_records_csv(p1).empty());
}

TEST_CASE("metrics CSV rejects malformed inputs") {
    testutil::TempDir dir;
    const auto p = dir.path() / "records.csv";
    const std::string header = "regime,sequence,pathology,orientation,task,seed,terminal_error\n";
    const auto expect_config_error = [&](const std::string& text) {
        testutil::spit(p, text);
        CHECK_THROWS_AS(read_records_csv(p), ConfigError);
    };

    expect_config_error("regime,sequence,pathology,orientation,task,seed,Terminal_error\n");
    expect_config_error(header + "sert,S1,PLow,Axial,Center,3\n");                    // 6 fields
    expect_config_error(header + "sert,S1,PLow,Axial,Center,3,1.0,extra\n");          // 8 fields
    expect_config_error(header + "sert,S9,PLow,Axial,Center,3,1.0\n");                // sequence
    expect_config_error(header + "sert,S1,PMid,Axial,Center,3,1.0\n");                // pathology
    expect_config_error(header + "sert,S1,PLow,Oblique,Center,3,1.0\n");              // orientation
    expect_config_error(header + "sert,S1,PLow,Axial,Centre,3,1.0\n");                // task
    expect_config_error(header + "sert,S1,PLow,Axial,Center,3x,1.0\n");               // seed
    expect_config_error(header + "sert,S1,PLow,Axial,Center,3,abc\n");                // error
    expect_config_error(header + "sert,S1,PLow,Axial,Center,3,-0.5\n");               // negative
    expect_config_error(header + "sert,S1,PLow,Axial,Center,3,nan\n");                // non-finite

    // Blank lines are tolerated; everything else must parse.
    testutil::spit(p, header + "\nsert,S1,PLow,Axial,Center,3,1.0\n\n");
    CHECK(read_records_csv(p).size() == 1);

    CHECK_THROWS_AS(read_records_csv(dir.path() / "absent.csv"), ArtifactError);
}

TEST_CASE("summary tables cover every regime and task block") {
    testutil::TempDir dir;
    const auto p = dir.path() / "summary.csv";
    const EnvironmentSpec e = spec_of(Sequence::S1, Pathology::PLow, Orientation::Axial);

    // mert has two tasks, seril only one: the missing block is skipped and its
    // cross-model column stays blank.
    const std::vector<double> mert_tl = {0.4, 1.6, 0.9, 2.1};
    const std::vector<double> mert_ce = {0.2, 0.8, 1.1, 0.5};
    const std::vector<double> seril_tl = {0.9, 1.1, 1.9, 0.6};
    std::vector<EvalRecord> records;
    for (uint64_t s = 1; s <= 4; ++s) {
        records.push_back(rec("mert", e, TaskId::TopLeft, s, mert_tl[s - 1]));
        records.push_back(rec("mert", e, TaskId::Center, s, mert_ce[s - 1]));
        records.push_back(rec("seril", e, TaskId::TopLeft, s, seril_tl[s - 1]));
    }

    const bool degenerate = write_summary_csv(p, records, 1.0);
    CHECK_FALSE(degenerate);

    const auto lines = split_lines(slurp_text(p));
    REQUIRE(lines.size() == 6);
    CHECK(lines[0] == "regime,task,n,mean,stddev,adequacy_rate,p_vs_mert,p_vs_seril");

    const auto row = [&](size_t i) { return split_csv(lines[i]); };
    for (size_t i = 1; i < lines.size(); ++i) REQUIRE(row(i).size() == 8);

    // Pooled "all" row first, then the present tasks in id order.
    CHECK(row(1)[0] == "mert");
    CHECK(row(1)[1] == "all");
    CHECK(row(1)[2] == "8");
    CHECK(row(2)[1] == "TopLeft");
    CHECK(row(3)[1] == "Center");
    CHECK(row(4)[0] == "seril");
    CHECK(row(4)[1] == "all");
    CHECK(row(4)[2] == "4");
    CHECK(row(5)[1] == "TopLeft");

    // Mean / stddev / adequacy agree with the summary helpers.
    std::vector<EvalRecord> mine;
    for (const EvalRecord& r : records)
        if (r.regime == "mert") mine.push_back(r);
    const stats::Summary s = summarize_errors(mine);
    CHECK(row(1)[3] == fmt6(s.mean));
    CHECK(row(1)[4] == fmt6(s.stddev));
    CHECK(row(1)[5] == fmt6(adequacy_rate(mine, 1.0)));  // 5 of 8 strictly below 1

    // Self-comparison columns are blank; cross columns carry the paired p.
    CHECK(row(1)[6].empty());
    CHECK(row(4)[7].empty());
    std::vector<EvalRecord> mert_tl_recs, seril_tl_recs;
    for (const EvalRecord& r : records) {
        if (r.regime == "mert" && r.task == TaskId::TopLeft) mert_tl_recs.push_back(r);
        if (r.regime == "seril") seril_tl_recs.push_back(r);
    }
    const std::string p_tl = fmt6(paired_model_ttest(mert_tl_recs, seril_tl_recs).p);
    CHECK(row(2)[7] == p_tl);
    CHECK(row(5)[6] == p_tl);  // two-sided p is symmetric under side swap
    // The pooled row pairs on the same common keys (seril has no Center rows).
    CHECK(row(1)[7] == p_tl);
    // mert's Center block has no counterpart to compare against.
    CHECK(row(3)[7].empty());

    // Byte determinism.
    const auto p2 = dir.path() / "summary2.csv";
    write_summary_csv(p2, records, 1.0);
    CHECK(slurp_text(p) == slurp_text(p2));

    // Zero-variance differences flip the degenerate flag on the way out.
    std::vector<EvalRecord> flat;
    for (uint64_t s = 1; s <= 3; ++s) {
        flat.push_back(rec("mert", e, TaskId::TopLeft, s, 1.0));
        flat.push_back(rec("seril", e, TaskId::TopLeft, s, 1.0));
    }
    CHECK(write_summary_csv(p2, flat, 1.0));
}

TEST_CASE("report charts emit deterministic, self-contained SVG") {
    testutil::TempDir dir;

    const std::vector<svg::BarGroup> groups = {
        {"TopLeft", {{"mert", 1.0, 0.2}, {"seril", 1.4, 0.0}}},
        {"Center", {{"mert", 0.6, 0.1}, {"seril", 0.9, 0.3}}},
    };
    const auto b1 = dir.path() / "bars.svg";
    const auto b2 = dir.path() / "bars2.svg";
    svg::write_bar_chart(b1, "Terminal error by task", "voxels", groups);
    svg::write_bar_chart(b2, "Terminal error by task", "voxels", groups);
    const std::string bars = slurp_text(b1);
    CHECK(bars == slurp_text(b2));
    CHECK(bars.rfind("<svg ", 0) == 0);
    CHECK(bars.substr(bars.size() - 7) == "</svg>\n");
    CHECK(count_occurrences(bars, "Terminal error by task") == 1);
    CHECK(count_occurrences(bars, "mert") == 1);   // legend entry
    CHECK(count_occurrences(bars, "TopLeft") == 1);  // group label
    // 1 background + 4 bars + 2 legend swatches.
    CHECK(count_occurrences(bars, "<rect") == 7);

    CHECK_THROWS_AS(svg::write_bar_chart(b1, "t", "y", {}), ConfigError);
    CHECK_THROWS_AS(svg::write_bar_chart(b1, "t", "y", {{"empty", {}}}), ConfigError);

    const auto h1 = dir.path() / "heat.svg";
    const auto h2 = dir.path() / "heat2.svg";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::vector<std::string> row_labels = {"after E1", "after E2"};
    const std::vector<std::string> col_labels = {"E1", "E2"};
    const std::vector<std::vector<double>> cells = {{1.5, nan}, {1.2, 0.8}};
    svg::write_heatmap(h1, "Forgetting", row_labels, col_labels, cells);
    svg::write_heatmap(h2, "Forgetting", row_labels, col_labels, cells);
    const std::string heat = slurp_text(h1);
    CHECK(heat == slurp_text(h2));
    CHECK(heat.rfind("<svg ", 0) == 0);
    CHECK(heat.substr(heat.size() - 7) == "</svg>\n");
    // The unmeasured cell renders as a dash, and the legend explains it.
    CHECK(count_occurrences(heat, ">-</text>") == 1);
    CHECK(count_occurrences(heat, "not measured") == 1);

    CHECK_THROWS_AS(svg::write_heatmap(h1, "t", row_labels, col_labels, {{1.0}, {1.0, 2.0}}),
                    ConfigError);
}
