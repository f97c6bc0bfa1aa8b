#include "srl/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "srl/io_util.hpp"

namespace srl {

namespace {

using nlohmann::json;

// Fixed derivation keys so every random stream is a pure function of the
// run seed, independent of consumption order elsewhere.
constexpr uint64_t kEpisodeStream = 1;
constexpr uint64_t kScheduleStream = 2;
constexpr uint64_t kBatchStream = 3;
constexpr uint64_t kIngestStream = 4;
constexpr uint64_t kTrunkInit = 10;
constexpr uint64_t kHeadInitBase = 20;

std::string zero_pad(int value, int width) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%0*d", width, value);
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::string to_string(Regime r) {
    switch (r) {
        case Regime::Single: return "sert";
        case Regime::Multi: return "mert";
        case Regime::Lifelong: return "seril";
    }
    throw ConfigError("invalid regime value");
}

std::optional<Regime> parse_regime(const std::string& s) {
    if (s == "sert") return Regime::Single;
    if (s == "mert") return Regime::Multi;
    if (s == "seril") return Regime::Lifelong;
    return std::nullopt;
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (epochs_single < 1) throw ConfigError("epochs_single must be at least 1");
    if (epochs_multi < 1) throw ConfigError("epochs_multi must be at least 1");
    if (steps_per_epoch < 1) throw ConfigError("steps_per_epoch must be at least 1");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive and finite");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0))
        throw ConfigError("epsilon_start must lie in [0, 1]");
    if (!(epsilon_end >= 0.0 && epsilon_end <= 1.0))
        throw ConfigError("epsilon_end must lie in [0, 1]");
    if (epsilon_end > epsilon_start)
        throw ConfigError("epsilon_end must not exceed epsilon_start");
    if (epsilon_decay_steps < 0) throw ConfigError("epsilon_decay_steps must be >= 0");
    if (max_episode_steps < 1) throw ConfigError("max_episode_steps must be at least 1");
    if (target_sync_interval < 1) throw ConfigError("target_sync_interval must be at least 1");
}

double epsilon_at(int64_t steps_done, int64_t schedule_span, const TrainConfig& cfg) {
    int64_t decay = cfg.epsilon_decay_steps;
    if (decay == 0) decay = std::max<int64_t>(1, schedule_span / 2);
    const double frac =
        std::min(1.0, static_cast<double>(std::max<int64_t>(0, steps_done)) /
                          static_cast<double>(decay));
    return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
}

Action greedy_action(const QNetwork<float>& net, const Volume& v, const AgentState& s,
                     TaskId task, const Geometry& geo, Workspace<float>& ws,
                     std::vector<float>& scratch) {
    scratch.resize(net.arch.input_size());
    fill_state_tensor(v, s, geo, scratch.data());
    const auto q = qvalues(net, scratch.data(), task, ws);
    int best = 0;
    for (int a = 1; a < kNumActions; ++a)
        if (q[a] > q[best]) best = a;
    return static_cast<Action>(best);
}

namespace {

// Mutable state of one training run; the regime drivers below differ only in
// how they schedule environments and when they touch the long-term store.
struct Session {
    const std::vector<EnvData>& envs;
    const TrainConfig& cfg;
    const ReplayConfig& rcfg;
    const Geometry& geo;

    QNetwork<float> net;
    QNetwork<float> target;
    Adam<float> adam;
    Grads<float> grads;
    Workspace<float> ws;

    std::vector<RingBuffer> rings;                      // one per task
    LongTermStore store;                                // lifelong only
    std::vector<std::vector<Transition>> env_log;       // per task, lifelong only

    Rng episode_rng, schedule_rng, batch_rng, ingest_rng;

    int64_t global_step = 0;     // optimizer steps across the whole run
    int64_t schedule_step = 0;   // steps within the current epsilon schedule
    int64_t schedule_span = 0;   // planned steps of the current schedule
    int64_t episode_count = 0;   // episodes collected across the whole run
    bool lifelong = false;

    // Per-epoch accumulators.
    double loss_sum = 0.0;
    double reward_sum = 0.0;
    int episodes_in_epoch = 0;

    std::vector<float> pick_scratch;
    std::vector<float> batch_s, batch_n;
    std::vector<BatchItem<float>> items;

    Session(const std::vector<EnvData>& envs_in, const TrainConfig& c, const ReplayConfig& rc,
            const Geometry& g)
        : envs(envs_in),
          cfg(c),
          rcfg(rc),
          geo(g),
          net(NetworkArch::for_geometry(g), Rng(c.seed).fork(kTrunkInit).next_u64()),
          target(net),
          adam(c.lr),
          store(rc.strategy, rc.longterm_budget),
          episode_rng(Rng(c.seed).fork(kEpisodeStream)),
          schedule_rng(Rng(c.seed).fork(kScheduleStream)),
          batch_rng(Rng(c.seed).fork(kBatchStream)),
          ingest_rng(Rng(c.seed).fork(kIngestStream)) {
        for (int t = 0; t < kNumTasks; ++t) {
            net.add_head(static_cast<TaskId>(t),
                         Rng(c.seed).fork(kHeadInitBase + static_cast<uint64_t>(t)).next_u64());
            rings.emplace_back(rc.ring_capacity);
        }
        target = sync_target(net);
        ws.resize(net.arch);
        env_log.resize(kNumTasks);
    }

    double current_epsilon() const { return epsilon_at(schedule_step, schedule_span, cfg); }

    void collect_episode(size_t env_idx, TaskId task) {
        const EnvData& e = envs[env_idx];
        const double eps = current_epsilon();
        auto pick = [this, task](const Volume& v, const AgentState& s) {
            return greedy_action(net, v, s, task, geo, ws, pick_scratch);
        };
        EpisodeResult ep =
            run_episode_with(e.volume, e.landmarks, task, geo, eps, cfg.max_episode_steps,
                             /*training=*/true, episode_rng, pick, static_cast<uint8_t>(env_idx));
        for (const Transition& t : ep.transitions) {
            rings[static_cast<int>(task)].push(t);
            if (lifelong) env_log[static_cast<int>(task)].push_back(t);
        }
        reward_sum += ep.total_reward;
        ++episodes_in_epoch;
        ++episode_count;
    }

    // Uniform (environment, task) draw for the simultaneous regime;
    // round-robin task on the run's own environment otherwise.
    void collect_scheduled(bool multi, size_t fixed_env) {
        if (multi) {
            const size_t env_idx = schedule_rng.below(envs.size());
            const TaskId task = static_cast<TaskId>(schedule_rng.below(kNumTasks));
            collect_episode(env_idx, task);
        } else {
            collect_episode(fixed_env, static_cast<TaskId>(episode_count % kNumTasks));
        }
    }

    void materialize(const std::vector<Transition>& batch) {
        const size_t in_sz = net.arch.input_size();
        batch_s.resize(batch.size() * in_sz);
        batch_n.resize(batch.size() * in_sz);
        items.clear();
        for (size_t i = 0; i < batch.size(); ++i) {
            const Transition& t = batch[i];
            const Volume& v = envs[t.env_idx].volume;
            float* ps = batch_s.data() + i * in_sz;
            fill_state_tensor(v, t.s, geo, ps);
            BatchItem<float> it;
            it.s = ps;
            it.a = t.a;
            it.r = t.r;
            it.done = t.done;
            it.task = t.task;
            if (!t.done) {
                const AgentState ns = t.next_state(geo);
                float* pn = batch_n.data() + i * in_sz;
                fill_state_tensor(v, ns, geo, pn);
                it.s_next = pn;
            }
            items.push_back(it);
        }
    }

    // One optimizer update: pick the round-robin task buffer, sample a batch
    // (mixing in long-term store samples for the lifelong regime), update.
    void optimizer_step() {
        const int task = static_cast<int>(global_step % kNumTasks);
        std::vector<Transition> batch;
        if (lifelong) {
            MixSpec mix{cfg.batch_size, rcfg.current_fraction};
            batch = mixed_sample(rings[task], store, mix, batch_rng);
        } else {
            batch = rings[task].sample(cfg.batch_size, batch_rng);
        }
        materialize(batch);
        const double loss = dqn_loss_and_grad(net, target, items, cfg.gamma, grads, ws);
        try {
            adam.step(net, grads);
        } catch (const DivergenceError& e) {
            throw DivergenceError("optimizer step " + std::to_string(global_step + 1) + ": " +
                                  e.what());
        }
        ++global_step;
        ++schedule_step;
        if (global_step % cfg.target_sync_interval == 0) target = sync_target(net);
        loss_sum += loss;
    }
};

}  // namespace

RegimeRun train_regime(Regime regime, const std::vector<EnvData>& envs, const TrainConfig& cfg,
                       const ReplayConfig& rcfg, const Geometry& geo,
                       const std::filesystem::path& out_dir, const std::string& prefix,
                       std::ostream* progress) {
    cfg.validate();
    rcfg.validate();
    geo.validate();
    if (envs.empty()) throw ConfigError("training requires at least one environment");
    if (regime == Regime::Single && envs.size() != 1)
        throw ConfigError("single-environment regime takes exactly one environment");

    std::filesystem::create_directories(out_dir);

    Session s(envs, cfg, rcfg, geo);
    s.lifelong = (regime == Regime::Lifelong);

    RegimeRun run;
    run.regime = regime;
    run.seed = cfg.seed;
    for (const EnvData& e : envs) run.envs.push_back(e.spec);

    const int epochs_per_phase = cfg.epochs_for(regime);
    const size_t phases = (regime == Regime::Lifelong) ? envs.size() : 1;
    const int total_epochs = static_cast<int>(phases) * epochs_per_phase;
    const int epoch_width = total_epochs >= 100 ? 3 : 2;

    if (progress) (*progress) << "epoch,step,loss,mean_reward,epsilon\n";

    int epoch_no = 0;
    for (size_t phase = 0; phase < phases; ++phase) {
        const bool multi = (regime == Regime::Multi);
        const size_t fixed_env = (regime == Regime::Lifelong) ? phase : 0;

        // Fresh exploration schedule per phase; one priming episode per task
        // guarantees every task buffer can serve a batch.
        s.schedule_step = 0;
        s.schedule_span = static_cast<int64_t>(epochs_per_phase) * cfg.steps_per_epoch;
        for (int t = 0; t < kNumTasks; ++t) {
            const size_t env_idx = multi ? s.schedule_rng.below(envs.size()) : fixed_env;
            s.collect_episode(env_idx, static_cast<TaskId>(t));
        }

        for (int e = 0; e < epochs_per_phase; ++e) {
            s.loss_sum = 0.0;
            // Episode stats accumulate across the epoch (the first epoch of a
            // phase also absorbs that phase's priming episodes).
            for (int step = 0; step < cfg.steps_per_epoch; ++step) {
                if (s.schedule_step % kStepsPerEpisode == 0) s.collect_scheduled(multi, fixed_env);
                s.optimizer_step();
            }
            ++epoch_no;

            EpochLog log;
            log.epoch = epoch_no;
            log.step = s.global_step;
            log.mean_loss = s.loss_sum / cfg.steps_per_epoch;
            log.mean_reward = s.episodes_in_epoch > 0
                                  ? s.reward_sum / s.episodes_in_epoch
                                  : 0.0;
            log.epsilon = s.current_epsilon();
            log.episodes = s.episodes_in_epoch;
            run.logs.push_back(log);
            s.reward_sum = 0.0;
            s.episodes_in_epoch = 0;

            const std::string ckpt_name =
                prefix + "-epoch" + zero_pad(epoch_no, epoch_width) + ".ckpt";
            save_checkpoint(out_dir / ckpt_name, s.net);
            run.checkpoints.push_back(ckpt_name);

            if (progress) {
                (*progress) << log.epoch << ',' << log.step << ',' << format_double(log.mean_loss)
                            << ',' << format_double(log.mean_reward) << ','
                            << format_double(log.epsilon) << '\n';
                progress->flush();
            }
        }

        if (regime == Regime::Lifelong) {
            // Distill this environment's full transition log into the
            // long-term store, then start the next environment fresh.
            for (int t = 0; t < kNumTasks; ++t) {
                StoreKey key{envs[phase].spec, static_cast<TaskId>(t)};
                s.store.ingest(key, s.env_log[t], s.ingest_rng);
                s.env_log[t].clear();
            }
            for (int t = 0; t < kNumTasks; ++t) s.rings[t] = RingBuffer(rcfg.ring_capacity);
            run.env_checkpoints.push_back(run.checkpoints.back());
        }
    }

    run.final_checkpoint = prefix + "-final.ckpt";
    save_checkpoint(out_dir / run.final_checkpoint, s.net);

    if (regime == Regime::Lifelong) {
        run.store_path = prefix + ".erb";
        save_store(out_dir / run.store_path, s.store);
    }

    save_run_manifest(out_dir / (prefix + ".run.json"), run);
    return run;
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

void save_run_manifest(const std::filesystem::path& path, const RegimeRun& run) {
    json envs = json::array();
    for (const EnvironmentSpec& e : run.envs)
        envs.push_back({{"name", env_name(e)}, {"seed", e.seed}});

    json logs = json::array();
    for (const EpochLog& l : run.logs)
        logs.push_back({{"epoch", l.epoch},
                        {"step", l.step},
                        {"mean_loss", l.mean_loss},
                        {"mean_reward", l.mean_reward},
                        {"epsilon", l.epsilon},
                        {"episodes", l.episodes}});

    json j{{"format", "srl-run"},
           {"version", 1},
           {"regime", to_string(run.regime)},
           {"seed", run.seed},
           {"environments", envs},
           {"checkpoints", run.checkpoints},
           {"env_checkpoints", run.env_checkpoints},
           {"final_checkpoint", run.final_checkpoint},
           {"store", run.store_path},
           {"epochs", logs}};

    io::atomic_write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

RegimeRun load_run_manifest(const std::filesystem::path& path) {
    const std::string text = io::read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ArtifactError("run manifest " + path.string() + " is not valid JSON: " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "srl-run" || j.at("version").get<int>() != 1)
            throw ArtifactError("run manifest " + path.string() + " has an unknown format tag");

        RegimeRun run;
        const auto regime = parse_regime(j.at("regime").get<std::string>());
        if (!regime) throw ArtifactError("run manifest names an unknown regime");
        run.regime = *regime;
        run.seed = j.at("seed").get<uint64_t>();
        for (const json& e : j.at("environments")) {
            const auto spec =
                parse_env_name(e.at("name").get<std::string>(), e.at("seed").get<uint64_t>());
            if (!spec) throw ArtifactError("run manifest names an unknown environment");
            run.envs.push_back(*spec);
        }
        const auto resolve = [&](const std::string& rel) {
            return (path.parent_path() / rel).string();
        };
        for (const json& c : j.at("checkpoints")) run.checkpoints.push_back(resolve(c));
        for (const json& c : j.at("env_checkpoints")) run.env_checkpoints.push_back(resolve(c));
        run.final_checkpoint = resolve(j.at("final_checkpoint").get<std::string>());
        const std::string store = j.at("store").get<std::string>();
        run.store_path = store.empty() ? "" : resolve(store);
        for (const json& l : j.at("epochs")) {
            EpochLog log;
            log.epoch = l.at("epoch").get<int>();
            log.step = l.at("step").get<int64_t>();
            log.mean_loss = l.at("mean_loss").get<double>();
            log.mean_reward = l.at("mean_reward").get<double>();
            log.epsilon = l.at("epsilon").get<double>();
            log.episodes = l.at("episodes").get<int>();
            run.logs.push_back(log);
        }
        return run;
    } catch (const json::exception& e) {
        throw ArtifactError("run manifest " + path.string() + " is malformed: " + e.what());
    }
}

}  // namespace srl
