#pragma once

// Training regimes over the landmark-localization environments:
//
//   single  -- one agent per environment, trained on that environment only.
//   multi   -- one agent trained on all environments simultaneously
//              (episodes drawn uniformly over (environment, task) pairs).
//   lifelong -- one agent trained on the environments sequentially; after
//              each environment its transitions are distilled into a
//              fixed-budget long-term store, and every later batch mixes
//              fresh experience with samples from that store.
//
// All regimes share the step loop: one optimizer update per step, one new
// episode collected every four updates, epsilon-greedy collection with a
// linear epsilon decay, a frozen bootstrap-target copy refreshed on a fixed
// interval, and a checkpoint written after every epoch.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "srl/common.hpp"
#include "srl/mdp.hpp"
#include "srl/network.hpp"
#include "srl/replay.hpp"
#include "srl/volume.hpp"

namespace srl {

enum class Regime : uint8_t { Single = 0, Multi = 1, Lifelong = 2 };

std::string to_string(Regime r);  // "sert" / "mert" / "seril"
std::optional<Regime> parse_regime(const std::string& s);

// One optimizer update per step; a fresh episode every this-many steps.
inline constexpr int kStepsPerEpisode = 4;

struct TrainConfig {
    size_t batch_size = 48;
    int epochs_single = 4;        // per model (and per environment, lifelong)
    int epochs_multi = 20;
    int steps_per_epoch = 2000;   // optimizer updates per epoch
    double gamma = 0.9;
    double lr = 1e-3;
    double epsilon_start = 1.0;
    double epsilon_end = 0.1;
    int64_t epsilon_decay_steps = 0;  // 0 = auto: half the schedule's span
    int max_episode_steps = 200;
    int target_sync_interval = 500;   // optimizer steps between target copies
    uint64_t seed = 0;

    void validate() const;  // throws ConfigError

    int epochs_for(Regime r) const {
        return r == Regime::Multi ? epochs_multi : epochs_single;
    }
};

// Linear decay from epsilon_start to epsilon_end over decay_steps optimizer
// steps (then flat). schedule_span is the total planned step count of the
// schedule (per environment in the lifelong regime) and supplies the default
// decay horizon when cfg.epsilon_decay_steps == 0.
double epsilon_at(int64_t steps_done, int64_t schedule_span, const TrainConfig& cfg);

// A loaded environment: immutable volume plus its landmark set.
struct EnvData {
    EnvironmentSpec spec;
    Volume volume;
    LandmarkSet landmarks;
};

struct EpochLog {
    int epoch = 0;             // 1-based, global across a run
    int64_t step = 0;          // optimizer steps completed at epoch end
    double mean_loss = 0.0;    // mean over the epoch's updates
    double mean_reward = 0.0;  // mean episode reward over the epoch's episodes
    double epsilon = 0.0;      // schedule value at epoch end
    int episodes = 0;
};

// Everything needed to find and re-evaluate a finished run.
struct RegimeRun {
    Regime regime = Regime::Single;
    uint64_t seed = 0;
    std::vector<EnvironmentSpec> envs;       // training order
    std::vector<std::string> checkpoints;    // one per epoch, in order
    std::vector<std::string> env_checkpoints;  // lifelong: state after each env
    std::string final_checkpoint;
    std::string store_path;                  // lifelong: saved long-term store
    std::vector<EpochLog> logs;
};

// Manifest JSON round-trip. Paths inside the manifest are relative to its
// own directory; load resolves them back to absolute form.
void save_run_manifest(const std::filesystem::path& path, const RegimeRun& run);
RegimeRun load_run_manifest(const std::filesystem::path& path);

// Runs one regime over `envs` (a single-element span for the single-task
// regime), writing checkpoints, the manifest (<prefix>.run.json), and -- for
// the lifelong regime -- the long-term store under out_dir. Progress lines
// "epoch,step,loss,mean_reward,epsilon" go to `progress` after each epoch.
// Divergence aborts with DivergenceError naming the optimizer step.
RegimeRun train_regime(Regime regime, const std::vector<EnvData>& envs, const TrainConfig& cfg,
                       const ReplayConfig& replay, const Geometry& geo,
                       const std::filesystem::path& out_dir, const std::string& prefix,
                       std::ostream* progress);

// Greedy action for one state: argmax of the head's Q-values, lowest action
// index on ties. Exposed for evaluation and tests.
Action greedy_action(const QNetwork<float>& net, const Volume& v, const AgentState& s,
                     TaskId task, const Geometry& geo, Workspace<float>& ws,
                     std::vector<float>& scratch);

}  // namespace srl
