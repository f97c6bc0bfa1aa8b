#pragma once

// Inference-time evaluation: greedy rollouts with a small exploration floor,
// Euclidean terminal error against the true landmark, adequacy-rate and
// mean/stddev summaries, paired t-tests between models, and the
// forgetting matrix for sequentially trained runs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "srl/common.hpp"
#include "srl/network.hpp"
#include "srl/stats.hpp"
#include "srl/trainer.hpp"
#include "srl/volume.hpp"

namespace srl {

struct EvalConfig {
    int episodes = 50;           // per (environment, task) pair
    double epsilon = 0.05;       // exploration floor (avoids face livelock)
    double threshold_scale = 1.0;
    int max_episode_steps = 200;
    uint64_t seed = 0;           // base episode seed; episode i uses seed + i
    int threads = 1;

    void validate() const;  // throws ConfigError
};

struct EvalRecord {
    std::string regime;  // model label used for grouping in reports
    EnvironmentSpec env;
    TaskId task = TaskId::TopLeft;
    uint64_t seed = 0;   // episode seed (the pairing key across models)
    double terminal_error = 0.0;
};

// Error cutoff for a "successful" localization: 15 voxels at the reference
// 240-voxel grid, scaled linearly by the volume's smallest dimension (then by
// the config's threshold_scale). Orientation permutes dims, so the minimum is
// permutation-invariant.
double adequacy_threshold(const Geometry& geo, double scale = 1.0);
inline bool adequate(double error, double threshold) { return error < threshold; }

// One evaluation episode: epsilon-greedy rollout without the early target
// stop, readout = most-revisited trail position, error = Euclidean distance
// to the landmark. Deterministic given (env, task, seed).
EvalRecord locate(const QNetwork<float>& net, const Volume& v, const LandmarkSet& lm, TaskId task,
                  uint64_t seed, const EvalConfig& cfg, const Geometry& geo,
                  const std::string& label, Workspace<float>& ws);

// Full grid: cfg.episodes rollouts per (environment, task), episode seeds
// cfg.seed .. cfg.seed + episodes - 1. Work may be split across threads;
// records are keyed and sorted, so the thread count never changes the result.
std::vector<EvalRecord> evaluate_model(const QNetwork<float>& net, const std::vector<EnvData>& envs,
                                       const EvalConfig& cfg, const Geometry& geo,
                                       const std::string& label);

// Stable order used everywhere records are written or aggregated.
void sort_records(std::vector<EvalRecord>& records);

stats::Summary summarize_errors(const std::vector<EvalRecord>& records);
double adequacy_rate(const std::vector<EvalRecord>& records, double threshold);

// Paired t-test between two models' records. Rows are matched on
// (environment, task, seed); keys present in only one side are dropped, and
// duplicate rows per key (e.g. several single-environment models pooled under
// one label) are collapsed to their mean before pairing.
stats::TTestResult paired_model_ttest(const std::vector<EvalRecord>& a,
                                      const std::vector<EvalRecord>& b, double alpha = 0.05);

// ---------------------------------------------------------------------------
// Forgetting matrix
// ---------------------------------------------------------------------------

struct ForgettingMatrix {
    // f[i][j] = mean terminal error on environment j, evaluated at the
    // checkpoint taken right after finishing environment i. Entries with
    // j > i (environments not yet seen) are NaN.
    std::vector<std::vector<double>> f;
    // Backward transfer: mean over j < last of f[j][j] - f[last][j].
    // Positive means retention improved after later environments.
    double bt = 0.0;
    bool bt_defined = false;  // false for single-environment sequences
};

// Evaluates each per-environment checkpoint of a sequential run on every
// previously seen environment. `envs` must match the run's environment list.
ForgettingMatrix forgetting_matrix(const RegimeRun& run, const std::vector<EnvData>& envs,
                                   const EvalConfig& cfg, const Geometry& geo);

// ---------------------------------------------------------------------------
// Metrics CSV
// ---------------------------------------------------------------------------
// Header: regime,sequence,pathology,orientation,task,seed,terminal_error
// Errors are written with six decimals; rows follow sort_records order.

void write_records_csv(const std::filesystem::path& path, std::vector<EvalRecord> records);
std::vector<EvalRecord> read_records_csv(const std::filesystem::path& path);

// Summary table (one row per regime x task plus a pooled "all" row per
// regime): n, mean, stddev, adequacy rate, and a paired p-value column
// against every other regime label present. Returns true when any t-test was
// degenerate (callers surface that as a warning-level exit status).
bool write_summary_csv(const std::filesystem::path& path, const std::vector<EvalRecord>& records,
                       double threshold);

}  // namespace srl
