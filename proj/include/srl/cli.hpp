#pragma once

// Command implementations behind the CLI verbs, plus the argument-parsing
// entry point. Each command returns a process exit status:
//   0  success
//   2  configuration / usage error
//   3  missing or malformed artifact (volume, checkpoint, store)
//   4  training divergence (non-finite gradients)
//   5  a statistical test had degenerate input (outputs are still written)

#include <filesystem>
#include <string>
#include <vector>

#include "srl/config.hpp"

namespace srl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitArtifact = 3;
inline constexpr int kExitDivergence = 4;
inline constexpr int kExitDegenerateStats = 5;

// Loads `<env-name>.vol` for each spec from dir, verifying each file holds
// the environment it is named for.
std::vector<EnvData> load_env_set(const std::filesystem::path& dir,
                                  const std::vector<EnvironmentSpec>& specs);

// One volume file per configured environment plus gen-manifest.json.
int cmd_gen(const RunConfig& cfg, const std::filesystem::path& out_dir);

// Trains cfg.regime over the configured environments. For the
// single-environment regime, `env_filter` picks one environment by name, or
// `all_single` trains one model per environment.
int cmd_train(const RunConfig& cfg, const std::filesystem::path& envs_dir,
              const std::filesystem::path& out_dir, const std::string& env_filter,
              bool all_single);

// Evaluates a checkpoint over the configured environments; writes the
// metrics CSV to `out` (taken as a file when it ends in .csv, otherwise as a
// directory receiving <label>.csv).
int cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint,
             const std::filesystem::path& envs_dir, const std::filesystem::path& out,
             const std::string& label);

// Summary table and charts from one or more metrics CSVs; with a sequential
// run manifest (and its environments), also the forgetting-matrix heat map.
int cmd_report(const RunConfig& cfg, const std::vector<std::filesystem::path>& csv_paths,
               const std::filesystem::path& out_dir,
               const std::filesystem::path& seril_manifest,
               const std::filesystem::path& envs_dir);

// Full CLI: parses argv, loads the config, dispatches, maps exceptions to
// the exit statuses above.
int run_cli(int argc, char** argv);

}  // namespace srl
