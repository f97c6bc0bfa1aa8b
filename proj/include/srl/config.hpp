#pragma once

// Plain-text run configuration: "[section]" headers with "key = value" lines.
// Every key has a default, so an empty file (or no file) is a valid config;
// unknown sections or keys are rejected. dump_config emits the effective
// configuration in a form that re-parses to the identical config.

#include <filesystem>
#include <string>
#include <vector>

#include "srl/evalmod.hpp"
#include "srl/replay.hpp"
#include "srl/trainer.hpp"
#include "srl/volume.hpp"

namespace srl {

struct RunConfig {
    Geometry geometry;      // [geometry]
    TrainConfig training;   // [training] (+ train_seed from [experiment])
    ReplayConfig replay;    // [replay]
    EvalConfig eval;        // [eval]    (+ eval_seed from [experiment])

    // [experiment]
    Regime regime = Regime::Single;
    std::vector<std::string> env_order;  // env names; empty = all 24, default order
    uint64_t gen_seed = 0;

    void validate() const;  // throws ConfigError
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);  // missing file -> ConfigError
std::string dump_config(const RunConfig& cfg);

// The environment list this config trains/evaluates over: the named
// environments (seeded with gen_seed), or all 24 in default order when
// env_order is empty. Unknown or duplicate names are config errors.
std::vector<EnvironmentSpec> resolve_env_order(const RunConfig& cfg);

}  // namespace srl
