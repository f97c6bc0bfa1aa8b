#include "srl/cli.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "srl/evalmod.hpp"
#include "srl/io_util.hpp"
#include "srl/svg.hpp"

namespace srl {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string vol_filename(const EnvironmentSpec& spec) { return env_name(spec) + ".vol"; }

// Per-model training seed for the single-environment sweep: derived from the
// run seed and the environment's identity (not its list position), so
// training one environment alone or as part of --all gives the same model.
uint64_t single_model_seed(uint64_t base, const EnvironmentSpec& spec) {
    const uint64_t key = (static_cast<uint64_t>(spec.sequence) * 2 +
                          static_cast<uint64_t>(spec.pathology)) *
                             3 +
                         static_cast<uint64_t>(spec.orientation);
    return Rng(base).fork(1000 + key).next_u64();
}

}  // namespace

std::vector<EnvData> load_env_set(const fs::path& dir, const std::vector<EnvironmentSpec>& specs) {
    std::vector<EnvData> out;
    out.reserve(specs.size());
    for (const EnvironmentSpec& spec : specs) {
        const fs::path path = dir / vol_filename(spec);
        auto [vol, lm] = load_volume(path);
        if (vol.spec.sequence != spec.sequence || vol.spec.pathology != spec.pathology ||
            vol.spec.orientation != spec.orientation)
            throw ArtifactError("volume file " + path.string() +
                                " holds a different environment than its name");
        EnvData e;
        e.spec = vol.spec;  // trust the file's seed; names carry no seed
        e.landmarks = lm;
        e.volume = std::move(vol);
        out.push_back(std::move(e));
    }
    return out;
}

int cmd_gen(const RunConfig& cfg, const fs::path& out_dir) {
    const std::vector<EnvironmentSpec> specs = resolve_env_order(cfg);
    fs::create_directories(out_dir);

    json files = json::array();
    for (const EnvironmentSpec& spec : specs) {
        const auto [vol, lm] = generate_environment(spec, cfg.geometry);
        const std::string name = vol_filename(spec);
        save_volume(out_dir / name, vol, lm);

        json landmarks;
        for (int t = 0; t < kNumTasks; ++t) {
            const Coord& c = lm[t];
            landmarks[to_string(static_cast<TaskId>(t))] = {c.x, c.y, c.z};
        }
        files.push_back({{"name", env_name(spec)},
                         {"file", name},
                         {"seed", spec.seed},
                         {"landmarks", landmarks}});
    }

    const json manifest{{"format", "srl-gen"},
                        {"version", 1},
                        {"gen_seed", cfg.gen_seed},
                        {"volumes", files}};
    io::atomic_write_file(out_dir / "gen-manifest.json",
                          [&](std::ostream& os) { os << manifest.dump(2) << '\n'; });
    std::cout << "wrote " << specs.size() << " volumes to " << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_train(const RunConfig& cfg, const fs::path& envs_dir, const fs::path& out_dir,
              const std::string& env_filter, bool all_single) {
    const std::vector<EnvironmentSpec> specs = resolve_env_order(cfg);

    if (cfg.regime == Regime::Single) {
        std::vector<EnvironmentSpec> targets;
        if (all_single) {
            targets = specs;
        } else {
            if (env_filter.empty())
                throw ConfigError("single-environment training needs --env NAME or --all");
            bool found = false;
            for (const EnvironmentSpec& s : specs) {
                if (env_name(s) == env_filter) {
                    targets.push_back(s);
                    found = true;
                    break;
                }
            }
            if (!found)
                throw ConfigError("--env '" + env_filter +
                                  "' is not in this config's environment list");
        }
        for (const EnvironmentSpec& spec : targets) {
            std::vector<EnvData> env = load_env_set(envs_dir, {spec});
            TrainConfig tc = cfg.training;
            tc.seed = single_model_seed(cfg.training.seed, spec);
            train_regime(Regime::Single, env, tc, cfg.replay, cfg.geometry, out_dir,
                         "sert-" + env_name(spec), &std::cout);
        }
        return kExitOk;
    }

    if (!env_filter.empty() || all_single)
        throw ConfigError("--env/--all apply only to the single-environment regime");
    const std::vector<EnvData> envs = load_env_set(envs_dir, specs);
    train_regime(cfg.regime, envs, cfg.training, cfg.replay, cfg.geometry, out_dir,
                 to_string(cfg.regime), &std::cout);
    return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& envs_dir,
             const fs::path& out, const std::string& label) {
    const std::vector<EnvironmentSpec> specs = resolve_env_order(cfg);
    const std::vector<EnvData> envs = load_env_set(envs_dir, specs);
    const QNetwork<float> net = load_checkpoint(checkpoint);
    if (!(net.arch == NetworkArch::for_geometry(cfg.geometry)))
        throw ConfigError("checkpoint " + checkpoint.string() +
                          " was trained for a different geometry than configured");

    const std::vector<EvalRecord> records =
        evaluate_model(net, envs, cfg.eval, cfg.geometry, label);

    fs::path csv = out;
    if (csv.extension() != ".csv") {
        fs::create_directories(csv);
        csv /= label + ".csv";
    } else if (csv.has_parent_path()) {
        fs::create_directories(csv.parent_path());
    }
    write_records_csv(csv, records);
    std::cout << "wrote " << records.size() << " records to " << csv.string() << "\n";
    return kExitOk;
}

int cmd_report(const RunConfig& cfg, const std::vector<fs::path>& csv_paths,
               const fs::path& out_dir, const fs::path& seril_manifest, const fs::path& envs_dir) {
    if (csv_paths.empty()) throw ConfigError("report needs at least one metrics CSV");
    std::vector<EvalRecord> records;
    for (const fs::path& p : csv_paths) {
        std::vector<EvalRecord> part = read_records_csv(p);
        records.insert(records.end(), part.begin(), part.end());
    }
    if (records.empty()) throw ConfigError("metrics CSVs contain no records");
    sort_records(records);

    fs::create_directories(out_dir);
    const double threshold = adequacy_threshold(cfg.geometry, cfg.eval.threshold_scale);
    const bool degenerate = write_summary_csv(out_dir / "summary.csv", records, threshold);

    // Distinct model labels, in sorted order.
    std::vector<std::string> labels;
    for (const EvalRecord& r : records)
        if (std::find(labels.begin(), labels.end(), r.regime) == labels.end())
            labels.push_back(r.regime);
    std::sort(labels.begin(), labels.end());
    if (labels.size() < 2)
        std::cerr << "warning: only one model label present; no pairwise t-tests\n";

    const auto stats_for = [&](const std::string& label, int task) {
        std::vector<EvalRecord> sel;
        for (const EvalRecord& r : records)
            if (r.regime == label && (task < 0 || static_cast<int>(r.task) == task))
                sel.push_back(r);
        return summarize_errors(sel);
    };

    // Pooled per-model bars.
    {
        svg::BarGroup group;
        group.label = "all environments, all tasks";
        for (const std::string& label : labels) {
            const stats::Summary s = stats_for(label, -1);
            group.bars.push_back({label, s.mean, s.stddev});
        }
        svg::write_bar_chart(out_dir / "error-by-model.svg", "Mean terminal error by model",
                             "terminal error (voxels)", {group});
    }

    // Per-task grouped bars.
    {
        std::vector<svg::BarGroup> groups;
        for (int t = 0; t < kNumTasks; ++t) {
            svg::BarGroup group;
            group.label = to_string(static_cast<TaskId>(t));
            for (const std::string& label : labels) {
                const stats::Summary s = stats_for(label, t);
                if (s.n > 0) group.bars.push_back({label, s.mean, s.stddev});
            }
            if (!group.bars.empty()) groups.push_back(std::move(group));
        }
        svg::write_bar_chart(out_dir / "error-by-task.svg", "Mean terminal error by task",
                             "terminal error (voxels)", groups);
    }

    if (!seril_manifest.empty()) {
        if (envs_dir.empty())
            throw ConfigError("--seril-manifest needs --envs DIR to rebuild its environments");
        const RegimeRun run = load_run_manifest(seril_manifest);
        if (run.regime != Regime::Lifelong)
            throw ConfigError("forgetting matrix needs a sequential (lifelong) run manifest");
        const std::vector<EnvData> envs = load_env_set(envs_dir, run.envs);
        const ForgettingMatrix fm = forgetting_matrix(run, envs, cfg.eval, cfg.geometry);

        std::vector<std::string> rows, cols;
        for (const EnvironmentSpec& e : run.envs) {
            rows.push_back("after " + env_name(e));
            cols.push_back(env_name(e));
        }
        char title[128];
        if (fm.bt_defined)
            std::snprintf(title, sizeof title,
                          "Mean terminal error per environment (backward transfer %+.3f)", fm.bt);
        else
            std::snprintf(title, sizeof title, "Mean terminal error per environment");
        svg::write_heatmap(out_dir / "forgetting.svg", title, rows, cols, fm.f);
    }

    std::cout << "report written to " << out_dir.string() << "\n";
    if (degenerate) {
        std::cerr << "warning: some t-tests had degenerate input (p reported as 1)\n";
        return kExitDegenerateStats;
    }
    return kExitOk;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Landmark-localization agents over procedural 3D volumes: "
                 "environment generation, training regimes, evaluation, reports."};
    app.require_subcommand(1);

    std::string config_path;
    uint64_t seed = 0;
    bool seed_given = false;
    std::string out;
    int threads = 1;
    app.add_option("--config", config_path, "Run configuration file");
    app.add_option("--seed", seed, "Override all seeds in [experiment]")
        ->each([&](const std::string&) { seed_given = true; });
    app.add_option("--out", out, "Output directory (eval: CSV path)");
    app.add_option("--threads", threads, "Worker threads for evaluation")
        ->check(CLI::PositiveNumber);

    CLI::App* gen = app.add_subcommand("gen", "Generate environment volumes");
    gen->fallthrough();

    CLI::App* train = app.add_subcommand("train", "Train a regime");
    train->fallthrough();
    std::string regime_name, env_filter, train_envs;
    bool all_single = false;
    train->add_option("--envs", train_envs, "Directory of .vol files")->required();
    train->add_option("--regime", regime_name, "sert | mert | seril (overrides config)");
    train->add_option("--env", env_filter, "Environment name (single-environment regime)");
    train->add_flag("--all", all_single, "Train one single-environment model per environment");

    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval_cmd->fallthrough();
    std::string ckpt_path, eval_envs, label = "model";
    eval_cmd->add_option("--ckpt", ckpt_path, "Checkpoint file")->required();
    eval_cmd->add_option("--envs", eval_envs, "Directory of .vol files")->required();
    eval_cmd->add_option("--label", label, "Model label for the CSV's regime column");

    CLI::App* report = app.add_subcommand("report", "Summaries and charts from metrics CSVs");
    report->fallthrough();
    std::vector<std::string> csvs;
    std::string seril_manifest, report_envs;
    report->add_option("csvs", csvs, "Metrics CSV files")->required();
    report->add_option("--seril-manifest", seril_manifest,
                       "Sequential run manifest for the forgetting matrix");
    report->add_option("--envs", report_envs, "Directory of .vol files (with --seril-manifest)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (seed_given) {
            cfg.gen_seed = seed;
            cfg.training.seed = seed;
            cfg.eval.seed = seed;
        }
        cfg.eval.threads = threads;

        const auto need_out = [&](const char* verb) {
            if (out.empty())
                throw ConfigError(std::string(verb) + " needs --out");
        };

        if (gen->parsed()) {
            need_out("gen");
            return cmd_gen(cfg, out);
        }
        if (train->parsed()) {
            need_out("train");
            if (!regime_name.empty()) {
                const auto r = parse_regime(regime_name);
                if (!r) throw ConfigError("unknown regime '" + regime_name + "'");
                cfg.regime = *r;
            }
            return cmd_train(cfg, train_envs, out, env_filter, all_single);
        }
        if (eval_cmd->parsed()) {
            need_out("eval");
            return cmd_eval(cfg, ckpt_path, eval_envs, out, label);
        }
        if (report->parsed()) {
            need_out("report");
            std::vector<std::filesystem::path> paths(csvs.begin(), csvs.end());
            return cmd_report(cfg, paths, out, seril_manifest, report_envs);
        }
        throw ConfigError("no command given");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ArtifactError& e) {
        std::cerr << "artifact error: " << e.what() << "\n";
        return kExitArtifact;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kExitDivergence;
    }
}

}  // namespace srl
