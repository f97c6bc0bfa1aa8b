#include "srl/evalmod.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "srl/io_util.hpp"
#include "srl/mdp.hpp"

namespace srl {

namespace {

// Episode streams are derived from the episode seed plus a key built from the
// environment's identity and the task, so the same (env, task, seed) triple
// replays identically for every model -- that is what makes t-tests pairable.
uint64_t pair_key(const EnvironmentSpec& env, TaskId task) {
    const uint64_t s = static_cast<uint64_t>(env.sequence);
    const uint64_t p = static_cast<uint64_t>(env.pathology);
    const uint64_t o = static_cast<uint64_t>(env.orientation);
    return ((s * 2 + p) * 3 + o) * kNumTasks + static_cast<uint64_t>(task);
}

std::string format_error(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

using RecordKey = std::tuple<uint32_t, uint8_t, uint64_t>;  // env-identity, task, seed

RecordKey record_key(const EvalRecord& r) {
    const uint32_t env_id = static_cast<uint32_t>(pair_key(r.env, TaskId::TopLeft));
    return {env_id, static_cast<uint8_t>(r.task), r.seed};
}

}  // namespace

void EvalConfig::validate() const {
    if (episodes < 1) throw ConfigError("eval episodes must be at least 1");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("eval epsilon must lie in [0, 1]");
    if (!(threshold_scale > 0.0)) throw ConfigError("threshold scale must be positive");
    if (max_episode_steps < 1) throw ConfigError("eval max_episode_steps must be at least 1");
    if (threads < 1) throw ConfigError("thread count must be at least 1");
}

double adequacy_threshold(const Geometry& geo, double scale) {
    const int32_t min_dim = std::min(geo.dx, std::min(geo.dy, geo.dz));
    return 15.0 * (static_cast<double>(min_dim) / 240.0) * scale;
}

EvalRecord locate(const QNetwork<float>& net, const Volume& v, const LandmarkSet& lm, TaskId task,
                  uint64_t seed, const EvalConfig& cfg, const Geometry& geo,
                  const std::string& label, Workspace<float>& ws) {
    net.head_index(task);  // missing head -> ConfigError before any rollout
    Rng rng = Rng(seed).fork(pair_key(v.spec, task));
    std::vector<float> scratch;
    auto pick = [&](const Volume& vol, const AgentState& s) {
        return greedy_action(net, vol, s, task, geo, ws, scratch);
    };
    EpisodeResult ep = run_episode_with(v, lm, task, geo, cfg.epsilon, cfg.max_episode_steps,
                                        /*training=*/false, rng, pick);
    EvalRecord r;
    r.regime = label;
    r.env = v.spec;
    r.task = task;
    r.seed = seed;
    r.terminal_error = euclidean(ep.terminal_position, landmark_of(lm, task));
    return r;
}

void sort_records(std::vector<EvalRecord>& records) {
    std::sort(records.begin(), records.end(), [](const EvalRecord& a, const EvalRecord& b) {
        if (a.regime != b.regime) return a.regime < b.regime;
        if (!(a.env.sort_key() == b.env.sort_key())) return a.env.sort_key() < b.env.sort_key();
        if (a.task != b.task) return a.task < b.task;
        return a.seed < b.seed;
    });
}

std::vector<EvalRecord> evaluate_model(const QNetwork<float>& net, const std::vector<EnvData>& envs,
                                       const EvalConfig& cfg, const Geometry& geo,
                                       const std::string& label) {
    cfg.validate();
    geo.validate();
    if (envs.empty()) throw ConfigError("evaluation requires at least one environment");
    // State tensors are sized by the geometry; a model built for a different
    // geometry would read them at the wrong shape.
    if (!(net.arch == NetworkArch::for_geometry(geo)))
        throw ConfigError("model architecture does not match the configured geometry");

    struct Cell {
        size_t env_idx;
        TaskId task;
    };
    std::vector<Cell> cells;
    for (size_t e = 0; e < envs.size(); ++e)
        for (int t = 0; t < kNumTasks; ++t) cells.push_back({e, static_cast<TaskId>(t)});

    std::vector<EvalRecord> records(cells.size() * static_cast<size_t>(cfg.episodes));
    const int threads = std::min<int>(cfg.threads, static_cast<int>(cells.size()));

    auto work = [&](size_t begin, size_t end) {
        Workspace<float> ws;
        ws.resize(net.arch);
        for (size_t c = begin; c < end; ++c) {
            const Cell& cell = cells[c];
            const EnvData& env = envs[cell.env_idx];
            for (int i = 0; i < cfg.episodes; ++i) {
                records[c * cfg.episodes + i] = locate(net, env.volume, env.landmarks, cell.task,
                                                       cfg.seed + static_cast<uint64_t>(i), cfg,
                                                       geo, label, ws);
            }
        }
    };

    if (threads <= 1) {
        work(0, cells.size());
    } else {
        std::vector<std::thread> pool;
        const size_t per = (cells.size() + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const size_t begin = static_cast<size_t>(t) * per;
            const size_t end = std::min(cells.size(), begin + per);
            if (begin >= end) break;
            pool.emplace_back(work, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    sort_records(records);
    return records;
}

stats::Summary summarize_errors(const std::vector<EvalRecord>& records) {
    std::vector<double> xs;
    xs.reserve(records.size());
    for (const EvalRecord& r : records) xs.push_back(r.terminal_error);
    return stats::summarize(xs);
}

double adequacy_rate(const std::vector<EvalRecord>& records, double threshold) {
    if (records.empty()) return 0.0;
    size_t ok = 0;
    for (const EvalRecord& r : records)
        if (adequate(r.terminal_error, threshold)) ++ok;
    return static_cast<double>(ok) / static_cast<double>(records.size());
}

stats::TTestResult paired_model_ttest(const std::vector<EvalRecord>& a,
                                      const std::vector<EvalRecord>& b, double alpha) {
    // Collapse each side to per-key means, then pair on the common keys.
    const auto collapse = [](const std::vector<EvalRecord>& rs) {
        std::map<RecordKey, std::pair<double, size_t>> acc;
        for (const EvalRecord& r : rs) {
            auto& slot = acc[record_key(r)];
            slot.first += r.terminal_error;
            slot.second += 1;
        }
        std::map<RecordKey, double> out;
        for (const auto& [k, v] : acc) out[k] = v.first / static_cast<double>(v.second);
        return out;
    };
    const auto ma = collapse(a);
    const auto mb = collapse(b);
    std::vector<double> xs, ys;
    for (const auto& [k, v] : ma) {
        const auto it = mb.find(k);
        if (it == mb.end()) continue;
        xs.push_back(v);
        ys.push_back(it->second);
    }
    return stats::paired_ttest(xs, ys, alpha);
}

// ---------------------------------------------------------------------------
// Forgetting matrix
// ---------------------------------------------------------------------------

ForgettingMatrix forgetting_matrix(const RegimeRun& run, const std::vector<EnvData>& envs,
                                   const EvalConfig& cfg, const Geometry& geo) {
    if (run.env_checkpoints.empty())
        throw ConfigError("forgetting matrix requires a run with per-environment checkpoints");
    if (run.env_checkpoints.size() != run.envs.size())
        throw ConfigError("run manifest has a checkpoint/environment count mismatch");
    if (envs.size() != run.envs.size())
        throw ConfigError("environment list does not match the run's environment count");
    for (size_t i = 0; i < envs.size(); ++i)
        if (!(envs[i].spec == run.envs[i]))
            throw ConfigError("environment list does not match the run's training order");

    const size_t n = envs.size();
    ForgettingMatrix out;
    out.f.assign(n, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));

    for (size_t i = 0; i < n; ++i) {
        const QNetwork<float> net = load_checkpoint(run.env_checkpoints[i]);
        if (!(net.arch == NetworkArch::for_geometry(geo)))
            throw ConfigError("checkpoint " + run.env_checkpoints[i] +
                              " was trained for a different geometry than configured");
        const std::vector<EnvData> seen(envs.begin(), envs.begin() + static_cast<long>(i) + 1);
        const std::vector<EvalRecord> records = evaluate_model(net, seen, cfg, geo, "ckpt");
        // Mean terminal error per environment over tasks x episodes.
        std::vector<double> sums(i + 1, 0.0);
        std::vector<size_t> counts(i + 1, 0);
        for (const EvalRecord& r : records) {
            for (size_t j = 0; j <= i; ++j) {
                if (envs[j].spec == r.env) {
                    sums[j] += r.terminal_error;
                    counts[j] += 1;
                    break;
                }
            }
        }
        for (size_t j = 0; j <= i; ++j)
            out.f[i][j] = counts[j] ? sums[j] / static_cast<double>(counts[j]) : 0.0;
    }

    if (n >= 2) {
        double acc = 0.0;
        for (size_t j = 0; j + 1 < n; ++j) acc += out.f[j][j] - out.f[n - 1][j];
        out.bt = acc / static_cast<double>(n - 1);
        out.bt_defined = true;
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV I/O
// ---------------------------------------------------------------------------

namespace {
constexpr const char* kRecordsHeader =
    "regime,sequence,pathology,orientation,task,seed,terminal_error";
}

void write_records_csv(const std::filesystem::path& path, std::vector<EvalRecord> records) {
    sort_records(records);
    io::atomic_write_file(path, [&](std::ostream& os) {
        os << kRecordsHeader << '\n';
        for (const EvalRecord& r : records) {
            os << r.regime << ',' << to_string(r.env.sequence) << ','
               << to_string(r.env.pathology) << ',' << to_string(r.env.orientation) << ','
               << to_string(r.task) << ',' << r.seed << ',' << format_error(r.terminal_error)
               << '\n';
        }
    });
}

std::vector<EvalRecord> read_records_csv(const std::filesystem::path& path) {
    const std::string text = io::read_file(path);
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != kRecordsHeader)
        throw ConfigError("metrics CSV " + path.string() + " has an unexpected header");

    std::vector<EvalRecord> out;
    size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(ch);
            }
        }
        fields.push_back(cur);
        const auto bad = [&](const std::string& why) {
            return ConfigError("metrics CSV " + path.string() + " line " +
                               std::to_string(line_no) + ": " + why);
        };
        if (fields.size() != 7) throw bad("expected 7 fields");
        EvalRecord r;
        r.regime = fields[0];
        const auto seq = parse_sequence(fields[1]);
        const auto pat = parse_pathology(fields[2]);
        const auto ori = parse_orientation(fields[3]);
        const auto task = parse_task(fields[4]);
        if (!seq) throw bad("unknown sequence '" + fields[1] + "'");
        if (!pat) throw bad("unknown pathology '" + fields[2] + "'");
        if (!ori) throw bad("unknown orientation '" + fields[3] + "'");
        if (!task) throw bad("unknown task '" + fields[4] + "'");
        r.env = EnvironmentSpec{*seq, *pat, *ori, 0};
        r.task = *task;
        try {
            size_t used = 0;
            r.seed = std::stoull(fields[5], &used);
            if (used != fields[5].size()) throw std::invalid_argument("trailing");
            used = 0;
            r.terminal_error = std::stod(fields[6], &used);
            if (used != fields[6].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw bad("malformed numeric field");
        }
        if (!std::isfinite(r.terminal_error) || r.terminal_error < 0.0)
            throw bad("terminal_error must be finite and non-negative");
        out.push_back(r);
    }
    return out;
}

bool write_summary_csv(const std::filesystem::path& path, const std::vector<EvalRecord>& records,
                       double threshold) {
    // Group flat over (env, task, seed) per regime label; "all" pools tasks.
    std::vector<std::string> regimes;
    for (const EvalRecord& r : records)
        if (std::find(regimes.begin(), regimes.end(), r.regime) == regimes.end())
            regimes.push_back(r.regime);
    std::sort(regimes.begin(), regimes.end());

    const auto select = [&](const std::string& regime, int task /* -1 = all */) {
        std::vector<EvalRecord> out;
        for (const EvalRecord& r : records)
            if (r.regime == regime && (task < 0 || static_cast<int>(r.task) == task))
                out.push_back(r);
        return out;
    };

    bool any_degenerate = false;
    io::atomic_write_file(path, [&](std::ostream& os) {
        os << "regime,task,n,mean,stddev,adequacy_rate";
        for (const std::string& other : regimes) os << ",p_vs_" << other;
        os << '\n';
        for (const std::string& regime : regimes) {
            for (int task = -1; task < kNumTasks; ++task) {
                const std::vector<EvalRecord> mine = select(regime, task);
                if (mine.empty()) continue;
                const stats::Summary s = summarize_errors(mine);
                os << regime << ',' << (task < 0 ? "all" : to_string(static_cast<TaskId>(task)))
                   << ',' << s.n << ',' << format_error(s.mean) << ',' << format_error(s.stddev)
                   << ',' << format_error(adequacy_rate(mine, threshold));
                for (const std::string& other : regimes) {
                    if (other == regime) {
                        os << ',';
                        continue;
                    }
                    const std::vector<EvalRecord> theirs = select(other, task);
                    if (theirs.empty()) {
                        os << ',';
                        continue;
                    }
                    const stats::TTestResult t = paired_model_ttest(mine, theirs);
                    if (t.degenerate) any_degenerate = true;
                    os << ',' << format_error(t.p);
                }
                os << '\n';
            }
        }
    });
    return any_degenerate;
}

}  // namespace srl
