#include "srl/config.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "srl/io_util.hpp"

namespace srl {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Parser {
    size_t line_no = 0;

    [[noreturn]] void fail(const std::string& why) const {
        throw ConfigError("config line " + std::to_string(line_no) + ": " + why);
    }

    int32_t to_i32(const std::string& v) const {
        try {
            size_t used = 0;
            const long long x = std::stoll(v, &used);
            if (used != v.size() || x < INT32_MIN || x > INT32_MAX) fail("'" + v + "' is not a valid integer");
            return static_cast<int32_t>(x);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            fail("'" + v + "' is not a valid integer");
        }
    }

    int64_t to_i64(const std::string& v) const {
        try {
            size_t used = 0;
            const long long x = std::stoll(v, &used);
            if (used != v.size()) fail("'" + v + "' is not a valid integer");
            return x;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            fail("'" + v + "' is not a valid integer");
        }
    }

    uint64_t to_u64(const std::string& v) const {
        try {
            size_t used = 0;
            if (!v.empty() && v[0] == '-') fail("'" + v + "' is not a valid unsigned integer");
            const unsigned long long x = std::stoull(v, &used);
            if (used != v.size()) fail("'" + v + "' is not a valid unsigned integer");
            return x;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            fail("'" + v + "' is not a valid unsigned integer");
        }
    }

    size_t to_size(const std::string& v) const { return static_cast<size_t>(to_u64(v)); }

    double to_double(const std::string& v) const {
        try {
            size_t used = 0;
            const double x = std::stod(v, &used);
            if (used != v.size()) fail("'" + v + "' is not a valid number");
            return x;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            fail("'" + v + "' is not a valid number");
        }
    }
};

}  // namespace

void RunConfig::validate() const {
    geometry.validate();
    training.validate();
    replay.validate();
    eval.validate();
    resolve_env_order(*this);
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    Parser p;
    std::istringstream is(text);
    std::string raw;
    std::string section;

    while (std::getline(is, raw)) {
        ++p.line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;

        if (line.front() == '[') {
            if (line.back() != ']') p.fail("unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "geometry" && section != "training" && section != "replay" &&
                section != "experiment" && section != "eval")
                p.fail("unknown section [" + section + "]");
            continue;
        }

        const size_t eq = line.find('=');
        if (eq == std::string::npos) p.fail("expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) p.fail("empty key");
        if (section.empty()) p.fail("key '" + key + "' appears before any [section]");

        if (section == "geometry") {
            Geometry& g = cfg.geometry;
            if (key == "dx") g.dx = p.to_i32(value);
            else if (key == "dy") g.dy = p.to_i32(value);
            else if (key == "dz") g.dz = p.to_i32(value);
            else if (key == "bx") g.bx = p.to_i32(value);
            else if (key == "by") g.by = p.to_i32(value);
            else if (key == "bz") g.bz = p.to_i32(value);
            else if (key == "history") g.history = p.to_i32(value);
            else p.fail("unknown key '" + key + "' in [geometry]");
        } else if (section == "training") {
            TrainConfig& t = cfg.training;
            if (key == "batch_size") t.batch_size = p.to_size(value);
            else if (key == "epochs_single") t.epochs_single = p.to_i32(value);
            else if (key == "epochs_multi") t.epochs_multi = p.to_i32(value);
            else if (key == "steps_per_epoch") t.steps_per_epoch = p.to_i32(value);
            else if (key == "gamma") t.gamma = p.to_double(value);
            else if (key == "lr") t.lr = p.to_double(value);
            else if (key == "epsilon_start") t.epsilon_start = p.to_double(value);
            else if (key == "epsilon_end") t.epsilon_end = p.to_double(value);
            else if (key == "epsilon_decay_steps") t.epsilon_decay_steps = p.to_i64(value);
            else if (key == "max_episode_steps") t.max_episode_steps = p.to_i32(value);
            else if (key == "target_sync_interval") t.target_sync_interval = p.to_i32(value);
            else p.fail("unknown key '" + key + "' in [training]");
        } else if (section == "replay") {
            ReplayConfig& r = cfg.replay;
            if (key == "ring_capacity") r.ring_capacity = p.to_size(value);
            else if (key == "strategy") {
                const auto s = parse_strategy(value);
                if (!s) p.fail("unknown strategy '" + value + "'");
                r.strategy = *s;
            } else if (key == "longterm_budget") r.longterm_budget = p.to_size(value);
            else if (key == "current_fraction") r.current_fraction = p.to_double(value);
            else p.fail("unknown key '" + key + "' in [replay]");
        } else if (section == "experiment") {
            if (key == "regime") {
                const auto r = parse_regime(value);
                if (!r) p.fail("unknown regime '" + value + "'");
                cfg.regime = *r;
            } else if (key == "env_order") {
                cfg.env_order.clear();
                std::string cur;
                std::istringstream vs(value);
                while (std::getline(vs, cur, ',')) {
                    cur = trim(cur);
                    if (!cur.empty()) cfg.env_order.push_back(cur);
                }
            } else if (key == "gen_seed") cfg.gen_seed = p.to_u64(value);
            else if (key == "train_seed") cfg.training.seed = p.to_u64(value);
            else if (key == "eval_seed") cfg.eval.seed = p.to_u64(value);
            else p.fail("unknown key '" + key + "' in [experiment]");
        } else {  // eval
            EvalConfig& e = cfg.eval;
            if (key == "episodes") e.episodes = p.to_i32(value);
            else if (key == "epsilon") e.epsilon = p.to_double(value);
            else if (key == "threshold_scale") e.threshold_scale = p.to_double(value);
            else if (key == "max_episode_steps") e.max_episode_steps = p.to_i32(value);
            else p.fail("unknown key '" + key + "' in [eval]");
        }
    }

    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const ArtifactError& e) {
        // A named-but-absent config is an operator mistake, not a data error.
        throw ConfigError(e.what());
    }
    return parse_config(text);
}

std::string dump_config(const RunConfig& cfg) {
    std::ostringstream os;
    const Geometry& g = cfg.geometry;
    os << "[geometry]\n";
    os << "dx = " << g.dx << "\n" << "dy = " << g.dy << "\n" << "dz = " << g.dz << "\n";
    os << "bx = " << g.bx << "\n" << "by = " << g.by << "\n" << "bz = " << g.bz << "\n";
    os << "history = " << g.history << "\n\n";

    const TrainConfig& t = cfg.training;
    os << "[training]\n";
    os << "batch_size = " << t.batch_size << "\n";
    os << "epochs_single = " << t.epochs_single << "\n";
    os << "epochs_multi = " << t.epochs_multi << "\n";
    os << "steps_per_epoch = " << t.steps_per_epoch << "\n";
    os << "gamma = " << fmt_double(t.gamma) << "\n";
    os << "lr = " << fmt_double(t.lr) << "\n";
    os << "epsilon_start = " << fmt_double(t.epsilon_start) << "\n";
    os << "epsilon_end = " << fmt_double(t.epsilon_end) << "\n";
    os << "epsilon_decay_steps = " << t.epsilon_decay_steps << "\n";
    os << "max_episode_steps = " << t.max_episode_steps << "\n";
    os << "target_sync_interval = " << t.target_sync_interval << "\n\n";

    const ReplayConfig& r = cfg.replay;
    os << "[replay]\n";
    os << "ring_capacity = " << r.ring_capacity << "\n";
    os << "strategy = " << to_string(r.strategy) << "\n";
    os << "longterm_budget = " << r.longterm_budget << "\n";
    os << "current_fraction = " << fmt_double(r.current_fraction) << "\n\n";

    os << "[experiment]\n";
    os << "regime = " << to_string(cfg.regime) << "\n";
    os << "env_order = ";
    for (size_t i = 0; i < cfg.env_order.size(); ++i)
        os << (i ? "," : "") << cfg.env_order[i];
    os << "\n";
    os << "gen_seed = " << cfg.gen_seed << "\n";
    os << "train_seed = " << cfg.training.seed << "\n";
    os << "eval_seed = " << cfg.eval.seed << "\n\n";

    const EvalConfig& e = cfg.eval;
    os << "[eval]\n";
    os << "episodes = " << e.episodes << "\n";
    os << "epsilon = " << fmt_double(e.epsilon) << "\n";
    os << "threshold_scale = " << fmt_double(e.threshold_scale) << "\n";
    os << "max_episode_steps = " << e.max_episode_steps << "\n";
    return os.str();
}

std::vector<EnvironmentSpec> resolve_env_order(const RunConfig& cfg) {
    if (cfg.env_order.empty()) {
        const auto all = all_environments(cfg.gen_seed);
        return {all.begin(), all.end()};
    }
    std::vector<EnvironmentSpec> out;
    std::set<std::string> seen;
    for (const std::string& name : cfg.env_order) {
        const auto spec = parse_env_name(name, cfg.gen_seed);
        if (!spec) throw ConfigError("unknown environment name '" + name + "' in env_order");
        if (!seen.insert(name).second)
            throw ConfigError("duplicate environment '" + name + "' in env_order");
        out.push_back(*spec);
    }
    return out;
}

}  // namespace srl
