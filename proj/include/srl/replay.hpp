#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "srl/common.hpp"
#include "srl/mdp.hpp"
#include "srl/rng.hpp"

namespace srl {

// ---------------------------------------------------------------------------
// Current-experience ring buffer (one per task during training)
// ---------------------------------------------------------------------------

class RingBuffer {
public:
    explicit RingBuffer(size_t capacity);

    void push(const Transition& t);
    size_t size() const { return std::min<uint64_t>(pushed_, cap_); }
    bool empty() const { return pushed_ == 0; }
    size_t capacity() const { return cap_; }
    uint64_t total_pushed() const { return pushed_; }

    // i in [0, size), oldest first.
    const Transition& at(size_t i) const;

    // Uniform with replacement; empty buffer is an error.
    Transition sample_one(Rng& rng) const;
    std::vector<Transition> sample(size_t n, Rng& rng) const;

private:
    std::vector<Transition> items_;
    size_t cap_;
    uint64_t pushed_ = 0;
};

// ---------------------------------------------------------------------------
// Selective long-term store
// ---------------------------------------------------------------------------

enum class SelectionStrategy : uint8_t {
    Reservoir = 0,        // uniform over everything seen (algorithm R per key)
    RewardMagnitude = 1,  // largest |reward|, ties to the most recent
    Coverage = 2,         // greedy max-min spread of agent positions
};

std::string to_string(SelectionStrategy s);
std::optional<SelectionStrategy> parse_strategy(const std::string& s);

struct StoreKey {
    EnvironmentSpec env;
    TaskId task = TaskId::TopLeft;

    bool operator==(const StoreKey&) const = default;
};

// Fixed budget of transitions per (environment, task) key. Keys appear on
// first ingest and are never removed; per-key selection state (stream counts,
// arrival order) persists across ingest calls.
class LongTermStore {
public:
    LongTermStore(SelectionStrategy strategy, size_t budget_per_key);

    // Feeds an episode's transitions through the selection strategy.
    void ingest(const StoreKey& key, const std::vector<Transition>& episode, Rng& rng);

    bool empty() const { return keys_.empty(); }
    size_t key_count() const { return keys_.size(); }
    size_t total_items() const;
    SelectionStrategy strategy() const { return strategy_; }
    size_t budget() const { return budget_; }

    const std::vector<StoreKey>& keys() const { return key_order_; }
    const std::vector<Transition>& items(const StoreKey& key) const;
    uint64_t seen_count(const StoreKey& key) const;

    // Uniform over keys, then uniform within the chosen key's items.
    Transition sample_historical(Rng& rng) const;

private:
    struct Entry {
        StoreKey key;
        std::vector<Transition> items;
        std::vector<uint64_t> arrivals;  // per-item arrival index within the key
        uint64_t seen = 0;
    };
    Entry& entry_for(const StoreKey& key);
    const Entry* find(const StoreKey& key) const;

    SelectionStrategy strategy_;
    size_t budget_;
    std::vector<Entry> keys_;
    std::vector<StoreKey> key_order_;
};

// ---------------------------------------------------------------------------
// Replay configuration
// ---------------------------------------------------------------------------

struct ReplayConfig {
    size_t ring_capacity = 20000;  // per-task short-term ring
    SelectionStrategy strategy = SelectionStrategy::Reservoir;
    size_t longterm_budget = 2000;  // per (environment, task) key
    double current_fraction = 0.5;  // current share of each lifelong batch

    void validate() const;  // throws ConfigError
};

// ---------------------------------------------------------------------------
// Mixed current/historical batches
// ---------------------------------------------------------------------------

struct MixSpec {
    size_t batch_size = 48;
    double current_fraction = 0.5;

    void validate() const;  // throws ConfigError
};

// round(batch_size * current_fraction) items from `current`, the rest
// historical; an empty store yields a pure-current batch. Current items come
// first in the returned batch.
std::vector<Transition> mixed_sample(const RingBuffer& current, const LongTermStore& store,
                                     const MixSpec& mix, Rng& rng);

// ---------------------------------------------------------------------------
// Store snapshot ".erb"
// ---------------------------------------------------------------------------
// Little-endian: magic "SRLE", version u32=1, key count u32, then per key:
// spec bytes (sequence, pathology, orientation, reserved=0), task u8, item
// count u32, items as (s position, next position) each 3 x u32, action u8,
// reward f32, done u8. Snapshots are lossy: crop histories are dropped and
// states are rebuilt from positions against regenerated volumes on load.

void save_store(const std::filesystem::path& path, const LongTermStore& store);

// `envs` supplies seeds and run-local indices for the specs found in the file;
// a spec without a match is an artifact error.
LongTermStore load_store(const std::filesystem::path& path, SelectionStrategy strategy,
                         size_t budget, const std::vector<EnvironmentSpec>& envs);

}  // namespace srl
