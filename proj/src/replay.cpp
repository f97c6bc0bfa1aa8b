#include "srl/replay.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "srl/io_util.hpp"

namespace srl {

// ---------------------------------------------------------------------------
// RingBuffer
// ---------------------------------------------------------------------------

RingBuffer::RingBuffer(size_t capacity) : cap_(capacity) {
    if (capacity == 0) throw ConfigError("ring buffer capacity must be positive");
    items_.reserve(std::min<size_t>(capacity, 4096));
}

void RingBuffer::push(const Transition& t) {
    if (items_.size() < cap_)
        items_.push_back(t);
    else
        items_[pushed_ % cap_] = t;
    ++pushed_;
}

const Transition& RingBuffer::at(size_t i) const {
    const size_t start = pushed_ > cap_ ? pushed_ % cap_ : 0;
    return items_[(start + i) % cap_];
}

Transition RingBuffer::sample_one(Rng& rng) const {
    if (empty()) throw ConfigError("cannot sample from an empty buffer");
    return at(rng.below(size()));
}

std::vector<Transition> RingBuffer::sample(size_t n, Rng& rng) const {
    std::vector<Transition> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) out.push_back(sample_one(rng));
    return out;
}

// ---------------------------------------------------------------------------
// LongTermStore
// ---------------------------------------------------------------------------

std::string to_string(SelectionStrategy s) {
    switch (s) {
        case SelectionStrategy::Reservoir: return "reservoir";
        case SelectionStrategy::RewardMagnitude: return "reward-magnitude";
        case SelectionStrategy::Coverage: return "coverage";
    }
    return "strategy?";
}

std::optional<SelectionStrategy> parse_strategy(const std::string& s) {
    if (s == "reservoir") return SelectionStrategy::Reservoir;
    if (s == "reward-magnitude") return SelectionStrategy::RewardMagnitude;
    if (s == "coverage") return SelectionStrategy::Coverage;
    return std::nullopt;
}

LongTermStore::LongTermStore(SelectionStrategy strategy, size_t budget_per_key)
    : strategy_(strategy), budget_(budget_per_key) {
    if (budget_ == 0) throw ConfigError("long-term budget must be positive");
}

LongTermStore::Entry& LongTermStore::entry_for(const StoreKey& key) {
    for (auto& e : keys_)
        if (e.key == key) return e;
    keys_.push_back(Entry{key, {}, {}, 0});
    key_order_.push_back(key);
    return keys_.back();
}

const LongTermStore::Entry* LongTermStore::find(const StoreKey& key) const {
    for (const auto& e : keys_)
        if (e.key == key) return &e;
    return nullptr;
}

void LongTermStore::ingest(const StoreKey& key, const std::vector<Transition>& episode,
                           Rng& rng) {
    if (episode.empty()) return;
    Entry& e = entry_for(key);

    switch (strategy_) {
        case SelectionStrategy::Reservoir:
            for (const Transition& t : episode) {
                ++e.seen;
                if (e.items.size() < budget_) {
                    e.items.push_back(t);
                    e.arrivals.push_back(e.seen);
                } else {
                    const uint64_t j = rng.below(e.seen);
                    if (j < budget_) {
                        e.items[j] = t;
                        e.arrivals[j] = e.seen;
                    }
                }
            }
            break;

        case SelectionStrategy::RewardMagnitude:
            for (const Transition& t : episode) {
                ++e.seen;
                if (e.items.size() < budget_) {
                    e.items.push_back(t);
                    e.arrivals.push_back(e.seen);
                    continue;
                }
                // Weakest stored item: smallest |r|, oldest among equals.
                size_t weakest = 0;
                for (size_t i = 1; i < e.items.size(); ++i) {
                    const float a = std::abs(e.items[i].r), b = std::abs(e.items[weakest].r);
                    if (a < b || (a == b && e.arrivals[i] < e.arrivals[weakest])) weakest = i;
                }
                // The newcomer is the most recent, so it wins ties.
                if (std::abs(t.r) >= std::abs(e.items[weakest].r)) {
                    e.items[weakest] = t;
                    e.arrivals[weakest] = e.seen;
                }
            }
            break;

        case SelectionStrategy::Coverage: {
            // Greedy max-min over the union of kept items and the new episode,
            // re-seeded with the key's first-ever arrival (which, inductively,
            // is never evicted).
            std::vector<Transition> pool = std::move(e.items);
            std::vector<uint64_t> pool_arrival = std::move(e.arrivals);
            for (const Transition& t : episode) {
                pool.push_back(t);
                pool_arrival.push_back(++e.seen);
            }
            e.items.clear();
            e.arrivals.clear();

            const size_t n = pool.size();
            std::vector<char> taken(n, 0);
            // Seed: smallest arrival index.
            size_t seed = 0;
            for (size_t i = 1; i < n; ++i)
                if (pool_arrival[i] < pool_arrival[seed]) seed = i;
            std::vector<size_t> selected{seed};
            taken[seed] = 1;
            std::vector<double> min_dist(n, 0.0);
            for (size_t i = 0; i < n; ++i)
                if (!taken[i])
                    min_dist[i] = euclidean(pool[i].s.position, pool[seed].s.position);

            while (selected.size() < std::min(budget_, n)) {
                size_t best = n;
                for (size_t i = 0; i < n; ++i) {
                    if (taken[i]) continue;
                    if (best == n || min_dist[i] > min_dist[best] ||
                        (min_dist[i] == min_dist[best] && pool_arrival[i] < pool_arrival[best]))
                        best = i;
                }
                taken[best] = 1;
                selected.push_back(best);
                for (size_t i = 0; i < n; ++i)
                    if (!taken[i])
                        min_dist[i] = std::min(
                            min_dist[i], euclidean(pool[i].s.position, pool[best].s.position));
            }
            // Keep arrival order for stable serialization.
            std::sort(selected.begin(), selected.end(), [&](size_t a, size_t b) {
                return pool_arrival[a] < pool_arrival[b];
            });
            for (size_t i : selected) {
                e.items.push_back(pool[i]);
                e.arrivals.push_back(pool_arrival[i]);
            }
            break;
        }
    }
}

size_t LongTermStore::total_items() const {
    size_t n = 0;
    for (const auto& e : keys_) n += e.items.size();
    return n;
}

const std::vector<Transition>& LongTermStore::items(const StoreKey& key) const {
    const Entry* e = find(key);
    if (e == nullptr) throw ConfigError("no such store key: " + env_name(key.env));
    return e->items;
}

uint64_t LongTermStore::seen_count(const StoreKey& key) const {
    const Entry* e = find(key);
    return e == nullptr ? 0 : e->seen;
}

Transition LongTermStore::sample_historical(Rng& rng) const {
    if (keys_.empty()) throw ConfigError("cannot sample from an empty store");
    const Entry& e = keys_[rng.below(keys_.size())];
    return e.items[rng.below(e.items.size())];
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

void ReplayConfig::validate() const {
    if (ring_capacity < 1) throw ConfigError("ring capacity must be at least 1");
    if (longterm_budget < 1) throw ConfigError("long-term budget must be at least 1");
    if (!(current_fraction >= 0.0 && current_fraction <= 1.0))
        throw ConfigError("current fraction must lie in [0,1]");
}

// ---------------------------------------------------------------------------
// Mixed batches
// ---------------------------------------------------------------------------

void MixSpec::validate() const {
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (!(current_fraction >= 0.0 && current_fraction <= 1.0))
        throw ConfigError("current fraction must lie in [0,1]");
}

std::vector<Transition> mixed_sample(const RingBuffer& current, const LongTermStore& store,
                                     const MixSpec& mix, Rng& rng) {
    mix.validate();
    if (current.empty()) throw ConfigError("mixed_sample requires a non-empty current buffer");

    size_t n_cur = mix.batch_size;
    if (!store.empty()) {
        n_cur = static_cast<size_t>(
            std::llround(static_cast<double>(mix.batch_size) * mix.current_fraction));
        n_cur = std::min(n_cur, mix.batch_size);
    }
    std::vector<Transition> batch = current.sample(n_cur, rng);
    batch.reserve(mix.batch_size);
    for (size_t i = n_cur; i < mix.batch_size; ++i) batch.push_back(store.sample_historical(rng));
    return batch;
}

// ---------------------------------------------------------------------------
// .erb I/O
// ---------------------------------------------------------------------------

static constexpr char kErbMagic[4] = {'S', 'R', 'L', 'E'};

void save_store(const std::filesystem::path& path, const LongTermStore& store) {
    io::atomic_write_file(path, [&](std::ostream& os) {
        io::write_bytes(os, kErbMagic, 4);
        io::write_u32(os, 1);
        io::write_u32(os, static_cast<uint32_t>(store.key_count()));
        for (const StoreKey& key : store.keys()) {
            io::write_u8(os, static_cast<uint8_t>(key.env.sequence));
            io::write_u8(os, static_cast<uint8_t>(key.env.pathology));
            io::write_u8(os, static_cast<uint8_t>(key.env.orientation));
            io::write_u8(os, 0);  // reserved
            io::write_u8(os, static_cast<uint8_t>(key.task));
            const auto& items = store.items(key);
            io::write_u32(os, static_cast<uint32_t>(items.size()));
            for (const Transition& t : items) {
                io::write_u32(os, static_cast<uint32_t>(t.s.position.x));
                io::write_u32(os, static_cast<uint32_t>(t.s.position.y));
                io::write_u32(os, static_cast<uint32_t>(t.s.position.z));
                io::write_u32(os, static_cast<uint32_t>(t.next_position.x));
                io::write_u32(os, static_cast<uint32_t>(t.next_position.y));
                io::write_u32(os, static_cast<uint32_t>(t.next_position.z));
                io::write_u8(os, static_cast<uint8_t>(t.a));
                io::write_f32(os, t.r);
                io::write_u8(os, t.done ? 1 : 0);
            }
        }
    });
}

LongTermStore load_store(const std::filesystem::path& path, SelectionStrategy strategy,
                         size_t budget, const std::vector<EnvironmentSpec>& envs) {
    const auto data = io::read_binary_file(path, "replay store");
    std::istringstream is(std::string(data.begin(), data.end()), std::ios::binary);
    io::expect_magic(is, kErbMagic, "replay store");
    const uint32_t version = io::read_u32(is);
    if (version != 1)
        throw ArtifactError("unsupported replay store version " + std::to_string(version));

    LongTermStore store(strategy, budget);
    Rng unused(0);  // ingest of <= budget items never consults the generator
    const uint32_t key_count = io::read_u32(is);
    for (uint32_t k = 0; k < key_count; ++k) {
        const uint8_t seq = io::read_u8(is), pat = io::read_u8(is), ori = io::read_u8(is);
        const uint8_t reserved = io::read_u8(is);
        const uint8_t task = io::read_u8(is);
        if (seq >= kNumSequences || pat >= kNumPathologies || ori >= kNumOrientations ||
            reserved != 0 || task >= kNumTasks)
            throw ArtifactError("replay store key bytes out of range");

        StoreKey key;
        key.task = static_cast<TaskId>(task);
        size_t env_idx = envs.size();
        for (size_t i = 0; i < envs.size(); ++i) {
            if (static_cast<uint8_t>(envs[i].sequence) == seq &&
                static_cast<uint8_t>(envs[i].pathology) == pat &&
                static_cast<uint8_t>(envs[i].orientation) == ori) {
                env_idx = i;
                break;
            }
        }
        if (env_idx == envs.size())
            throw ArtifactError("replay store references an environment not in this run");
        key.env = envs[env_idx];

        const uint32_t count = io::read_u32(is);
        if (count > budget) throw ArtifactError("replay store key exceeds budget");
        std::vector<Transition> items;
        items.reserve(count);
        for (uint32_t i = 0; i < count; ++i) {
            Transition t;
            const auto read_coord = [&] {
                Coord c;
                c.x = static_cast<int32_t>(io::read_u32(is));
                c.y = static_cast<int32_t>(io::read_u32(is));
                c.z = static_cast<int32_t>(io::read_u32(is));
                if (c.x < 0 || c.y < 0 || c.z < 0)
                    throw ArtifactError("replay store position out of range");
                return c;
            };
            const Coord pos = read_coord();
            t.s.position = pos;
            t.s.frames[0] = pos;  // crop history is not stored; rebuild from here
            t.s.frame_count = 1;
            t.next_position = read_coord();
            const uint8_t a = io::read_u8(is);
            if (a >= kNumActions) throw ArtifactError("replay store action out of range");
            t.a = static_cast<Action>(a);
            t.r = io::read_f32(is);
            if (!std::isfinite(t.r) || t.r < -1.0f || t.r > 1.0f)
                throw ArtifactError("replay store reward out of range");
            const uint8_t done = io::read_u8(is);
            if (done > 1) throw ArtifactError("replay store done flag out of range");
            t.done = done == 1;
            t.task = key.task;
            t.env_idx = static_cast<uint8_t>(env_idx);
            items.push_back(t);
        }
        store.ingest(key, items, unused);
    }
    if (is.peek() != EOF) throw ArtifactError("trailing bytes in replay store");
    return store;
}

}  // namespace srl
