#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace srl {

// ---------------------------------------------------------------------------
// Errors. The CLI maps these onto its documented exit codes.
// ---------------------------------------------------------------------------

// Bad configuration or malformed request (exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Missing or corrupt artifact: volume, checkpoint, store (exit code 3).
struct ArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite gradients or parameters during training (exit code 4).
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Environment descriptors
// ---------------------------------------------------------------------------

enum class Sequence : uint8_t { S1 = 0, S2 = 1, S3 = 2, S4 = 3 };
enum class Pathology : uint8_t { PHigh = 0, PLow = 1 };
enum class Orientation : uint8_t { Axial = 0, Coronal = 1, Sagittal = 2 };

constexpr int kNumSequences = 4;
constexpr int kNumPathologies = 2;
constexpr int kNumOrientations = 3;
constexpr int kNumEnvironments = kNumSequences * kNumPathologies * kNumOrientations;

// One synthetic imaging environment: intensity transform, lesion size class,
// axis permutation, plus the seed that drives all stochastic generator choices.
struct EnvironmentSpec {
    Sequence sequence = Sequence::S1;
    Pathology pathology = Pathology::PHigh;
    Orientation orientation = Orientation::Axial;
    uint64_t seed = 0;

    bool operator==(const EnvironmentSpec&) const = default;
    // Lexicographic over (orientation, pathology, sequence, seed); this is also
    // the default SERIL presentation order.
    auto sort_key() const {
        return std::array<uint64_t, 4>{static_cast<uint64_t>(orientation),
                                       static_cast<uint64_t>(pathology),
                                       static_cast<uint64_t>(sequence), seed};
    }
    bool operator<(const EnvironmentSpec& o) const { return sort_key() < o.sort_key(); }
};

// ---------------------------------------------------------------------------
// Tasks and actions
// ---------------------------------------------------------------------------

enum class TaskId : uint8_t {
    TopLeft = 0,
    TopRight = 1,
    BottomLeft = 2,
    BottomRight = 3,
    Center = 4,
};
constexpr int kNumTasks = 5;
constexpr std::array<TaskId, kNumTasks> kAllTasks = {
    TaskId::TopLeft, TaskId::TopRight, TaskId::BottomLeft, TaskId::BottomRight, TaskId::Center};

enum class Action : uint8_t {
    PosX = 0,
    NegX = 1,
    PosY = 2,
    NegY = 3,
    PosZ = 4,
    NegZ = 5,
};
constexpr int kNumActions = 6;

// ---------------------------------------------------------------------------
// Integer voxel coordinates
// ---------------------------------------------------------------------------

struct Coord {
    int32_t x = 0;
    int32_t y = 0;
    int32_t z = 0;

    bool operator==(const Coord&) const = default;
    Coord operator+(const Coord& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Coord operator-(const Coord& o) const { return {x - o.x, y - o.y, z - o.z}; }
};

double euclidean(const Coord& a, const Coord& b);
int64_t squared_distance(const Coord& a, const Coord& b);

// Unit move along the action's axis.
Coord action_delta(Action a);
// NegX for PosX and so on.
Action inverse_action(Action a);

// ---------------------------------------------------------------------------
// Names (used in file names, CSV columns, manifests)
// ---------------------------------------------------------------------------

std::string to_string(Sequence s);
std::string to_string(Pathology p);
std::string to_string(Orientation o);
std::string to_string(TaskId t);
std::string to_string(Action a);

std::optional<Sequence> parse_sequence(const std::string& s);
std::optional<Pathology> parse_pathology(const std::string& s);
std::optional<Orientation> parse_orientation(const std::string& s);
std::optional<TaskId> parse_task(const std::string& s);

// "S1-PHigh-Axial" form, seed not included.
std::string env_name(const EnvironmentSpec& spec);
std::optional<EnvironmentSpec> parse_env_name(const std::string& name, uint64_t seed);

// All 24 (sequence, pathology, orientation) combinations with the given seed,
// in default (orientation, pathology, sequence) order.
std::array<EnvironmentSpec, kNumEnvironments> all_environments(uint64_t seed);

}  // namespace srl
