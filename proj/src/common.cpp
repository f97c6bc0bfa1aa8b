#include "srl/common.hpp"

#include <cmath>

namespace srl {

double euclidean(const Coord& a, const Coord& b) {
    return std::sqrt(static_cast<double>(squared_distance(a, b)));
}

int64_t squared_distance(const Coord& a, const Coord& b) {
    const int64_t dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

Coord action_delta(Action a) {
    switch (a) {
        case Action::PosX: return {1, 0, 0};
        case Action::NegX: return {-1, 0, 0};
        case Action::PosY: return {0, 1, 0};
        case Action::NegY: return {0, -1, 0};
        case Action::PosZ: return {0, 0, 1};
        case Action::NegZ: return {0, 0, -1};
    }
    throw ConfigError("unknown action");
}

Action inverse_action(Action a) {
    const auto v = static_cast<uint8_t>(a);
    return static_cast<Action>(v ^ 1u);  // pairs are adjacent: (PosX,NegX), ...
}

std::string to_string(Sequence s) {
    switch (s) {
        case Sequence::S1: return "S1";
        case Sequence::S2: return "S2";
        case Sequence::S3: return "S3";
        case Sequence::S4: return "S4";
    }
    return "S?";
}

std::string to_string(Pathology p) {
    return p == Pathology::PHigh ? "PHigh" : "PLow";
}

std::string to_string(Orientation o) {
    switch (o) {
        case Orientation::Axial: return "Axial";
        case Orientation::Coronal: return "Coronal";
        case Orientation::Sagittal: return "Sagittal";
    }
    return "O?";
}

std::string to_string(TaskId t) {
    switch (t) {
        case TaskId::TopLeft: return "TopLeft";
        case TaskId::TopRight: return "TopRight";
        case TaskId::BottomLeft: return "BottomLeft";
        case TaskId::BottomRight: return "BottomRight";
        case TaskId::Center: return "Center";
    }
    return "T?";
}

std::string to_string(Action a) {
    switch (a) {
        case Action::PosX: return "+x";
        case Action::NegX: return "-x";
        case Action::PosY: return "+y";
        case Action::NegY: return "-y";
        case Action::PosZ: return "+z";
        case Action::NegZ: return "-z";
    }
    return "a?";
}

std::optional<Sequence> parse_sequence(const std::string& s) {
    if (s == "S1") return Sequence::S1;
    if (s == "S2") return Sequence::S2;
    if (s == "S3") return Sequence::S3;
    if (s == "S4") return Sequence::S4;
    return std::nullopt;
}

std::optional<Pathology> parse_pathology(const std::string& s) {
    if (s == "PHigh") return Pathology::PHigh;
    if (s == "PLow") return Pathology::PLow;
    return std::nullopt;
}

std::optional<Orientation> parse_orientation(const std::string& s) {
    if (s == "Axial") return Orientation::Axial;
    if (s == "Coronal") return Orientation::Coronal;
    if (s == "Sagittal") return Orientation::Sagittal;
    return std::nullopt;
}

std::optional<TaskId> parse_task(const std::string& s) {
    for (TaskId t : kAllTasks)
        if (to_string(t) == s) return t;
    return std::nullopt;
}

std::string env_name(const EnvironmentSpec& spec) {
    return to_string(spec.sequence) + "-" + to_string(spec.pathology) + "-" +
           to_string(spec.orientation);
}

std::optional<EnvironmentSpec> parse_env_name(const std::string& name, uint64_t seed) {
    const auto d1 = name.find('-');
    if (d1 == std::string::npos) return std::nullopt;
    const auto d2 = name.find('-', d1 + 1);
    if (d2 == std::string::npos) return std::nullopt;
    const auto seq = parse_sequence(name.substr(0, d1));
    const auto pat = parse_pathology(name.substr(d1 + 1, d2 - d1 - 1));
    const auto ori = parse_orientation(name.substr(d2 + 1));
    if (!seq || !pat || !ori) return std::nullopt;
    return EnvironmentSpec{*seq, *pat, *ori, seed};
}

std::array<EnvironmentSpec, kNumEnvironments> all_environments(uint64_t seed) {
    std::array<EnvironmentSpec, kNumEnvironments> out{};
    int i = 0;
    for (int o = 0; o < kNumOrientations; ++o)
        for (int p = 0; p < kNumPathologies; ++p)
            for (int s = 0; s < kNumSequences; ++s)
                out[i++] = EnvironmentSpec{static_cast<Sequence>(s), static_cast<Pathology>(p),
                                           static_cast<Orientation>(o), seed};
    return out;
}

}  // namespace srl
