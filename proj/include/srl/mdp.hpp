#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "srl/common.hpp"
#include "srl/rng.hpp"
#include "srl/volume.hpp"

namespace srl {

// ---------------------------------------------------------------------------
// Agent state
// ---------------------------------------------------------------------------
// A state is the last H box-crops around the agent's positions. Crops are a
// pure function of (volume, center), so states carry positions only and crops
// are materialized on demand; this keeps replay buffers small.

struct AgentState {
    Coord position;                              // current box center
    std::array<Coord, kMaxHistory> frames{};     // crop centers, oldest first
    int32_t frame_count = 0;                     // valid entries in frames

    // Frames padded to exactly H by repeating the first (fresh-episode rule).
    std::array<Coord, kMaxHistory> padded(int32_t h) const;
};

// Fresh state or successor state: appends `position` to the prior history,
// evicting the oldest entry beyond H. Pass nullptr for an episode's first state.
AgentState extract_state(Coord position, const Geometry& geo, const AgentState* prior);

// Writes one H-channel crop stack for the state into `out` (length
// bx*by*bz*H), channels-last: out[((x*by+y)*bz+z)*H + c], channel = history
// slot, oldest first. Voxels outside bounds are zero.
void fill_state_tensor(const Volume& v, const AgentState& s, const Geometry& geo, float* out);

// Single crop around `center`, written with the given channel stride
// (out[voxel_index * stride]), zero-filled outside volume bounds.
void fill_crop(const Volume& v, Coord center, const Geometry& geo, float* out,
               int32_t stride = 1);

// ---------------------------------------------------------------------------
// Reward and movement
// ---------------------------------------------------------------------------

// Distance-to-target improvement, clipped to [-1, +1].
double reward(const Coord& before, const Coord& after, const Coord& target);

// One-voxel move along the action axis, clamped to volume bounds.
Coord apply_action(const Volume& v, const Coord& position, Action a);

// ---------------------------------------------------------------------------
// Termination
// ---------------------------------------------------------------------------

// Rolling window of recent positions (bounded), used for oscillation detection
// and the inference readout.
class Trail {
public:
    static constexpr int kWindow = 20;

    void push(const Coord& p);
    int size() const { return count_; }
    // Occurrences of p in the window.
    int occurrences(const Coord& p) const;
    // Most frequent position in the window; ties go to the latest occurrence.
    Coord most_revisited() const;

private:
    std::array<Coord, kWindow> ring_{};
    int count_ = 0;  // total pushes (ring holds min(count_, kWindow) entries)
};

// True when the episode should stop:
//  (a) position within 1 voxel of target (training mode only),
//  (b) current position seen >= 4 times in the trail, or
//  (c) step_count >= max_steps.
// The trail must already contain the current position.
bool termination_check(const Trail& trail, const Coord& position, const Coord& target,
                       int step_count, int max_steps, bool training);

// ---------------------------------------------------------------------------
// Transitions
// ---------------------------------------------------------------------------

// Replay-compact transition: successor frames are recoverable by shifting the
// padded frame list and appending next_position, so only s is stored.
struct Transition {
    AgentState s;
    Action a = Action::PosX;
    float r = 0.0f;
    Coord next_position;
    bool done = false;
    TaskId task = TaskId::TopLeft;
    uint8_t env_idx = 0;  // index into the owning run's environment list

    AgentState next_state(const Geometry& geo) const {
        return extract_state(next_position, geo, &s);
    }
};

// Uniform start voxel at least one box-extent from every face; on axes too
// short for that, the margin falls back to (dim-1)/2).
Coord random_start(const Volume& v, const Geometry& geo, Rng& rng);

// ---------------------------------------------------------------------------
// Episode rollout
// ---------------------------------------------------------------------------

struct EpisodeResult {
    std::vector<Transition> transitions;
    Coord terminal_position;  // inference readout: most-revisited trail position
    Coord final_position;     // raw agent position at stop time
    int steps = 0;
    double total_reward = 0.0;
    bool reached_target = false;  // stopped via rule (a)
};

// Runs one episode from a random start. `pick` chooses the greedy action given
// the current state; with probability epsilon a uniform action is taken
// instead (the picker is not consulted). `training` enables stop rule (a).
template <typename PickFn>
EpisodeResult run_episode_with(const Volume& v, const LandmarkSet& lm, TaskId task,
                               const Geometry& geo, double epsilon, int max_steps, bool training,
                               Rng& rng, PickFn&& pick, uint8_t env_idx = 0) {
    const Coord target = landmark_of(lm, task);
    EpisodeResult out;
    AgentState state = extract_state(random_start(v, geo, rng), geo, nullptr);
    Trail trail;
    trail.push(state.position);

    for (int step_count = 1; step_count <= max_steps; ++step_count) {
        Action a;
        if (rng.next_double() < epsilon)
            a = static_cast<Action>(rng.below(kNumActions));
        else
            a = pick(v, state);

        const Coord after = apply_action(v, state.position, a);
        const double r = reward(state.position, after, target);
        trail.push(after);
        const bool done = termination_check(trail, after, target, step_count, max_steps, training);

        Transition t;
        t.s = state;
        t.a = a;
        t.r = static_cast<float>(r);
        t.next_position = after;
        t.done = done;
        t.task = task;
        t.env_idx = env_idx;
        out.transitions.push_back(t);
        out.total_reward += r;
        out.steps = step_count;

        state = extract_state(after, geo, &state);
        if (done) {
            out.reached_target = training && squared_distance(after, target) <= 1;
            break;
        }
    }
    out.final_position = state.position;
    out.terminal_position = trail.most_revisited();
    return out;
}

}  // namespace srl
