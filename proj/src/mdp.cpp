#include "srl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace srl {

std::array<Coord, kMaxHistory> AgentState::padded(int32_t h) const {
    std::array<Coord, kMaxHistory> out{};
    const int32_t n = std::min(frame_count, h);
    const int32_t pad = h - n;
    for (int32_t i = 0; i < pad; ++i) out[i] = frames[0];
    for (int32_t i = 0; i < n; ++i) out[pad + i] = frames[i];
    return out;
}

AgentState extract_state(Coord position, const Geometry& geo, const AgentState* prior) {
    AgentState s;
    s.position = position;
    if (prior == nullptr || prior->frame_count == 0) {
        s.frames[0] = position;
        s.frame_count = 1;
        return s;
    }
    if (prior->frame_count < geo.history) {
        s.frames = prior->frames;
        s.frame_count = prior->frame_count;
    } else {  // evict oldest
        for (int32_t i = 1; i < prior->frame_count; ++i) s.frames[i - 1] = prior->frames[i];
        s.frame_count = prior->frame_count - 1;
    }
    s.frames[s.frame_count++] = position;
    return s;
}

void fill_crop(const Volume& v, Coord center, const Geometry& geo, float* out, int32_t stride) {
    const int32_t hx = geo.bx / 2, hy = geo.by / 2, hz = geo.bz / 2;
    size_t i = 0;
    for (int32_t x = center.x - hx; x <= center.x + hx; ++x) {
        const bool x_ok = x >= 0 && x < v.dx;
        for (int32_t y = center.y - hy; y <= center.y + hy; ++y) {
            const bool y_ok = y >= 0 && y < v.dy;
            if (!x_ok || !y_ok) {
                for (int32_t z = 0; z < geo.bz; ++z, i += stride) out[i] = 0.0f;
                continue;
            }
            const int32_t z0 = center.z - hz, z1 = center.z + hz;
            const int32_t zs = std::max(z0, 0), ze = std::min(z1, v.dz - 1);
            const float* row = v.voxels.data() + v.index(x, y, 0);
            for (int32_t z = z0; z <= z1; ++z, i += stride)
                out[i] = (z >= zs && z <= ze) ? row[z] : 0.0f;
        }
    }
}

void fill_state_tensor(const Volume& v, const AgentState& s, const Geometry& geo, float* out) {
    const auto frames = s.padded(geo.history);
    for (int32_t c = 0; c < geo.history; ++c)
        fill_crop(v, frames[c], geo, out + c, geo.history);
}

double reward(const Coord& before, const Coord& after, const Coord& target) {
    const double diff = euclidean(before, target) - euclidean(after, target);
    return std::clamp(diff, -1.0, 1.0);
}

Coord apply_action(const Volume& v, const Coord& position, Action a) {
    return v.clamp(position + action_delta(a));
}

void Trail::push(const Coord& p) {
    ring_[count_ % kWindow] = p;
    ++count_;
}

int Trail::occurrences(const Coord& p) const {
    const int n = std::min(count_, kWindow);
    int c = 0;
    for (int i = 0; i < n; ++i) c += (ring_[i] == p) ? 1 : 0;
    return c;
}

Coord Trail::most_revisited() const {
    const int n = std::min(count_, kWindow);
    // Walk newest to oldest; strictly-greater keeps the latest among ties.
    Coord best{};
    int best_count = 0;
    for (int back = 0; back < n; ++back) {
        const Coord& p = ring_[(count_ - 1 - back) % kWindow];
        if (occurrences(p) > best_count) {
            best = p;
            best_count = occurrences(p);
        }
    }
    return best;
}

bool termination_check(const Trail& trail, const Coord& position, const Coord& target,
                       int step_count, int max_steps, bool training) {
    if (training && squared_distance(position, target) <= 1) return true;
    if (trail.occurrences(position) >= 4) return true;
    return step_count >= max_steps;
}

Coord random_start(const Volume& v, const Geometry& geo, Rng& rng) {
    const auto margin = [](int32_t extent, int32_t dim) {
        return std::min(extent, (dim - 1) / 2);
    };
    const int32_t mx = margin(geo.bx, v.dx), my = margin(geo.by, v.dy), mz = margin(geo.bz, v.dz);
    return {static_cast<int32_t>(rng.range(mx, v.dx - 1 - mx)),
            static_cast<int32_t>(rng.range(my, v.dy - 1 - my)),
            static_cast<int32_t>(rng.range(mz, v.dz - 1 - mz))};
}

}  // namespace srl
