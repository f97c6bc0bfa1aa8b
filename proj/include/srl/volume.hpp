#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "srl/common.hpp"

namespace srl {

// Volume dimensions, agent crop-box extents, and frame-history length.
// These travel together because nearly every consumer needs all three.
struct Geometry {
    int32_t dx = 64, dy = 64, dz = 24;  // canonical volume dims (pre-orientation)
    int32_t bx = 15, by = 15, bz = 7;   // crop box extents (odd)
    int32_t history = 4;                // frames stacked into the network input

    void validate() const;  // throws ConfigError on any violation
};

// History length is bounded so position trails can live in fixed-size records.
constexpr int kMaxHistory = 8;

// Dense scalar field in [0,1], row-major with z fastest:
// index = (x*dy + y)*dz + z.
struct Volume {
    int32_t dx = 0, dy = 0, dz = 0;
    std::vector<float> voxels;
    EnvironmentSpec spec;

    size_t index(int32_t x, int32_t y, int32_t z) const {
        return (static_cast<size_t>(x) * dy + y) * dz + z;
    }
    float at(int32_t x, int32_t y, int32_t z) const { return voxels[index(x, y, z)]; }
    bool in_bounds(const Coord& p) const {
        return p.x >= 0 && p.x < dx && p.y >= 0 && p.y < dy && p.z >= 0 && p.z < dz;
    }
    Coord clamp(const Coord& p) const;
    Coord center() const { return {dx / 2, dy / 2, dz / 2}; }
};

// One coordinate per task, indexed by TaskId value.
using LandmarkSet = std::array<Coord, kNumTasks>;

inline const Coord& landmark_of(const LandmarkSet& lm, TaskId t) {
    return lm[static_cast<size_t>(t)];
}

// ---------------------------------------------------------------------------
// Synthetic environment generation
// ---------------------------------------------------------------------------
// Construction order: smooth ellipsoidal "head" with four dark interior lobes
// (lobe centers = corner landmarks, rounded centroid = Center), then the
// sequence intensity transform, then a spherical lesion at a seed-chosen
// off-landmark site, then the orientation axis permutation. Deterministic in
// (spec, geometry): equal inputs give byte-identical voxel arrays.
std::pair<Volume, LandmarkSet> generate_environment(const EnvironmentSpec& spec,
                                                    const Geometry& geo = {});

// Axis permutation. Axial is the identity; Coronal sends voxel (x,y,z) to
// (x,z,y); Sagittal sends (x,y,z) to (z,y,x). Landmarks move with their voxels.
std::pair<Volume, LandmarkSet> apply_orientation(const Volume& v, const LandmarkSet& lm,
                                                 Orientation o);

// Coordinate-only versions of the permutation and its inverse.
Coord permute_coord(const Coord& p, Orientation o);
Coord unpermute_coord(const Coord& p, Orientation o);

// Intensity map for a sequence, defined on [0,1]:
// S1 identity, S2 gamma 0.5, S3 inversion, S4 contrast stretch clamp(2v-1/2).
float sequence_transform(Sequence s, float v);

// Lesion radius in voxels for a pathology class, relative to the smallest
// canonical dimension (12% for PHigh, 6% for PLow).
double lesion_radius(Pathology p, const Geometry& geo);

// ---------------------------------------------------------------------------
// .vol file format
// ---------------------------------------------------------------------------
// Little-endian: magic "SRLV", version u32=1, dx/dy/dz u32, spec bytes
// (sequence, pathology, orientation, reserved=0), seed u64, voxels f32
// z-fastest, then the 5 landmarks as 3 x u32 in TaskId order.

void save_volume(const std::filesystem::path& path, const Volume& v, const LandmarkSet& lm);
std::pair<Volume, LandmarkSet> load_volume(const std::filesystem::path& path);

}  // namespace srl
