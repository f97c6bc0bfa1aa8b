#include "srl/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "srl/io_util.hpp"
#include "srl/rng.hpp"

namespace srl {

void Geometry::validate() const {
    if (dx <= 0 || dy <= 0 || dz <= 0) throw ConfigError("volume dims must be positive");
    if (bx <= 0 || by <= 0 || bz <= 0) throw ConfigError("box extents must be positive");
    if (bx % 2 == 0 || by % 2 == 0 || bz % 2 == 0)
        throw ConfigError("box extents must be odd so the center voxel is well-defined");
    if (dx < 2 * bx || dy < 2 * by || dz < 2 * bz)
        throw ConfigError("volume dims must be at least twice the box extents");
    if (history < 1 || history > kMaxHistory)
        throw ConfigError("history must be in [1, " + std::to_string(kMaxHistory) + "]");
}

Coord Volume::clamp(const Coord& p) const {
    return {std::clamp(p.x, 0, dx - 1), std::clamp(p.y, 0, dy - 1), std::clamp(p.z, 0, dz - 1)};
}

float sequence_transform(Sequence s, float v) {
    switch (s) {
        case Sequence::S1: return v;
        case Sequence::S2: return std::sqrt(v);  // gamma 0.5
        case Sequence::S3: return 1.0f - v;
        case Sequence::S4: return std::clamp(2.0f * v - 0.5f, 0.0f, 1.0f);
    }
    throw ConfigError("unknown sequence");
}

double lesion_radius(Pathology p, const Geometry& geo) {
    const double min_dim = std::min({geo.dx, geo.dy, geo.dz});
    return (p == Pathology::PHigh ? 0.12 : 0.06) * min_dim;
}

namespace {

// Lobe layout scales with the canonical dims so small test volumes still get
// four separated lobes. Offsets are measured from a jittered interior center;
// x splits left/right, y splits top/bottom (smaller y = "top").
struct LobeLayout {
    int32_t off_x, off_y;      // quadrant offsets
    int32_t jitter_xy;         // per-lobe placement jitter, each axis
    int32_t jitter_z;
    int32_t center_jitter;     // jitter of the shared ventricle center
    double sigma_xy, sigma_z;  // lobe Gaussian widths
};

LobeLayout layout_for(const Geometry& g) {
    LobeLayout L;
    L.off_x = std::max<int32_t>(2, static_cast<int32_t>(std::lround(0.15 * g.dx)));
    L.off_y = std::max<int32_t>(2, static_cast<int32_t>(std::lround(0.12 * g.dy)));
    const int32_t min_xy = std::min(g.dx, g.dy);
    L.jitter_xy = std::max<int32_t>(1, static_cast<int32_t>(std::lround(0.04 * min_xy)));
    L.jitter_z = std::max<int32_t>(1, static_cast<int32_t>(std::lround(0.06 * g.dz)));
    L.center_jitter = L.jitter_xy;
    L.sigma_xy = std::max(1.5, 0.035 * min_xy);
    L.sigma_z = std::max(1.0, 0.05 * g.dz);
    return L;
}

Coord clamp_margin(const Coord& p, const Geometry& g, int32_t m) {
    return {std::clamp(p.x, m, g.dx - 1 - m), std::clamp(p.y, m, g.dy - 1 - m),
            std::clamp(p.z, m, g.dz - 1 - m)};
}

}  // namespace

std::pair<Volume, LandmarkSet> generate_environment(const EnvironmentSpec& spec,
                                                    const Geometry& geo) {
    geo.validate();

    // Anatomy depends on (sequence, pathology, seed); orientation only
    // permutes afterwards, mirroring re-sliced acquisitions of one subject.
    const uint64_t anatomy_key =
        static_cast<uint64_t>(spec.sequence) * 2 + static_cast<uint64_t>(spec.pathology);
    Rng rng = Rng(spec.seed).fork(anatomy_key);
    Rng place_rng = rng.fork(1);
    Rng lesion_rng = rng.fork(2);

    const LobeLayout L = layout_for(geo);

    // --- Lobe centers (= corner landmarks) ---
    const Coord vol_center{geo.dx / 2, geo.dy / 2, geo.dz / 2};
    const auto cj = [&](Rng& r) {
        return static_cast<int32_t>(r.range(-L.center_jitter, L.center_jitter));
    };
    const Coord vent_center =
        clamp_margin({vol_center.x + cj(place_rng), vol_center.y + cj(place_rng),
                      vol_center.z + cj(place_rng)},
                     geo, 2);

    LandmarkSet lm{};
    const std::array<std::pair<int32_t, int32_t>, 4> quadrant = {{
        {-L.off_x, -L.off_y},  // TopLeft
        {+L.off_x, -L.off_y},  // TopRight
        {-L.off_x, +L.off_y},  // BottomLeft
        {+L.off_x, +L.off_y},  // BottomRight
    }};
    for (int i = 0; i < 4; ++i) {
        const auto jx = static_cast<int32_t>(place_rng.range(-L.jitter_xy, L.jitter_xy));
        const auto jy = static_cast<int32_t>(place_rng.range(-L.jitter_xy, L.jitter_xy));
        const auto jz = static_cast<int32_t>(place_rng.range(-L.jitter_z, L.jitter_z));
        lm[i] = clamp_margin({vent_center.x + quadrant[i].first + jx,
                              vent_center.y + quadrant[i].second + jy, vent_center.z + jz},
                             geo, 2);
    }
    // Center landmark: per-component rounded centroid of the four lobes.
    const auto centroid = [&](auto pick) {
        return static_cast<int32_t>(
            std::llround((pick(lm[0]) + pick(lm[1]) + pick(lm[2]) + pick(lm[3])) / 4.0));
    };
    lm[4] = {centroid([](const Coord& c) { return c.x; }),
             centroid([](const Coord& c) { return c.y; }),
             centroid([](const Coord& c) { return c.z; })};

    // --- Render head + lobes, apply the sequence transform per voxel ---
    Volume v;
    v.dx = geo.dx;
    v.dy = geo.dy;
    v.dz = geo.dz;
    v.spec = spec;
    v.voxels.resize(static_cast<size_t>(geo.dx) * geo.dy * geo.dz);

    const double cx = (geo.dx - 1) / 2.0, cy = (geo.dy - 1) / 2.0, cz = (geo.dz - 1) / 2.0;
    const double ax = 0.45 * geo.dx, ay = 0.45 * geo.dy, az = 0.45 * geo.dz;
    const double inv_sxy2 = 1.0 / (2.0 * L.sigma_xy * L.sigma_xy);
    const double inv_sz2 = 1.0 / (2.0 * L.sigma_z * L.sigma_z);

    size_t idx = 0;
    for (int32_t x = 0; x < geo.dx; ++x) {
        for (int32_t y = 0; y < geo.dy; ++y) {
            for (int32_t z = 0; z < geo.dz; ++z, ++idx) {
                const double rx = (x - cx) / ax, ry = (y - cy) / ay, rz = (z - cz) / az;
                const double rho2 = rx * rx + ry * ry + rz * rz;
                double val = rho2 < 1.0 ? 0.8 * (1.0 - rho2) : 0.0;
                for (int i = 0; i < 4; ++i) {
                    const double lx = x - lm[i].x, ly = y - lm[i].y, lz = z - lm[i].z;
                    const double e = (lx * lx + ly * ly) * inv_sxy2 + lz * lz * inv_sz2;
                    if (e < 12.0) val -= 0.55 * std::exp(-e);
                }
                val = std::clamp(val, 0.0, 1.0);
                v.voxels[idx] = sequence_transform(spec.sequence, static_cast<float>(val));
            }
        }
    }

    // --- Lesion: blend toward a bright plateau inside a sphere placed away
    // from every landmark (rejection sampling on the lesion stream) ---
    const double radius = lesion_radius(spec.pathology, geo);
    const auto margin = static_cast<int32_t>(std::ceil(radius)) + 1;
    Coord lesion{};
    for (int attempt = 0;; ++attempt) {
        if (attempt >= 10000) throw ConfigError("no valid lesion site in this geometry");
        lesion = {static_cast<int32_t>(lesion_rng.range(margin, geo.dx - 1 - margin)),
                  static_cast<int32_t>(lesion_rng.range(margin, geo.dy - 1 - margin)),
                  static_cast<int32_t>(lesion_rng.range(margin, geo.dz - 1 - margin))};
        const bool clear = std::all_of(lm.begin(), lm.end(), [&](const Coord& l) {
            return euclidean(lesion, l) >= radius + 3.0;
        });
        if (clear) break;
    }
    const auto reach = static_cast<int32_t>(std::ceil(radius));
    for (int32_t x = lesion.x - reach; x <= lesion.x + reach; ++x) {
        for (int32_t y = lesion.y - reach; y <= lesion.y + reach; ++y) {
            for (int32_t z = lesion.z - reach; z <= lesion.z + reach; ++z) {
                if (!v.in_bounds({x, y, z})) continue;
                const double d = euclidean({x, y, z}, lesion);
                if (d >= radius) continue;
                const double t = d / radius;
                const auto w = static_cast<float>(1.0 - t * t);  // smooth edge
                float& vox = v.voxels[v.index(x, y, z)];
                vox = std::clamp(vox * (1.0f - w) + 0.9f * w, 0.0f, 1.0f);
            }
        }
    }

    return apply_orientation(v, lm, spec.orientation);
}

Coord permute_coord(const Coord& p, Orientation o) {
    switch (o) {
        case Orientation::Axial: return p;
        case Orientation::Coronal: return {p.x, p.z, p.y};
        case Orientation::Sagittal: return {p.z, p.y, p.x};
    }
    throw ConfigError("unknown orientation");
}

Coord unpermute_coord(const Coord& p, Orientation o) {
    // Both non-trivial permutations are self-inverse axis swaps.
    return permute_coord(p, o);
}

std::pair<Volume, LandmarkSet> apply_orientation(const Volume& v, const LandmarkSet& lm,
                                                 Orientation o) {
    if (o == Orientation::Axial) return {v, lm};

    const Coord new_dims = permute_coord({v.dx, v.dy, v.dz}, o);
    Volume out;
    out.dx = new_dims.x;
    out.dy = new_dims.y;
    out.dz = new_dims.z;
    out.spec = v.spec;
    out.voxels.resize(v.voxels.size());
    for (int32_t x = 0; x < v.dx; ++x)
        for (int32_t y = 0; y < v.dy; ++y)
            for (int32_t z = 0; z < v.dz; ++z) {
                const Coord q = permute_coord({x, y, z}, o);
                out.voxels[out.index(q.x, q.y, q.z)] = v.at(x, y, z);
            }

    LandmarkSet out_lm{};
    for (int i = 0; i < kNumTasks; ++i) out_lm[i] = permute_coord(lm[i], o);
    return {out, out_lm};
}

// ---------------------------------------------------------------------------
// .vol I/O
// ---------------------------------------------------------------------------

static constexpr char kVolMagic[4] = {'S', 'R', 'L', 'V'};

void save_volume(const std::filesystem::path& path, const Volume& v, const LandmarkSet& lm) {
    io::atomic_write_file(path, [&](std::ostream& os) {
        io::write_bytes(os, kVolMagic, 4);
        io::write_u32(os, 1);
        io::write_u32(os, static_cast<uint32_t>(v.dx));
        io::write_u32(os, static_cast<uint32_t>(v.dy));
        io::write_u32(os, static_cast<uint32_t>(v.dz));
        io::write_u8(os, static_cast<uint8_t>(v.spec.sequence));
        io::write_u8(os, static_cast<uint8_t>(v.spec.pathology));
        io::write_u8(os, static_cast<uint8_t>(v.spec.orientation));
        io::write_u8(os, 0);  // reserved
        io::write_u64(os, v.spec.seed);
        io::write_bytes(os, v.voxels.data(), v.voxels.size() * sizeof(float));
        for (const Coord& c : lm) {
            io::write_u32(os, static_cast<uint32_t>(c.x));
            io::write_u32(os, static_cast<uint32_t>(c.y));
            io::write_u32(os, static_cast<uint32_t>(c.z));
        }
    });
}

std::pair<Volume, LandmarkSet> load_volume(const std::filesystem::path& path) {
    const auto data = io::read_binary_file(path, "volume");
    std::istringstream is(std::string(data.begin(), data.end()), std::ios::binary);

    io::expect_magic(is, kVolMagic, "volume");
    const uint32_t version = io::read_u32(is);
    if (version != 1)
        throw ArtifactError("unsupported volume version " + std::to_string(version));

    Volume v;
    v.dx = static_cast<int32_t>(io::read_u32(is));
    v.dy = static_cast<int32_t>(io::read_u32(is));
    v.dz = static_cast<int32_t>(io::read_u32(is));
    if (v.dx <= 0 || v.dy <= 0 || v.dz <= 0 ||
        static_cast<uint64_t>(v.dx) * v.dy * v.dz > (1ull << 31))
        throw ArtifactError("volume dims out of range");

    const uint8_t seq = io::read_u8(is), pat = io::read_u8(is), ori = io::read_u8(is);
    const uint8_t reserved = io::read_u8(is);
    if (seq >= kNumSequences || pat >= kNumPathologies || ori >= kNumOrientations ||
        reserved != 0)
        throw ArtifactError("volume spec bytes out of range");
    v.spec.sequence = static_cast<Sequence>(seq);
    v.spec.pathology = static_cast<Pathology>(pat);
    v.spec.orientation = static_cast<Orientation>(ori);
    v.spec.seed = io::read_u64(is);

    const size_t n = static_cast<size_t>(v.dx) * v.dy * v.dz;
    v.voxels.resize(n);
    io::read_bytes(is, v.voxels.data(), n * sizeof(float));
    for (float f : v.voxels)
        if (!std::isfinite(f) || f < 0.0f || f > 1.0f)
            throw ArtifactError("volume voxel outside [0,1]");

    LandmarkSet lm{};
    for (int i = 0; i < kNumTasks; ++i) {
        lm[i] = {static_cast<int32_t>(io::read_u32(is)), static_cast<int32_t>(io::read_u32(is)),
                 static_cast<int32_t>(io::read_u32(is))};
        if (!v.in_bounds(lm[i])) throw ArtifactError("landmark outside volume bounds");
    }
    if (is.peek() != EOF) throw ArtifactError("trailing bytes in volume file");
    return {v, lm};
}

}  // namespace srl
