#include <cmath>
#include <cstring>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "srl/common.hpp"
#include "srl/volume.hpp"
#include "test_util.hpp"

using namespace srl;

namespace {
const Geometry kDesk{};  // 64 x 64 x 24 with a 15 x 15 x 7 box

EnvironmentSpec spec_of(Sequence s, Pathology p, Orientation o, uint64_t seed) {
    return EnvironmentSpec{s, p, o, seed};
}
}  // namespace

TEST_CASE("geometry validation") {
    CHECK_NOTHROW(kDesk.validate());
    Geometry g = kDesk;
    g.bx = 14;  // even box extent
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = kDesk;
    g.dz = 13;  // below twice the box extent
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = kDesk;
    g.history = 0;
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = kDesk;
    g.history = kMaxHistory + 1;
    CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("voxel indexing is z-fastest and bounds-checked") {
    Volume v;
    v.dx = 3;
    v.dy = 4;
    v.dz = 5;
    v.voxels.assign(60, 0.0f);
    CHECK(v.index(0, 0, 1) == 1);
    CHECK(v.index(0, 1, 0) == 5);
    CHECK(v.index(1, 0, 0) == 20);
    CHECK(v.in_bounds({2, 3, 4}));
    CHECK_FALSE(v.in_bounds({3, 0, 0}));
    CHECK_FALSE(v.in_bounds({0, -1, 0}));
    const Coord c = v.clamp({99, -7, 2});
    CHECK(c.x == 2);
    CHECK(c.y == 0);
    CHECK(c.z == 2);
}

TEST_CASE("generated volumes satisfy the basic contract") {
    const auto [v, lm] = generate_environment(
        spec_of(Sequence::S1, Pathology::PHigh, Orientation::Axial, 3), kDesk);
    CHECK(v.dx == 64);
    CHECK(v.dy == 64);
    CHECK(v.dz == 24);
    for (float f : v.voxels) {
        CHECK(std::isfinite(f));
        CHECK(f >= 0.0f);
        CHECK(f <= 1.0f);
    }
    std::set<std::string> distinct;
    for (const Coord& c : lm) {
        CHECK(v.in_bounds(c));
        distinct.insert(std::to_string(c.x) + "," + std::to_string(c.y) + "," +
                        std::to_string(c.z));
    }
    CHECK(distinct.size() == kNumTasks);  // five distinct landmarks
}

TEST_CASE("generation is deterministic per spec") {
    const auto spec = spec_of(Sequence::S3, Pathology::PLow, Orientation::Coronal, 17);
    const auto [v1, lm1] = generate_environment(spec, kDesk);
    const auto [v2, lm2] = generate_environment(spec, kDesk);
    CHECK(v1.voxels == v2.voxels);
    CHECK(lm1 == lm2);
}

// The center landmark is defined as the per-component nearest-integer
// centroid of the four corner landmarks (independent recomputation).
TEST_CASE("center landmark is the rounded corner centroid") {
    for (uint64_t seed : {0ull, 1ull, 2ull, 9ull, 123ull}) {
        const auto [v, lm] = generate_environment(
            spec_of(Sequence::S2, Pathology::PHigh, Orientation::Axial, seed), kDesk);
        const Coord tl = lm[0], tr = lm[1], bl = lm[2], br = lm[3], center = lm[4];
        CHECK(center.x == std::llround((tl.x + tr.x + bl.x + br.x) / 4.0));
        CHECK(center.y == std::llround((tl.y + tr.y + bl.y + br.y) / 4.0));
        CHECK(center.z == std::llround((tl.z + tr.z + bl.z + br.z) / 4.0));
    }
}

TEST_CASE("corner landmarks sit in their quadrants (canonical orientation)") {
    // Offsets dominate jitter at desk scale, so the orderings are strict.
    for (uint64_t seed = 0; seed < 10; ++seed) {
        const auto [v, lm] = generate_environment(
            spec_of(Sequence::S1, Pathology::PHigh, Orientation::Axial, seed), kDesk);
        const Coord tl = lm[0], tr = lm[1], bl = lm[2], br = lm[3];
        CHECK(tl.x < tr.x);
        CHECK(bl.x < br.x);
        CHECK(tl.y < bl.y);
        CHECK(tr.y < br.y);
        // Landmarks respect the in-volume margin.
        for (const Coord& c : lm) {
            CHECK(c.x >= 2);
            CHECK(c.y >= 2);
            CHECK(c.z >= 2);
            CHECK(c.x <= 61);
            CHECK(c.y <= 61);
            CHECK(c.z <= 21);
        }
    }
}

TEST_CASE("landmarks are dark relative to surrounding tissue") {
    const auto [v, lm] = generate_environment(
        spec_of(Sequence::S1, Pathology::PHigh, Orientation::Axial, 4), kDesk);
    // Each corner lobe center should be darker than the head boundary region
    // around it (the lobes subtract intensity).
    const Coord mid = v.center();
    const float center_val = v.at(mid.x, mid.y, mid.z);
    for (int i = 0; i < 4; ++i) {
        const Coord& c = lm[i];
        CHECK(v.at(c.x, c.y, c.z) < center_val);
    }
}

TEST_CASE("different seeds give different landmark layouts") {
    std::set<std::string> layouts;
    for (uint64_t seed = 0; seed < 50; ++seed) {
        const auto [v, lm] = generate_environment(
            spec_of(Sequence::S1, Pathology::PHigh, Orientation::Axial, seed), kDesk);
        std::string key;
        for (const Coord& c : lm)
            key += std::to_string(c.x) + "," + std::to_string(c.y) + "," +
                   std::to_string(c.z) + ";";
        layouts.insert(key);
    }
    CHECK(layouts.size() >= 45);  // 50 seeds, near-unique layouts
}

TEST_CASE("sequence transforms map [0,1] as documented") {
    for (float x : {0.0f, 0.04f, 0.2f, 0.25f, 0.5f, 0.75f, 0.9f, 1.0f}) {
        CHECK(sequence_transform(Sequence::S1, x) == x);
        CHECK(sequence_transform(Sequence::S2, x) == doctest::Approx(std::sqrt(x)));
        CHECK(sequence_transform(Sequence::S3, x) == doctest::Approx(1.0f - x));
        const float expected = std::min(1.0f, std::max(0.0f, 2.0f * x - 0.5f));
        CHECK(sequence_transform(Sequence::S4, x) == doctest::Approx(expected));
    }
}

TEST_CASE("lesion radius scales with pathology and geometry") {
    CHECK(lesion_radius(Pathology::PHigh, kDesk) == doctest::Approx(0.12 * 24));
    CHECK(lesion_radius(Pathology::PLow, kDesk) == doctest::Approx(0.06 * 24));
}

TEST_CASE("pathologies differ in voxel content") {
    const auto [hi, lm_hi] = generate_environment(
        spec_of(Sequence::S1, Pathology::PHigh, Orientation::Axial, 5), kDesk);
    const auto [lo, lm_lo] = generate_environment(
        spec_of(Sequence::S1, Pathology::PLow, Orientation::Axial, 5), kDesk);
    CHECK(hi.voxels != lo.voxels);
}

TEST_CASE("coordinate permutations match their documented axis maps") {
    const Coord p{3, 7, 11};
    const Coord ax = permute_coord(p, Orientation::Axial);
    CHECK((ax.x == 3 && ax.y == 7 && ax.z == 11));
    const Coord co = permute_coord(p, Orientation::Coronal);
    CHECK((co.x == 3 && co.y == 11 && co.z == 7));
    const Coord sa = permute_coord(p, Orientation::Sagittal);
    CHECK((sa.x == 11 && sa.y == 7 && sa.z == 3));
    for (auto o : {Orientation::Axial, Orientation::Coronal, Orientation::Sagittal}) {
        const Coord back = unpermute_coord(permute_coord(p, o), o);
        CHECK((back.x == p.x && back.y == p.y && back.z == p.z));
        // These permutations are their own inverse.
        const Coord twice = permute_coord(permute_coord(p, o), o);
        CHECK((twice.x == p.x && twice.y == p.y && twice.z == p.z));
    }
}

TEST_CASE("orientation re-slices the same anatomy") {
    for (auto o : {Orientation::Coronal, Orientation::Sagittal}) {
        const auto [va, la] = generate_environment(
            spec_of(Sequence::S2, Pathology::PLow, Orientation::Axial, 8), kDesk);
        const auto [vo, lo] = generate_environment(spec_of(Sequence::S2, Pathology::PLow, o, 8),
                                                   kDesk);
        // Dims permute together with coordinates.
        const Coord dims = permute_coord({va.dx, va.dy, va.dz}, o);
        CHECK(vo.dx == dims.x);
        CHECK(vo.dy == dims.y);
        CHECK(vo.dz == dims.z);
        for (int i = 0; i < kNumTasks; ++i) {
            const Coord q = permute_coord(la[i], o);
            CHECK((lo[i].x == q.x && lo[i].y == q.y && lo[i].z == q.z));
        }
        // Spot-check voxels on a coarse grid: oriented[perm(p)] == canonical[p].
        for (int x = 0; x < va.dx; x += 7)
            for (int y = 0; y < va.dy; y += 7)
                for (int z = 0; z < va.dz; z += 5) {
                    const Coord q = permute_coord({x, y, z}, o);
                    CHECK(vo.at(q.x, q.y, q.z) == va.at(x, y, z));
                }
    }
}

TEST_CASE("apply_orientation round-trips through its own inverse") {
    const auto [v, lm] = generate_environment(
        spec_of(Sequence::S4, Pathology::PHigh, Orientation::Axial, 2), kDesk);
    for (auto o : {Orientation::Coronal, Orientation::Sagittal}) {
        const auto [v1, lm1] = apply_orientation(v, lm, o);
        const auto [v2, lm2] = apply_orientation(v1, lm1, o);
        CHECK(v2.voxels == v.voxels);
        CHECK(lm2 == lm);
    }
}

TEST_CASE("volume file round-trip preserves everything") {
    testutil::TempDir dir;
    const auto spec = spec_of(Sequence::S2, Pathology::PHigh, Orientation::Sagittal, 33);
    const auto [v, lm] = generate_environment(spec, kDesk);
    const auto path = dir / "env.vol";
    save_volume(path, v, lm);
    const auto [v2, lm2] = load_volume(path);
    CHECK(v2.dx == v.dx);
    CHECK(v2.dy == v.dy);
    CHECK(v2.dz == v.dz);
    CHECK(v2.voxels == v.voxels);
    CHECK(lm2 == lm);
    CHECK(v2.spec == spec);
}

TEST_CASE("volume writes are byte-identical across runs") {
    testutil::TempDir dir;
    const auto spec = spec_of(Sequence::S1, Pathology::PLow, Orientation::Axial, 12);
    const auto [v, lm] = generate_environment(spec, kDesk);
    save_volume(dir / "a.vol", v, lm);
    save_volume(dir / "b.vol", v, lm);
    CHECK(testutil::slurp(dir / "a.vol") == testutil::slurp(dir / "b.vol"));
}

TEST_CASE("malformed volume files are rejected") {
    testutil::TempDir dir;
    const auto spec = spec_of(Sequence::S1, Pathology::PHigh, Orientation::Axial, 1);
    const auto [v, lm] = generate_environment(spec, kDesk);
    const auto path = dir / "env.vol";

    save_volume(path, v, lm);
    testutil::corrupt_byte(path, 0);  // magic
    CHECK_THROWS_AS(load_volume(path), ArtifactError);

    save_volume(path, v, lm);
    testutil::corrupt_byte(path, 4);  // version
    CHECK_THROWS_AS(load_volume(path), ArtifactError);

    save_volume(path, v, lm);
    auto bytes = testutil::slurp(path);
    bytes.resize(bytes.size() - 3);  // truncation
    testutil::spit(path, bytes);
    CHECK_THROWS_AS(load_volume(path), ArtifactError);

    save_volume(path, v, lm);
    bytes = testutil::slurp(path);
    bytes.push_back('x');  // trailing junk
    testutil::spit(path, bytes);
    CHECK_THROWS_AS(load_volume(path), ArtifactError);

    save_volume(path, v, lm);
    bytes = testutil::slurp(path);
    // First voxel float sits after the 32-byte header; 2.0f is out of range.
    const float bad = 2.0f;
    std::memcpy(bytes.data() + 32, &bad, sizeof bad);
    testutil::spit(path, bytes);
    CHECK_THROWS_AS(load_volume(path), ArtifactError);

    CHECK_THROWS_AS(load_volume(dir / "missing.vol"), ArtifactError);
}
