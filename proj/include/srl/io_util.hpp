#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "srl/common.hpp"

namespace srl::io {

// All multi-byte values are little-endian on disk. The helpers below assume a
// little-endian host (checked at startup in verify_host_endianness()).

void verify_host_endianness();

// --- Writing ---------------------------------------------------------------

inline void write_bytes(std::ostream& os, const void* p, size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
inline void write_u8(std::ostream& os, uint8_t v) { write_bytes(os, &v, 1); }
inline void write_u32(std::ostream& os, uint32_t v) { write_bytes(os, &v, 4); }
inline void write_u64(std::ostream& os, uint64_t v) { write_bytes(os, &v, 8); }
inline void write_f32(std::ostream& os, float v) { write_bytes(os, &v, 4); }
inline void write_f64(std::ostream& os, double v) { write_bytes(os, &v, 8); }

// --- Reading (throws ArtifactError on truncation) ---------------------------

void read_bytes(std::istream& is, void* p, size_t n);

inline uint8_t read_u8(std::istream& is) {
    uint8_t v;
    read_bytes(is, &v, 1);
    return v;
}
inline uint32_t read_u32(std::istream& is) {
    uint32_t v;
    read_bytes(is, &v, 4);
    return v;
}
inline uint64_t read_u64(std::istream& is) {
    uint64_t v;
    read_bytes(is, &v, 8);
    return v;
}
inline float read_f32(std::istream& is) {
    float v;
    read_bytes(is, &v, 4);
    return v;
}
inline double read_f64(std::istream& is) {
    double v;
    read_bytes(is, &v, 8);
    return v;
}

// Reads a 4-byte magic and compares; mismatch or truncation throws
// ArtifactError mentioning `what` (e.g., "volume").
void expect_magic(std::istream& is, const char magic[4], const std::string& what);

// --- Checksums ---------------------------------------------------------------

// FNV-1a, 64-bit.
struct Fnv1a {
    uint64_t hash = 14695981039346656037ULL;

    void update(const void* data, size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            hash ^= p[i];
            hash *= 1099511628211ULL;
        }
    }
};

inline uint64_t fnv1a(const void* data, size_t n) {
    Fnv1a f;
    f.update(data, n);
    return f.hash;
}

// --- Files -------------------------------------------------------------------

// Serializes via `writer` into memory, then writes to a temp file in the same
// directory and renames over `path`. Readers never observe partial files.
void atomic_write_file(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer);

// Whole-file read; missing file throws ArtifactError.
std::string read_file(const std::filesystem::path& path);

// Opens for binary reading; missing file throws ArtifactError mentioning `what`.
std::vector<char> read_binary_file(const std::filesystem::path& path, const std::string& what);

}  // namespace srl::io
