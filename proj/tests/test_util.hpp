#pragma once

// Shared helpers for the test binaries: scratch directories and small file
// utilities for corruption/round-trip checks.

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace testutil {

class TempDir {
public:
    TempDir() {
        static std::atomic<uint64_t> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("srl-test-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::vector<char> slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::vector<char>& bytes) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    spit(p, std::vector<char>(text.begin(), text.end()));
}

inline void corrupt_byte(const std::filesystem::path& p, size_t offset) {
    std::vector<char> bytes = slurp(p);
    bytes.at(offset) = static_cast<char>(bytes.at(offset) ^ 0x5a);
    spit(p, bytes);
}

}  // namespace testutil
