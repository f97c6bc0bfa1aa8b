#include "srl/io_util.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace srl::io {

void verify_host_endianness() {
    static_assert(sizeof(float) == 4 && sizeof(double) == 8);
    if constexpr (std::endian::native != std::endian::little)
        throw ConfigError("this build requires a little-endian host");
}

void read_bytes(std::istream& is, void* p, size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(is.gcount()) != n)
        throw ArtifactError("truncated file: expected " + std::to_string(n) + " more bytes");
}

void expect_magic(std::istream& is, const char magic[4], const std::string& what) {
    char got[4];
    is.read(got, 4);
    if (is.gcount() != 4 || std::memcmp(got, magic, 4) != 0)
        throw ArtifactError("not a " + what + " file (bad magic)");
}

void atomic_write_file(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer) {
    std::ostringstream buf(std::ios::binary);
    writer(buf);
    const std::string payload = buf.str();

    auto dir = path.parent_path();
    if (dir.empty()) dir = ".";
    std::filesystem::create_directories(dir);
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ArtifactError("cannot open for writing: " + tmp);
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        out.flush();
        if (!out) throw ArtifactError("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw ArtifactError("rename failed for " + path.string() + ": " + ec.message());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<char> read_binary_file(const std::filesystem::path& path, const std::string& what) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw ArtifactError("missing " + what + ": " + path.string());
    const auto size = static_cast<size_t>(in.tellg());
    in.seekg(0);
    std::vector<char> data(size);
    if (size > 0) in.read(data.data(), static_cast<std::streamsize>(size));
    if (static_cast<size_t>(in.gcount()) != size)
        throw ArtifactError("short read on " + what + ": " + path.string());
    return data;
}

}  // namespace srl::io
