#include "nms/cache.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>

namespace nms {

namespace {

constexpr std::uint32_t kMagic = 0x4e4d5343;  // "NMSC"
constexpr std::uint32_t kVersion = 1;

std::mutex g_mu;
std::string g_dir;

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::filesystem::path path_for(const std::string& kind, const std::vector<double>& key) {
    std::uint64_t h = fnv1a(kind.data(), kind.size());
    h = fnv1a(key.data(), key.size() * sizeof(double), h);
    char name[64];
    std::snprintf(name, sizeof name, "%016llx.bin", static_cast<unsigned long long>(h));
    return std::filesystem::path(g_dir) / kind / name;
}

std::vector<double> kernel_key(const Grid& grid, double exponent, int near_radius) {
    return {double(grid.dim()), double(grid.cells(0)), double(grid.dim() == 2 ? grid.cells(1) : 1), grid.h(),
            exponent, double(near_radius)};
}

} // namespace

void set_cache_directory(const std::string& dir) {
    std::lock_guard lock(g_mu);
    g_dir = dir;
}

const std::string& cache_directory() { return g_dir; }

std::optional<std::vector<double>> load_blob(const std::string& kind, const std::vector<double>& key) {
    std::lock_guard lock(g_mu);
    if (g_dir.empty()) return std::nullopt;
    std::ifstream in(path_for(kind, key), std::ios::binary);
    if (!in) return std::nullopt;
    std::uint32_t magic = 0, version = 0;
    std::uint64_t nkey = 0, ndata = 0;
    in.read(reinterpret_cast<char*>(&magic), sizeof magic);
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&nkey), sizeof nkey);
    if (!in || magic != kMagic || version != kVersion || nkey != key.size()) return std::nullopt;
    std::vector<double> stored(nkey);
    in.read(reinterpret_cast<char*>(stored.data()), static_cast<std::streamsize>(nkey * sizeof(double)));
    if (!in || std::memcmp(stored.data(), key.data(), nkey * sizeof(double)) != 0) return std::nullopt;
    in.read(reinterpret_cast<char*>(&ndata), sizeof ndata);
    if (!in || ndata > (std::uint64_t{1} << 32)) return std::nullopt;
    std::vector<double> data(ndata);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(ndata * sizeof(double)));
    if (!in) return std::nullopt;
    return data;
}

void store_blob(const std::string& kind, const std::vector<double>& key, const std::vector<double>& data) {
    std::lock_guard lock(g_mu);
    if (g_dir.empty()) return;
    const auto path = path_for(kind, key);
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) return;
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) return;
        const std::uint64_t nkey = key.size(), ndata = data.size();
        out.write(reinterpret_cast<const char*>(&kMagic), sizeof kMagic);
        out.write(reinterpret_cast<const char*>(&kVersion), sizeof kVersion);
        out.write(reinterpret_cast<const char*>(&nkey), sizeof nkey);
        out.write(reinterpret_cast<const char*>(key.data()), static_cast<std::streamsize>(nkey * sizeof(double)));
        out.write(reinterpret_cast<const char*>(&ndata), sizeof ndata);
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(ndata * sizeof(double)));
        if (!out) return;
    }
    std::filesystem::rename(tmp, path, ec);
}

std::optional<std::vector<double>> load_kernel_weights(const Grid& grid, double exponent, int near_radius) {
    return load_blob("kernel", kernel_key(grid, exponent, near_radius));
}

void store_kernel_weights(const Grid& grid, double exponent, int near_radius, const std::vector<double>& w) {
    store_blob("kernel", kernel_key(grid, exponent, near_radius), w);
}

} // namespace nms
