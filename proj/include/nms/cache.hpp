#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nms/grid.hpp"

namespace nms {

// Optional on-disk table cache. Disabled while the directory is empty.
// Files carry a format version and the full key; any mismatch is a miss.
void set_cache_directory(const std::string& dir);
const std::string& cache_directory();

std::optional<std::vector<double>> load_kernel_weights(const Grid& grid, double exponent, int near_radius);
void store_kernel_weights(const Grid& grid, double exponent, int near_radius, const std::vector<double>& w);

std::optional<std::vector<double>> load_blob(const std::string& kind, const std::vector<double>& key);
void store_blob(const std::string& kind, const std::vector<double>& key, const std::vector<double>& data);

} // namespace nms
