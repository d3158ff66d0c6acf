#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "nms/grid.hpp"
#include "nms/tail.hpp"

namespace nms {

inline constexpr const char* kVersion = "1.0.0";

/// Experiment configuration. Sections are kept as JSON and checked against the
/// per-experiment key list on parse; typed values are resolved on run.
struct ExperimentConfig {
    std::string experiment;
    nlohmann::json geometry = nlohmann::json::object();
    nlohmann::json parameters = nlohmann::json::object();
    std::string output = "out";
    std::uint64_t seed = 0;

    /// Throws ConfigError with line/column for malformed JSON, and for unknown
    /// ids or keys.
    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);
    /// Canonical form: sorted keys, two-space indent.
    std::string serialize() const;
    /// FNV-1a 64 of the canonical form, as 16 hex digits.
    std::string hash() const;

    bool operator==(const ExperimentConfig&) const = default;
};

const std::vector<std::string>& experiment_ids();

using ReportValue = std::variant<double, std::int64_t, bool, std::string>;

struct ExperimentReport {
    std::string experiment;
    std::string config_hash;
    std::string version = kVersion;
    double wall_time = 0;
    std::vector<std::string> columns;
    std::vector<std::vector<ReportValue>> rows;
    nlohmann::json summary = nlohmann::json::object();
    nlohmann::json checks = nlohmann::json::object();  // name -> bool
    std::vector<std::string> notes;
    std::vector<std::pair<std::string, std::string>> files;  // extra outputs: name, content

    /// Doubles at 17 significant digits; no timing, so identical configs give identical bytes.
    std::string csv() const;
    nlohmann::json json() const;
    bool checks_passed() const;
    void add_row(std::vector<ReportValue> row);
};

/// Resolves every section without running anything.
void validate(const ExperimentConfig& config);
ExperimentReport run(const ExperimentConfig& config);
ExperimentReport cylinder_demo(const ExperimentConfig& config);

/// Writes <id>.csv, <id>.json and the extra files into dir.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

// JSON readers shared with the tests.
Shape shape_from_json(const nlohmann::json& j);
TailModel tail_from_json(const nlohmann::json& j);
Grid grid_from_json(const nlohmann::json& j);

/// Midpoint of the interface face closest to p (between cells of different value).
Point nearest_interface_face(const IndicatorField& field, const Point& p);

/// Run-length encoding of a binary field in index order: "<first value>:<run>,<run>,...".
std::string run_length_encode(const IndicatorField& field);

std::string format_double(double v);

} // namespace nms
