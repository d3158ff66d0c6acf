#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "nms/errors.hpp"
#include "nms/experiments.hpp"
#include "nms/graph_solver.hpp"

using namespace nms;
using nlohmann::json;

namespace {

const char* kAnnulus = R"({
  "experiment": "annulus",
  "geometry": {"rho": 1, "R": 2},
  "parameters": {"M_over_M0": [0.5, 1, 2], "mesh": 128},
  "output": "out/annulus",
  "seed": 7
})";

template <class T>
T cell(const ExperimentReport& r, std::size_t row, const std::string& col) {
    const auto it = std::find(r.columns.begin(), r.columns.end(), col);
    REQUIRE(it != r.columns.end());
    return std::get<T>(r.rows.at(row).at(static_cast<std::size_t>(it - r.columns.begin())));
}

} // namespace

TEST_CASE("config round trip and hashing") {
    const auto c = ExperimentConfig::parse(kAnnulus);
    CHECK(c.experiment == "annulus");
    CHECK(c.seed == 7);
    const auto again = ExperimentConfig::parse(c.serialize());
    CHECK(again == c);
    CHECK(again.serialize() == c.serialize());
    CHECK(again.hash() == c.hash());
    CHECK(c.hash().size() == 16);

    auto other = c;
    other.seed = 8;
    CHECK(other.hash() != c.hash());

    for (const auto& f : std::filesystem::directory_iterator(NMS_CONFIG_DIR)) {
        const auto cfg = ExperimentConfig::load(f.path());
        CHECK(ExperimentConfig::parse(cfg.serialize()) == cfg);
        CHECK_NOTHROW(validate(cfg));
    }
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(ExperimentConfig::parse(R"({"experiment": "nope"})"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse(R"({"experiment": "annulus", "colour": 1})"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse(R"({"experiment": "annulus", "geometry": {"rho": 1, "R": 2, "Q": 0}})"),
                    ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse(R"({"experiment": "annulus", "geometry": {"rho": 2, "R": 1}})"),
                    Error);
    try {
        ExperimentConfig::parse("{\n  \"experiment\": \"annulus\",\n  oops\n}");
        FAIL("expected a parse error");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("column") != std::string::npos);
    }
    const auto& ids = experiment_ids();
    CHECK(ids.size() == 10);
    CHECK(std::find(ids.begin(), ids.end(), "cylinder-demo") != ids.end());
}

TEST_CASE("annulus report") {
    const auto cfg = ExperimentConfig::parse(kAnnulus);
    const auto r = run(cfg);
    CHECK(r.config_hash == cfg.hash());
    CHECK(r.version == kVersion);
    REQUIRE(r.rows.size() == 3);
    CHECK_FALSE(cell<bool>(r, 0, "sticks"));
    CHECK_FALSE(cell<bool>(r, 1, "sticks"));
    CHECK(cell<bool>(r, 2, "sticks"));
    const double M0 = std::log(std::sqrt(3.0) + 2);
    CHECK(std::abs(cell<double>(r, 2, "M0") - M0) <= 1e-12);
    CHECK(std::abs(cell<double>(r, 2, "gap") - M0) <= 1e-12);
    CHECK(cell<std::string>(r, 0, "provenance") == "derived");

    // byte-identical CSV on a rerun
    CHECK(run(cfg).csv() == r.csv());
    const auto j = r.json();
    CHECK(j.at("config_hash") == cfg.hash());

    const auto dir = std::filesystem::temp_directory_path() / "nms_report_test";
    std::filesystem::remove_all(dir);
    write_report(r, dir);
    std::ifstream in(dir / "annulus.csv");
    const std::string text((std::istreambuf_iterator<char>(in)), {});
    CHECK(text == r.csv());
    CHECK(std::filesystem::exists(dir / "annulus.json"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("s to 1 report carries the analytic target") {
    const auto cfg = ExperimentConfig::parse(R"({
      "experiment": "asymptotics-s1",
      "geometry": {"set": {"type": "ball", "center": [0, 0], "radius": 0.5},
                   "domain": {"type": "box", "lower": [-1, -1], "upper": [1, 1]}, "cells": 48},
      "parameters": {"s": [0.9, 0.95, 0.975]}
    })");
    const auto r = run(cfg);
    bool found = false;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        if (cell<std::string>(r, i, "kind") != "limit_full") continue;
        found = true;
        CHECK(cell<double>(r, i, "target") == doctest::Approx(2 * std::numbers::pi));
        CHECK(std::abs(cell<double>(r, i, "value") - 2 * std::numbers::pi) <= 0.1 * 2 * std::numbers::pi);
    }
    CHECK(found);
}

TEST_CASE("cylinder demo with zero data") {
    const auto cfg = ExperimentConfig::parse(R"({
      "experiment": "cylinder-demo",
      "geometry": {"rho": 1, "R": 2, "W": 1, "cells": 32, "far_level": 0},
      "parameters": {"M": 0, "s": [0.5, 0.2]}
    })");
    const auto r = cylinder_demo(cfg);
    REQUIRE(r.rows.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(std::abs(cell<double>(r, i, "min_u")) <= 1e-10);
        CHECK(std::abs(cell<double>(r, i, "left_gap")) <= 1e-10);
        CHECK(std::abs(cell<double>(r, i, "right_gap")) <= 1e-10);
    }
}

TEST_CASE("helpers") {
    const Grid g = Grid::square(-1, 1, 4);
    const auto f = rasterize(Shape::half_space({0, 1}, 0), g, {});
    const Point q = nearest_interface_face(f, {0.3, 0.1});
    CHECK(q[0] == doctest::Approx(0.25));
    CHECK(q[1] == doctest::Approx(0.0));
    CHECK(run_length_encode(f) == "1:8,8");
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_double(1.0 / 3)) == 1.0 / 3);

    const auto sh = shape_from_json(json::parse(R"({"type": "complement", "a": {"type": "ball", "center": [0, 0], "radius": 1}})"));
    CHECK(sh.contains({2, 0}));
    CHECK_FALSE(sh.contains({0, 0}));
    const auto t = tail_from_json(json::parse(R"({"type": "cone", "vertex": [0, 0], "direction": [0, 1], "opening": 1.5})"));
    CHECK(*t.alpha(2) == doctest::Approx(1.5));
}
