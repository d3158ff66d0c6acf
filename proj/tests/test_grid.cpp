#include "doctest.h"

#include <cmath>
#include <numbers>

#include "nms/errors.hpp"
#include "nms/grid.hpp"

using namespace nms;

namespace {
const auto none = [](const Point&) { return false; };
}

TEST_CASE("grid construction") {
    const Grid g = Grid::line(-1, 1, 4);
    CHECK(g.h() == doctest::Approx(0.5));
    CHECK(g.size() == 4);
    const double expect[] = {-0.75, -0.25, 0.25, 0.75};
    for (int i = 0; i < 4; ++i) CHECK(g.center(i)[0] == doctest::Approx(expect[i]));

    const double lo[] = {-1, -1}, hi[] = {1, 1};
    const int bad[] = {2, 4};
    CHECK_THROWS_AS(Grid::build(lo, hi, bad), ConfigError);

    const Grid f = Grid::line(0, 1, 128);
    CHECK(f.h() == doctest::Approx(1.0 / 128));
    CHECK(f.size() == 128);
    for (std::size_t i = 0; i < f.size(); ++i) {
        CHECK(f.center(i)[0] > 0);
        CHECK(f.center(i)[0] < 1);
    }

    const Grid sq = Grid::square(-1, 1, 6);
    CHECK(sq.index(2, 3) == 2 + 6 * 3);
    CHECK(sq.coords(sq.index(4, 1)) == std::array<int, 2>{4, 1});
    CHECK_THROWS_AS(Grid::square(-1, 1, 4096), CapacityError);
}

TEST_CASE("shape validation") {
    CHECK_THROWS(Shape::annulus(2, 1));
    CHECK_THROWS(Shape::half_ring(0));
    CHECK_THROWS(Shape::ball({0, 0}, -1));
}

TEST_CASE("rasterize and volume") {
    const Grid g = Grid::square(-1, 1, 32);
    const auto hs = rasterize(Shape::half_space({0, 1}, 0), g, none);
    double ones = 0;
    for (double v : hs.values) ones += v;
    CHECK(ones == g.size() / 2);
    CHECK(volume(hs) == doctest::Approx(2.0));

    // center sampling against a 256^2 subsampled oracle
    const Grid g64 = Grid::square(-1, 1, 64), g256 = Grid::square(-1, 1, 256);
    const auto ball = Shape::ball({0, 0}, 0.5);
    RasterOptions sub;
    sub.subsample = true;
    const double oracle = volume(rasterize(ball, g256, none, sub));
    CHECK(std::abs(volume(rasterize(ball, g64, none)) - oracle) <= 2 * g64.h());
    CHECK(std::abs(oracle - std::numbers::pi / 4) < 1e-3);

    const Grid g3 = Grid::square(-1.5, 1.5, 60);
    const auto ring = rasterize(Shape::half_ring(0.2), g3, none);
    for (std::size_t i = 0; i < g3.size(); ++i) {
        if (ring.values[i] == 0) continue;
        const Point c = g3.center(i);
        const double r = std::hypot(c[0], c[1]);
        CHECK(r >= 1.0);
        CHECK(r < 1.2);
        CHECK(c[1] < 0);
    }

    const Grid line = Grid::line(0, 1, 37);
    IndicatorField ones1(line);
    for (double& v : ones1.values) v = 1;
    CHECK(volume(ones1) == doctest::Approx(1.0));
    CHECK(volume(IndicatorField(line)) == 0.0);
}

TEST_CASE("rasterization invariants") {
    const Grid g = Grid::square(-1, 1, 40);
    const auto small = rasterize(Shape::ball({0.1, 0}, 0.3), g, none);
    const auto big = rasterize(Shape::ball({0, 0}, 0.6), g, none);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(small.values[i] <= big.values[i]);

    const auto c = big.complement();
    CHECK(volume(c) == doctest::Approx(g.box_measure() - volume(big)));

    const auto frozen = rasterize(Shape::everything(), g, [](const Point& p) { return p[0] < 0; });
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(frozen.frozen[i] == (g.center(i)[0] < 0));
}

TEST_CASE("disc volume converges at first order") {
    // every misclassified cell meets the circle, so |error| <= 2 sqrt(2) Per h
    const double r = 0.61, per = 2 * std::numbers::pi * r;
    for (int n : {32, 64, 128}) {
        const Grid g = Grid::square(-1, 1, n);
        const double err = std::abs(volume(rasterize(Shape::ball({0, 0}, r), g, none)) - std::numbers::pi * r * r);
        CHECK(err <= 2 * std::sqrt(2.0) * per * g.h());
    }
}
