#include "doctest.h"

#include <cmath>
#include <numbers>

#include "nms/curvature.hpp"
#include "nms/experiments.hpp"

using namespace nms;
using std::numbers::pi;

namespace {

IndicatorField raster(const Shape& E, const Grid& g) { return rasterize(E, g, {}); }

IndicatorField raster_fn(const Grid& g, const std::function<bool(const Point&)>& in) {
    IndicatorField f(g);
    for (std::size_t i = 0; i < g.size(); ++i) f.values[i] = in(g.center(i)) ? 1.0 : 0.0;
    return f;
}

} // namespace

TEST_CASE("half-space curvature lies in the discretization band") {
    const Grid g = Grid::square(-1, 1, 64);
    const auto f = raster(Shape::half_space({0, 1}, 0), g);
    const Point q = nearest_interface_face(f, {0.1, 0});
    for (double s : {0.2, 0.5, 0.8}) {
        const auto c = curvature_set(f, TailModel::half_space({0, 1}, 0), q, s);
        CHECK(std::abs(c.value) <= 5 * std::pow(g.h(), 1 - s) * curvature_kernel_scale(g, s));
    }
}

TEST_CASE("balls, inclusion and complements") {
    const Grid g = Grid::square(-1, 1, 64);
    const double s = 0.5;
    const auto E = raster(Shape::ball({0, 0}, 0.5), g);
    const auto F = raster(Shape::ball({0.2, 0}, 0.7), g);
    const Point q{-0.5, g.h() / 2};
    REQUIRE(nearest_interface_face(E, q) == q);
    REQUIRE(nearest_interface_face(F, q) == q);
    const auto cE = curvature_set(E, TailModel::empty(), q, s);
    const auto cF = curvature_set(F, TailModel::empty(), q, s);
    CHECK(cE.value > 0);
    CHECK(cE.value >= cF.value - 1e-9);

    const auto comp = curvature_set(E.complement(), TailModel::full(), q, s);
    CHECK(std::abs(cE.value + comp.value) <= 1e-9);

    CHECK_THROWS(curvature_set(E, TailModel::empty(), {0, 0}, s));
}

TEST_CASE("translation invariance") {
    const double s = 0.4;
    const Grid g1 = Grid::square(-1, 1, 40);
    const double h = g1.h(), dx = 3 * h, dy = 5 * h;
    const std::array<double, 2> lo{-1 + dx, -1 + dy}, hi{1 + dx, 1 + dy};
    const std::array<int, 2> n{40, 40};
    const Grid gs = Grid::build(lo, hi, n);
    const auto tail1 = TailModel::cone({0, -0.4}, {0, 1}, 1.0);
    const auto tail2 = TailModel::cone({dx, -0.4 + dy}, {0, 1}, 1.0);
    const auto f1 = rasterize(Shape::ball({0.1, 0.05}, 0.45), g1, {});
    const auto f2 = rasterize(Shape::ball({0.1 + dx, 0.05 + dy}, 0.45), gs, {});
    REQUIRE(f1.values == f2.values);
    const Point q1 = nearest_interface_face(f1, {0.55, 0.05});
    const Point q2{q1[0] + dx, q1[1] + dy};
    const double v1 = curvature_set(f1, tail1, q1, s).value, v2 = curvature_set(f2, tail2, q2, s).value;
    CHECK(std::abs(v1 - v2) <= 1e-9 * std::max(1.0, std::abs(v1)));
}

TEST_CASE("four-part split") {
    const Grid g = Grid::square(-1, 1, 64);
    const auto E = raster(Shape::ball({0, 0}, 0.5), g);
    const Point q{-0.5, g.h() / 2};
    CurvatureSplit sp;
    sp.delta = 0.1;
    sp.p = {-0.6, g.h() / 2};
    sp.R = 0.9;
    for (double s : {0.3, 0.7}) {
        const auto c = curvature_set(E, TailModel::empty(), q, s, 0, &sp);
        REQUIRE(c.parts.has_value());
        const auto& p = *c.parts;
        CHECK(std::abs(p.core + p.collar + p.midrange + p.far - c.value) <= 1e-9 * std::max(1.0, std::abs(c.value)));
    }

    // E a cone of opening theta: far part >= (theta/2) R^-s / s
    const double theta = 1.0;
    const auto cone = TailModel::cone({0, -0.8}, {0, 1}, theta);
    const auto C = raster_fn(g, [&](const Point& x) { return cone.contains(x, 2); });
    const Point qc = nearest_interface_face(C, {0.8 * std::sin(theta / 2), -0.8 + 0.8 * std::cos(theta / 2)});
    CurvatureSplit sc;
    sc.delta = 0.1;
    sc.p = {qc[0] + 0.1 * std::cos(theta / 2), qc[1] - 0.1 * std::sin(theta / 2)};
    sc.R = 0.9;
    for (double s : {0.2, 0.5}) {
        const auto c = curvature_set(C, cone, qc, s, 0, &sc);
        CHECK(c.parts->far >= 0.5 * theta * std::pow(sc.R, -s) / s);
    }
}

TEST_CASE("graph-local curvature") {
    const double s = 0.5;
    GraphProfile flat;
    flat.u = [](double) { return 0.0; };
    flat.lo = -1, flat.hi = 1;
    flat.tail = TailModel::supgraph_polynomial({0, 0, 0, 0});
    CHECK(std::abs(curvature_graph_local(flat, 0.2, s, 0.5, 1.0)) <= 1e-8);

    GraphProfile lin = flat;
    lin.u = [](double x) { return 0.3 * x - 0.1; };
    lin.tail = TailModel::supgraph_polynomial({-0.1, 0.3, 0, 0});
    CHECK(std::abs(curvature_graph_local(lin, -0.3, s, 0.5, 1.0)) <= 1e-7);

    GraphProfile par = flat;
    par.u = [](double x) { return x * x; };
    par.tail = TailModel::supgraph_polynomial({0, 0, 1, 0});
    const double vg = curvature_graph_local(par, 0.0, s, 0.5, 1.0);
    CHECK(vg < 0);

    // set-based oracle on the subgraph {x2 < x1^2}
    const Grid g = Grid::square(-1, 1, 128);
    const auto sub = raster_fn(g, [](const Point& x) { return x[1] < x[0] * x[0]; });
    const Point q = nearest_interface_face(sub, {g.h() / 2, 0});
    const double vs = curvature_set(sub, TailModel::supgraph_polynomial({0, 0, 1, 0}).complemented(), q, s).value;
    CHECK(vs < 0);
}

TEST_CASE("alpha catalogue") {
    const std::vector<double> sl{0.05, 0.025, 0.0125, 0.00625};
    struct Case {
        TailModel tail;
        double expected;
        double tol;  // relative when expected != 0, absolute otherwise
    };
    const std::vector<Case> cases{
        {TailModel::cone({0, 0}, {0, 1}, 1.3), 1.3, 0.02},
        {TailModel::supgraph_bounded(-1, 2), pi, 0.02},
        {TailModel::supgraph_polynomial({0, 0, 0, 1}), pi, 0.02},
        {TailModel::slab({0, 1}, 0, 1), 0.0, 0.05},
        {TailModel::supgraph_polynomial({0, 0, 1, 0}), 0.0, 0.05},
    };
    for (const auto& c : cases) {
        for (double R : {2.0, 4.0}) {
            const auto a = alpha_numeric(c.tail, R, {0, 0}, sl);
            if (c.expected != 0) CHECK(std::abs(a.alpha - c.expected) <= c.tol * c.expected);
            else CHECK(std::abs(a.alpha) <= c.tol);
        }
        const double a1 = alpha_numeric(c.tail, 2.0, {0.3, 0.2}, sl).alpha;
        const double a2 = alpha_numeric(c.tail, 4.0, {-0.2, 0.1}, sl).alpha;
        CHECK(std::abs(a1 - a2) <= 1e-6 + 0.02 * std::abs(c.expected));
    }
}

TEST_CASE("curvature as s tends to zero") {
    const std::vector<double> sl{0.1, 0.05, 0.025};
    const Grid g = Grid::square(-1, 1, 48);
    const auto hs = raster(Shape::half_space({0, 1}, 0), g);
    const auto a = curvature_s0_limit(hs, TailModel::half_space({0, 1}, 0), nearest_interface_face(hs, {0.1, 0}), sl);
    CHECK(std::abs(a.limit) <= 0.1);

    const auto ball = raster(Shape::ball({0, 0}, 0.5), g);
    const auto b = curvature_s0_limit(ball, TailModel::empty(), nearest_interface_face(ball, {-0.5, 0}), sl);
    CHECK(b.target == doctest::Approx(2 * pi));
    CHECK(std::abs(b.limit - 2 * pi) <= 0.05 * 2 * pi);

    const double gamma = 1.0;
    const auto cone = TailModel::cone({0, -0.5}, {0, 1}, gamma);
    const auto C = raster_fn(g, [&](const Point& x) { return cone.contains(x, 2); });
    const auto c = curvature_s0_limit(C, cone, nearest_interface_face(C, {0.5 * std::sin(gamma / 2), -0.5 + 0.5 * std::cos(gamma / 2)}), sl);
    const double cross = alpha_numeric(cone, 2.0, {0, 0}, {0.05, 0.025, 0.0125}).alpha;
    CHECK(std::abs(c.limit - (2 * pi - 2 * cross)) <= 0.1 * std::abs(2 * pi - 2 * cross));
}

TEST_CASE("delta threshold") {
    for (double C : {0.5, 10.0, 1e3}) {
        double prev = 1;
        for (double s : {0.2, 0.1, 0.05}) {
            const double d = delta_threshold(s, C, 2);
            CHECK(d > 0);
            CHECK(d < 1);
            CHECK(d < prev);
            prev = d;
        }
        const double w = 2 * pi;
        CHECK(delta_threshold(1.0 - 1e-15, C, 2) == doctest::Approx((8 * w + C / 2) / (8 * w + C)));
    }
}
