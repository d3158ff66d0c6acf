#include "doctest.h"

#include <cmath>
#include <random>

#include "nms/curvature.hpp"
#include "nms/errors.hpp"
#include "nms/set_solver.hpp"

using namespace nms;

namespace {

SetProblem with_omega(const Grid& g, const Shape& exterior, const Shape& omega, const TailModel& tail, double s) {
    SetProblem p{rasterize(exterior, g, [&](const Point& x) { return !omega.contains(x); })};
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!p.exterior.frozen[i]) p.exterior.values[i] = 0;
    p.tail = tail;
    p.s = s;
    return p;
}

// 1D line of `total` cells with the middle `free` ones unfrozen and random binary data elsewhere.
SetProblem random_line(int total, int free, double s, std::mt19937_64& rng) {
    const Grid g = Grid::line(0, 1, total);
    IndicatorField f(g);
    const int lo = (total - free) / 2;
    std::bernoulli_distribution B(0.5);
    for (int i = 0; i < total; ++i) {
        f.frozen[i] = i < lo || i >= lo + free;
        f.values[i] = f.frozen[i] && B(rng) ? 1.0 : 0.0;
    }
    SetProblem p{f};
    p.tail = B(rng) ? TailModel::empty() : TailModel::full();
    p.s = s;
    return p;
}

double occupancy_where(const SetSolution& sol, const Mask& omega, const std::function<bool(const Point&)>& sel) {
    double in = 0, n = 0;
    for (std::size_t i = 0; i < omega.size(); ++i) {
        if (!omega[i] || !sel(sol.E.grid.center(i))) continue;
        in += sol.E.values[i];
        n += 1;
    }
    return in / n;
}

} // namespace

TEST_CASE("exactness chain on 1D instances") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> S(0.1, 0.9);
    for (int t = 0; t < 10; ++t) {
        const auto p = random_line(24, t % 2 ? 12 : 16, S(rng), rng);
        const auto mc = mincut_minimize(p);
        const auto bf = brute_force(p);
        const auto rl = relaxed_minimize(p);
        const double ref = bf.energy.total;
        CHECK(std::abs(mc.energy.total - ref) <= 1e-9 * std::max(1.0, ref));
        CHECK(std::abs(rl.thresholded.energy.total - ref) <= 1e-6 * std::max(1.0, ref));
        CHECK(rl.thresholded.energy.total >= rl.energy - 1e-6);
        CHECK(std::abs(mc.certificate - mc.energy.total) <= 1e-6);
        CHECK(mc.occupancy >= 0);
        CHECK(mc.occupancy <= 1);
        for (std::size_t i = 0; i < mc.E.size(); ++i)
            if (p.exterior.frozen[i]) CHECK(mc.E.values[i] == p.exterior.values[i]);
    }
}

TEST_CASE("empty exterior") {
    const Grid g = Grid::square(-1.25, 1.25, 16);
    const auto p = with_omega(g, Shape::nothing(), Shape::ball({0, 0}, 1), TailModel::empty(), 0.4);
    const auto mc = mincut_minimize(p);
    CHECK(mc.occupancy == 0.0);
    const auto rl = relaxed_minimize(p);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(rl.u.values[i] <= 1e-6);
    CHECK(std::abs(rl.energy) <= 1e-9);
}

TEST_CASE("half-space rigidity at 64 cells") {
    const Grid g = Grid::square(-1.25, 1.25, 64);
    const auto p = with_omega(g, Shape::half_space({0, 1}, 0), Shape::ball({0, 0}, 1), TailModel::half_space({0, 1}, 0), 0.5);
    const auto sol = mincut_minimize(p);
    const Mask om = p.omega();
    CHECK(occupancy_where(sol, om, [](const Point& x) { return x[1] < 0; }) >= 0.98);
    CHECK(occupancy_where(sol, om, [](const Point& x) { return x[1] > 0; }) <= 0.02);
    // one-cell band around the flat interface
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!om[i]) continue;
        const double y = g.center(i)[1];
        if (y < -g.h()) CHECK(sol.E.values[i] == 1.0);
        if (y > g.h()) CHECK(sol.E.values[i] == 0.0);
    }
}

TEST_CASE("borderline alpha positions") {
    const Grid g = Grid::square(-2, 2, 32);
    const auto hs = Shape::half_space({0, 1}, 0);
    const auto tail = TailModel::half_space({0, 1}, 0);
    for (double s : {0.5, 0.1}) {
        const auto below = mincut_minimize(with_omega(g, hs, Shape::ball({0, -1}, 0.6), tail, s));
        const auto above = mincut_minimize(with_omega(g, hs, Shape::ball({0, 1}, 0.6), tail, s));
        const auto mid = mincut_minimize(with_omega(g, hs, Shape::ball({0, 0}, 0.6), tail, s));
        CHECK(below.occupancy >= 0.99);
        CHECK(above.occupancy <= 0.01);
        CHECK(std::abs(mid.occupancy - 0.5) <= 0.1);
    }
}

TEST_CASE("relaxed thresholding on a half-ring") {
    for (double delta : {0.3, 0.9}) {
        const auto p = half_ring_problem(delta, 0.5, 16);
        const auto mc = mincut_minimize(p);
        const auto rl = relaxed_minimize(p);
        std::size_t diff = 0;
        for (std::size_t i = 0; i < mc.E.size(); ++i) diff += mc.E.values[i] != rl.thresholded.E.values[i];
        CHECK(diff <= mc.E.size() / 100);
        CHECK(rl.thresholded.energy.total >= rl.energy - 1e-6);
        CHECK(std::abs(rl.thresholded.energy.total - mc.energy.total) <= 1e-6 * mc.energy.total);
    }
}

TEST_CASE("complement duality") {
    const auto p = ramp_problem(0.3, 1.0, std::numbers::pi / 8, 24, false);
    const auto q = ramp_problem(0.3, 1.0, std::numbers::pi / 8, 24, true);
    const auto a = mincut_minimize(p), b = mincut_minimize(q);
    CHECK(std::abs(a.energy.total - b.energy.total) <= 1e-9 * a.energy.total);
    std::size_t diff = 0;
    for (std::size_t i = 0; i < a.E.size(); ++i) diff += a.E.values[i] + b.E.values[i] != 1.0;
    CHECK(diff <= a.E.size() / 100);
}

TEST_CASE("Euler-Lagrange residual at interface points of a minimizer") {
    const double s = 0.5;
    const auto p = ramp_problem(s, 1.0, std::numbers::pi / 8, 32, false);
    const auto sol = mincut_minimize(p);
    const Grid& g = sol.E.grid;
    const Mask om = p.omega();
    const double tol = 10 * std::pow(g.h(), 1 - s) * curvature_kernel_scale(g, s);
    int checked = 0;
    auto probe = [&](std::size_t a, std::size_t b) {
        if (!om[a] || !om[b] || sol.E.values[a] == sol.E.values[b]) return;
        const Point ca = g.center(a), cb = g.center(b);
        const Point q{0.5 * (ca[0] + cb[0]), 0.5 * (ca[1] + cb[1])};
        if (std::hypot(q[0], q[1]) > 0.75) return;
        CHECK(std::abs(curvature_set(sol.E, p.tail, q, s).value) <= tol);
        ++checked;
    };
    for (int j = 0; j < g.cells(1); ++j)
        for (int i = 0; i < g.cells(0); ++i) {
            if (i + 1 < g.cells(0)) probe(g.index(i, j), g.index(i + 1, j));
            if (j + 1 < g.cells(1)) probe(g.index(i, j), g.index(i, j + 1));
        }
    CHECK(checked > 0);
}

TEST_CASE("brute force edge cases") {
    const Grid g = Grid::line(0, 1, 9);
    IndicatorField f(g);
    for (int i = 0; i < 9; ++i) {
        f.frozen[i] = i != 4;
        f.values[i] = i < 3 || i == 8 ? 1.0 : 0.0;
    }
    SetProblem one{f};
    one.s = 0.6;
    const SetModel m(one);
    const auto bf = brute_force(one);
    CHECK(bf.E.values[4] == (m.cost_one(0) < m.cost_zero(0) ? 1.0 : 0.0));

    IndicatorField all(g);
    std::fill(all.frozen.begin(), all.frozen.end(), 1);
    all.values[2] = 1;
    SetProblem frozen{all};
    const auto fz = brute_force(frozen);
    CHECK(fz.E.values == all.values);
    CHECK(fz.energy.total == 0.0);

    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(brute_force(random_line(30, 21, 0.5, rng)), CapacityError);
    SetProblem bad = one;
    bad.s = 1.0;
    CHECK_THROWS_AS(mincut_minimize(bad), ParameterError);
}
