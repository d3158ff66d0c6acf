#include "doctest.h"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "nms/kernel.hpp"
#include "nms/perimeter.hpp"

using namespace nms;
using std::numbers::pi;

namespace {

IndicatorField field_in(const Shape& E, const Grid& g, const Shape& omega) {
    return rasterize(E, g, [&](const Point& p) { return !omega.contains(p); });
}

// P_s(B_1) = int |B \ (B + z)| |z|^-(2+s) dz, with pi minus the lens area of two unit discs
double disc_perimeter_oracle(double s) {
    boost::math::quadrature::tanh_sinh<double> ts;
    const double near = ts.integrate(
        [s](double r) {
            const double q = r > 0 ? 2 * std::asin(std::min(r / 2, 1.0)) / r : 1.0;
            return std::pow(r, -s) * (q + 0.5 * std::sqrt(std::max(0.0, 4 - r * r)));
        },
        0.0, 2.0);
    return 2 * pi * (near + pi * std::pow(2.0, -s) / s);
}

} // namespace

TEST_CASE("disc closed form") {
    for (double s : {0.3, 0.5, 0.8}) {
        const double ref = disc_perimeter_oracle(s);
        CHECK(ball_perimeter_closed_form(1.0, s) == doctest::Approx(ref).epsilon(1e-10));
        CHECK(ball_perimeter_closed_form(2.0, s) == doctest::Approx(std::pow(2.0, 2 - s) * ref).epsilon(1e-10));
    }
}

TEST_CASE("trivial and symmetric fields") {
    const Grid g = Grid::square(-1, 1, 32);
    const auto omega = Shape::ball({0, 0}, 0.8);
    const auto t = KernelTable::build(g, 0.5);
    auto zero = field_in(Shape::nothing(), g, omega);
    CHECK(perimeter(zero, zero.unfrozen_mask(), TailModel::empty(), *t, 0.5).total == 0.0);

    auto f = field_in(Shape::half_space({0.6, 0.8}, 0.1), g, omega);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0, 1);
    for (std::size_t i = 0; i < f.size(); ++i)
        if (!f.frozen[i]) f.values[i] = U(rng);
    const auto tail = TailModel::half_space({0.6, 0.8}, 0.1);
    const auto a = perimeter(f, f.unfrozen_mask(), tail, *t, 0.5);
    const auto b = perimeter(f.complement(), f.unfrozen_mask(), tail.complemented(), *t, 0.5);
    CHECK(std::abs(a.total - b.total) <= 1e-10);
    CHECK(a.local >= 0);
    CHECK(a.nonlocal_box >= 0);
    CHECK(a.nonlocal_tail >= 0);
    CHECK(a.total == doctest::Approx(a.local + a.nonlocal_box + a.nonlocal_tail));
}

TEST_CASE("direct double loop") {
    const double s = 0.5;
    const Grid g = Grid::square(-1, 1, 64);
    const auto omega = Shape::ball({0, 0}, 0.7);
    const auto E = Shape::half_space({0, 1}, 0.05);
    const auto tail = TailModel::half_space({0, 1}, 0.05);
    const auto f = field_in(E, g, omega);
    const Mask dom = f.unfrozen_mask();

    std::map<std::pair<int, int>, double> memo;
    auto w = [&](int a, int b) {
        a = std::abs(a), b = std::abs(b);
        auto it = memo.find({a, b});
        if (it == memo.end()) it = memo.emplace(std::pair{a, b}, pair_weight({a, b}, g, s)).first;
        return it->second;
    };
    TailOptions o;
    o.box = &g;
    double local = 0, box = 0, far = 0;
    const auto& u = f.values;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!dom[i]) continue;
        const auto ci = g.coords(i);
        for (std::size_t j = 0; j < g.size(); ++j) {
            const auto cj = g.coords(j);
            const double wij = w(ci[0] - cj[0], ci[1] - cj[1]);
            if (dom[j]) local += 0.5 * wij * std::abs(u[i] - u[j]);
            else box += wij * (u[i] * (1 - u[j]) + (1 - u[i]) * u[j]);
        }
        const auto ti = tail_kernel_integral(tail, g.center(i), s, 0.0, o);
        far += g.cell_measure() * (u[i] * ti.complement + (1 - u[i]) * ti.tail);
    }
    const auto t = KernelTable::build(g, s);
    const auto p = perimeter(f, dom, tail, *t, s);
    CHECK(std::abs(p.local - local) <= 1e-10);
    CHECK(std::abs(p.nonlocal_box - box) <= 1e-10);
    CHECK(std::abs(p.nonlocal_tail - far) <= 1e-10);
    CHECK(std::abs(p.total - (local + box + far)) <= 1e-10);
}

TEST_CASE("convexity and monotone domain") {
    const double s = 0.4;
    const Grid g = Grid::square(-1, 1, 24);
    const auto t = KernelTable::build(g, s);
    const auto omega = Shape::ball({0, 0}, 0.75);
    const auto tail = TailModel::cone({0, 0}, {1, 0}, 1.2);
    const auto base = field_in(Shape::half_space({1, 0}, 0.0), g, omega);
    const Mask dom = base.unfrozen_mask();
    const auto tf = compute_tail_field(g, tail, s, dom);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        auto u = base, v = base, m = base;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!dom[i]) continue;
            u.values[i] = U(rng);
            v.values[i] = trial % 2 ? std::round(U(rng)) : U(rng);
            m.values[i] = 0.5 * (u.values[i] + v.values[i]);
        }
        const double pu = perimeter(u, dom, tf, *t).total, pv = perimeter(v, dom, tf, *t).total;
        CHECK(perimeter(m, dom, tf, *t).total <= 0.5 * (pu + pv) + 1e-12);
    }

    const auto E = Shape::ball({0.1, 0}, 0.4);
    double prev = 0;
    for (double r : {0.3, 0.5, 0.7, 0.9}) {
        const auto f = field_in(E, g, Shape::ball({0, 0}, r));
        const double p = perimeter(f, f.unfrozen_mask(), TailModel::empty(), *t, s).total;
        CHECK(p >= prev);
        prev = p;
    }
}

TEST_CASE("scaling by two") {
    for (double s : {0.3, 0.7}) {
        const Grid g1 = Grid::square(-1, 1, 20), g2 = Grid::square(-2, 2, 20);
        const auto f1 = field_in(Shape::ball({0.1, 0}, 0.5), g1, Shape::ball({0, 0}, 0.8));
        const auto f2 = field_in(Shape::ball({0.2, 0}, 1.0), g2, Shape::ball({0, 0}, 1.6));
        REQUIRE(f1.values == f2.values);
        const auto tail1 = TailModel::half_space({0, 1}, 0.3), tail2 = TailModel::half_space({0, 1}, 0.6);
        const double p1 = perimeter(f1, f1.unfrozen_mask(), tail1, *KernelTable::build(g1, s), s).total;
        const double p2 = perimeter(f2, f2.unfrozen_mask(), tail2, *KernelTable::build(g2, s), s).total;
        CHECK(p2 / p1 == doctest::Approx(std::pow(2.0, 2 - s)).epsilon(1e-8));
    }
}

TEST_CASE("local part vanishes as s decreases") {
    const Grid g = Grid::square(-1, 1, 32);
    const auto f = field_in(Shape::ball({0, 0}, 0.5), g, Shape::everything());
    double prev = std::numeric_limits<double>::infinity();
    for (double s : {0.1, 0.05, 0.025}) {
        const double v = s * perimeter(f, f.unfrozen_mask(), TailModel::empty(), *KernelTable::build(g, s), s).local;
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("s to 1 over the exact geometry") {
    const std::vector<double> sl{0.9, 0.95, 0.975};
    const auto hs = asymptotic_s_to_1(Shape::half_space({0, 1}, 0), Shape::ball({0, 0}, 1), sl, 64);
    CHECK(hs.target == doctest::Approx(4.0));
    CHECK(std::abs(hs.values.full - 4.0) <= 0.1 * 4.0);
    const auto b64 = asymptotic_s_to_1(Shape::ball({0, 0}, 0.5), Shape::box({-1, -1}, {1, 1}), sl, 64);
    const auto b128 = asymptotic_s_to_1(Shape::ball({0, 0}, 0.5), Shape::box({-1, -1}, {1, 1}), sl, 128);
    CHECK(b64.target == doctest::Approx(2 * pi));
    CHECK(std::abs(b64.values.full - 2 * pi) <= 0.1 * 2 * pi);
    CHECK(std::abs(b128.values.full - 2 * pi) <= 0.05 * 2 * pi);
}

TEST_CASE("s to 0 limits") {
    const std::vector<double> sl{0.1, 0.05, 0.025};
    const Grid g = Grid::square(-1, 1, 32);
    const auto ball = field_in(Shape::ball({0, 0}, 0.5), g, Shape::everything());
    const auto a = asymptotic_s_to_0(ball, ball.unfrozen_mask(), TailModel::empty(), sl);
    double area = 0;
    for (double v : ball.values) area += v * g.cell_measure();
    CHECK(a.target == doctest::Approx(2 * pi * area));
    CHECK(std::abs(a.values.full - 2 * pi * pi / 4) <= 0.1 * 2 * pi * pi / 4);

    const auto hs = field_in(Shape::half_space({0, 1}, 0), g, Shape::ball({0, 0}, 1));
    const auto b = asymptotic_s_to_0(hs, hs.unfrozen_mask(), TailModel::half_space({0, 1}, 0), sl);
    CHECK(std::abs(b.values.full - pi * pi) <= 0.1 * pi * pi);
}
