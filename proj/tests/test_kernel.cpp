#include "doctest.h"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "nms/gs_table.hpp"
#include "nms/kernel.hpp"
#include "nms/quadrature.hpp"
#include "nms/tail.hpp"

using namespace nms;
using std::numbers::pi;

namespace {

// int_0^1 int_k^{k+1} |x - y|^-p dy dx from the double antiderivative of |t|^-p
double pair_closed(int k, double p) {
    auto F = [p](double t) { return std::pow(std::abs(t), 2 - p) / ((1 - p) * (2 - p)); };
    return F(k + 1) - 2 * F(k) + F(k - 1);
}

double pair_gauss16(double h, int k, double p) {
    using G = boost::math::quadrature::gauss<double, 16>;
    return G::integrate(
        [&](double x) { return G::integrate([&](double y) { return std::pow(std::abs(y - x), -p); }, k * h, (k + 1) * h); },
        0.0, h);
}

} // namespace

TEST_CASE("pair weights") {
    const Grid g = Grid::line(0, 4, 40);  // h = 0.1
    CHECK(pair_weight({0, 0}, g, 0.5) == 0.0);
    const double w10 = pair_weight({10, 0}, g, 0.5);
    CHECK(std::abs(w10 - pair_gauss16(0.1, 10, 1.5)) <= 5e-3 * w10);
    CHECK(std::abs(w10 - 0.01) <= 5e-3 * 0.01 * 1.01);  // h^2 |kh|^-1.5
    const double w1 = pair_weight({1, 0}, g, 0.5);
    CHECK(std::abs(w1 - pair_closed(1, 1.5) * std::pow(0.1, 0.5)) <= 1e-10);
    CHECK(std::abs(unit_pair_closed_form_1d(3, 1.3) - pair_closed(3, 1.3)) < 1e-12);
}

TEST_CASE("kernel table structure") {
    const auto t = KernelTable::build(Grid::line(0, 1, 4), 0.5);
    CHECK(t->distinct_count() == 4);
    CHECK(t->weight(0) == 0.0);
    for (int k = 1; k < 3; ++k) CHECK(t->weight(k + 1) < t->weight(k));
    CHECK(t->weight(-2) == t->weight(2));

    const Grid g2 = Grid::square(-1, 1, 24);
    const auto t2 = KernelTable::build(g2, 0.7);
    for (int k = 1; k < 20; ++k) {
        CHECK(t2->weight(k, 0) > 0);
        CHECK(t2->weight(k + 1, 0) < t2->weight(k, 0));
        CHECK(t2->weight(k, k) < t2->weight(k, 0));
        CHECK(t2->weight(-k, 3) == t2->weight(k, -3));
    }
    CHECK(t2->quadrature_check() < 1e-8);

    // halving h: weight at fixed separation scales by 2^-2n
    for (double s : {0.3, 0.8}) {
        const auto c = KernelTable::build(Grid::square(-1, 1, 20), s), f = KernelTable::build(Grid::square(-1, 1, 40), s);
        CHECK(f->weight(16, 12) / c->weight(8, 6) == doctest::Approx(1.0 / 16).epsilon(2e-3));
        const auto c1 = KernelTable::build(Grid::line(0, 4, 40), s), f1 = KernelTable::build(Grid::line(0, 4, 80), s);
        CHECK(f1->weight(20) / c1->weight(10) == doctest::Approx(0.25).epsilon(2e-3));
    }
}

TEST_CASE("kernel mass over a shell converges at first order") {
    // per-cell sum over offsets with separation in [a, b] against h * int_{a<=|z|<=b} |z|^-(1+s)
    const double s = 0.4, a = 0.5, b = 1.0;
    const double exact = 2 * (std::pow(a, -s) - std::pow(b, -s)) / s;
    std::vector<double> err;
    for (int n : {16, 32, 64}) {
        const Grid g = Grid::line(0, 4, 4 * n);
        const auto t = KernelTable::build(g, s);
        double sum = 0;
        for (int k = 1; k < 4 * n; ++k) {
            const double d = k * g.h();
            if (d >= a - 1e-12 && d <= b + 1e-12) sum += 2 * t->weight(k);
        }
        err.push_back(std::abs(sum / g.h() - exact));
    }
    for (int i = 0; i + 1 < 2; ++i) {
        const double ratio = err[i] / err[i + 1];
        CHECK(ratio >= 1.4);
        CHECK(ratio <= 2.6);
    }
}

TEST_CASE("G_s table") {
    for (double s : {0.1, 0.5, 0.9}) {
        const auto gs = GsTable::build(s, 1);
        CHECK(gs->G(0) == 0.0);
        CHECK(gs->Gg(0) == 0.0);
        double prev = 0;
        for (double t = 0.01; t < 80; t *= 1.3) {
            const double v = gs->G(t);
            CHECK(v > prev);
            CHECK(v <= gs->G_infinity());
            CHECK(gs->G(-t) == doctest::Approx(-v));
            CHECK(gs->Gg(-t) == doctest::Approx(gs->Gg(t)));
            prev = v;
        }
        const auto& F = gs->Gg_values();
        const auto& t = gs->knots();
        for (std::size_t i = 1; i + 1 < F.size(); ++i) {
            const double d1 = (F[i] - F[i - 1]) / (t[i] - t[i - 1]), d2 = (F[i + 1] - F[i]) / (t[i + 1] - t[i]);
            CHECK(d2 - d1 >= -1e-12);
        }
    }
    const auto gs = GsTable::build(0.5, 1);
    boost::math::quadrature::exp_sinh<double> es;
    const double Ginf = es.integrate([](double r) { return std::pow(1 + r * r, -1.25); });
    CHECK(gs->G_infinity() == doctest::Approx(Ginf).epsilon(1e-12));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0, gs->T_max());
    for (int i = 0; i < 100; ++i) {
        const double x = U(rng);
        CHECK(std::abs(gs->dGg(x) - gs->G(x)) <= 1e-8);
    }
}

TEST_CASE("tail kernel integrals") {
    TailOptions o;
    o.dim = 2;
    for (double s : {0.2, 0.5, 0.8}) {
        CHECK(tail_kernel_integral(TailModel::empty(), {0.3, 0.1}, s, 1.0, o).tail == 0.0);
        const auto full = tail_kernel_integral(TailModel::full(), {0.3, 0.1}, s, 1.0, o);
        CHECK(full.tail == doctest::Approx(2 * pi / s).epsilon(1e-10));
        CHECK(full.complement == doctest::Approx(0).epsilon(1e-10));
        const auto hs = TailModel::half_space({0, 1}, 0);
        const auto a = tail_kernel_integral(hs, {0, 0}, s, 1.0, o);
        CHECK(a.tail == doctest::Approx(pi / s).epsilon(1e-10));
        const auto b = tail_kernel_integral(hs, {3.7, 0}, s, 1.0, o);
        CHECK(std::abs(a.tail - b.tail) < 1e-8);
    }
}

TEST_CASE("s times the tail integral tends to alpha") {
    TailOptions o;
    o.dim = 2;
    const std::vector<double> s_list{0.1, 0.05, 0.025};
    const std::vector<std::pair<TailModel, double>> cases{
        {TailModel::half_space({0, 1}, 0), pi},
        {TailModel::cone({0, 0}, {0, 1}, 1.0), 1.0},
        {TailModel::complement_of_ball({0, 0}, 1.5), 2 * pi},
    };
    for (const auto& [tail, alpha] : cases) {
        std::vector<double> y;
        for (double s : s_list) y.push_back(s * tail_kernel_integral(tail, {0.2, -0.1}, s, 2.0, o).tail);
        const auto ex = extrapolate(s_list, y);
        CHECK(ex.full == doctest::Approx(alpha).epsilon(0.01));
        CHECK(tail.alpha(2).has_value());
        CHECK(*tail.alpha(2) >= 0);
        CHECK(*tail.alpha(2) <= 2 * pi);
    }
    CHECK(*TailModel::empty().alpha(2) == 0.0);
    CHECK(*TailModel::full().alpha(2) == doctest::Approx(2 * pi));
    CHECK_FALSE(TailModel::supgraph_ramp(1, pi / 8).alpha(2).has_value());
}
