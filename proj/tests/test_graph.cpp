#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "nms/graph_solver.hpp"

using namespace nms;

namespace {

GraphProblem bumps(double delta, int cells, double s) {
    return GraphProblem::make(-1, 1, 3, cells,
                              [delta](double x) { return (x > -3 && x < -2) || (x > 2 && x < 3) ? delta : 0.0; },
                              TailModel::supgraph_bounded(0, 0), s);
}

std::vector<double> random_free(const GraphProblem& p, std::mt19937_64& rng, double amp) {
    std::uniform_real_distribution<double> U(-amp, amp);
    std::vector<double> u(p.grid.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = p.frozen[i] ? p.phi[i] : U(rng);
    return u;
}

} // namespace

TEST_CASE("graph energy symmetries") {
    const double s = 0.4;
    auto phi = [](double x) { return x < 0 ? 0.5 * std::sin(3 * x) : 0.2 + 0.1 * x; };
    const auto p = GraphProblem::make(-1, 1, 1, 32, phi, TailModel::supgraph_bounded(-0.3, 0.4), s);
    const auto pn = GraphProblem::make(-1, 1, 1, 32, [&](double x) { return -phi(x); },
                                       TailModel::supgraph_bounded(0.3, -0.4), s);
    const double c = 0.75;
    const auto pc = GraphProblem::make(-1, 1, 1, 32, [&](double x) { return phi(x) + c; },
                                       TailModel::supgraph_bounded(-0.3 + c, 0.4 + c), s);
    std::mt19937_64 rng(2);
    const auto u = random_free(p, rng, 1.0);
    std::vector<double> un(u), uc(u);
    for (std::size_t i = 0; i < u.size(); ++i) un[i] = -u[i], uc[i] = u[i] + c;
    const double e = GraphEnergy(p).energy(u);
    CHECK(std::abs(GraphEnergy(pn).energy(un) - e) <= 1e-12 * std::max(1.0, std::abs(e)));
    CHECK(std::abs(GraphEnergy(pc).energy(uc) - e) <= 1e-10);

    const auto z = GraphProblem::make(-1, 1, 1, 32, [](double) { return 0.0; }, TailModel::supgraph_bounded(0, 0), s);
    const GraphEnergy ez(z);
    const std::vector<double> zero(z.grid.size(), 0.0);
    CHECK(ez.energy(zero) == 0.0);
    for (double gi : ez.gradient(zero)) CHECK(std::abs(gi) <= 1e-10);
}

TEST_CASE("gradient against finite differences") {
    for (double s : {0.2, 0.6}) {
        const auto p = GraphProblem::make(-1, 1, 0.5, 64, [](double x) { return x > 0 ? 1.0 : -0.5; },
                                          TailModel::supgraph_bounded(-0.5, 1.0), s);
        const GraphEnergy E(p);
        std::mt19937_64 rng(7);
        auto u = random_free(p, rng, 1.0);
        const auto g = E.gradient(u);
        const std::size_t f0 = p.first_free();
        REQUIRE(g.size() == p.free_count());
        const double step = 1e-6;
        for (std::size_t k = 0; k < g.size(); ++k) {
            auto up = u, um = u;
            up[f0 + k] += step;
            um[f0 + k] -= step;
            const double fd = (E.energy(up) - E.energy(um)) / (2 * step);
            CHECK(std::abs(fd - g[k]) <= 1e-5 * std::max(std::abs(g[k]), 1e-2));
        }
    }
}

TEST_CASE("convexity of the graph energy") {
    const auto p = bumps(1.0, 32, 0.3);
    const GraphEnergy E(p);
    std::mt19937_64 rng(4);
    for (int t = 0; t < 20; ++t) {
        const auto u = random_free(p, rng, 2.0), v = random_free(p, rng, 2.0);
        std::vector<double> m(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) m[i] = 0.5 * (u[i] + v[i]);
        CHECK(E.energy(m) <= 0.5 * (E.energy(u) + E.energy(v)) + 1e-12);
    }
}

TEST_CASE("constant and flat data") {
    for (auto method : {GraphMethod::Newton, GraphMethod::PreconditionedGradient}) {
        GraphOptions o;
        o.method = method;
        const auto p = GraphProblem::make(-1, 1, 1, 32, [](double) { return 0.7; }, TailModel::supgraph_bounded(0.7, 0.7), 0.5);
        const auto sol = minimize_graph(p, o);
        for (double v : sol.u) CHECK(v == doctest::Approx(0.7).epsilon(1e-7));
        CHECK(sol.left_gap <= 1e-7);
        CHECK(sol.right_gap <= 1e-7);
        CHECK(sol.gradient_norm <= o.tol);
    }
    // half-line data: 0 on both sides, flat tail
    const auto p = GraphProblem::make(-1, 1, 2, 32, [](double) { return 0.0; }, TailModel::supgraph_bounded(0, 0), 0.3);
    const auto sol = minimize_graph(p);
    for (double v : sol.u) CHECK(std::abs(v) <= 1e-8);
}

TEST_CASE("bump data, comparison and dichotomy stability") {
    const double s = 0.1;
    std::vector<double> left;
    for (double delta : {0.0, 2.0, 8.0}) {
        const auto p = bumps(delta, 64, s);
        const auto sol = minimize_graph(p);
        CHECK(sol.gradient_norm <= 1e-8);
        const std::size_t f0 = p.first_free();
        for (std::size_t k = 0; k < p.free_count(); ++k) {
            CHECK(sol.u[f0 + k] >= -1e-8);
            CHECK(sol.u[f0 + k] <= delta + 1e-8);
        }
        left.push_back(sol.left_gap);
        CHECK(sol.left_gap == doctest::Approx(sol.right_gap).epsilon(1e-6));

    }
    CHECK(left[0] <= 1e-8);

    // classification away from the threshold survives halving h
    for (double delta : {0.0, 8.0}) {
        const auto c = bumps(delta, 128, s), f = bumps(delta, 256, s);
        const double gc = minimize_graph(c).left_gap, gf = minimize_graph(f).left_gap;
        CHECK((gc > 5 * c.grid.h()) == (gf > 5 * f.grid.h()));
    }
    CHECK(left[1] > left[0]);
    CHECK(left[2] > left[1]);
}

TEST_CASE("monotone data gives a monotone minimizer") {
    const auto p = GraphProblem::make(-1, 1, 1, 48, [](double x) { return x < 0 ? -1.0 : 1.0 + 0.2 * (x - 1); },
                                      TailModel::supgraph_bounded(-1, 1.2), 0.5);
    const auto sol = minimize_graph(p);
    const std::size_t f0 = p.first_free();
    for (std::size_t k = 0; k + 1 < p.free_count(); ++k) CHECK(sol.u[f0 + k + 1] >= sol.u[f0 + k] - 1e-10);
}

TEST_CASE("classical annulus") {
    const double M0 = std::log(std::sqrt(3.0) + 2);
    CHECK(std::abs(annulus_threshold(1, 2) - M0) <= 1e-12);
    CHECK(std::abs(M0 - 1.3169578969248166) <= 1e-15);

    for (double M : {0.3, 0.9, 1.2}) {
        const auto a = classical_annulus(1, 2, M);
        CHECK_FALSE(a.sticks);
        CHECK(std::abs(a.profile(2)) <= 1e-12);
        CHECK(std::abs(a.profile(1) - M) <= 1e-10);
        for (double r = 1; r < 2; r += 0.05) CHECK(a.profile(r + 0.05) <= a.profile(r) + 1e-14);
    }
    const auto st = classical_annulus(1, 2, 2 * M0);
    CHECK(st.sticks);
    CHECK(st.c == doctest::Approx(1.0));
    CHECK(std::abs(st.gap - M0) <= 1e-12);

    const auto zero = classical_annulus(1, 2, 1e-300);
    CHECK(std::abs(zero.profile(1.5)) <= 1e-12);
    CHECK_THROWS(classical_annulus(2, 1, 1));
    CHECK_THROWS(classical_annulus(1, 2, -1));

    const auto half = classical_annulus(1, 2, M0 / 2);
    const auto num = classical_annulus_numeric(1, 2, M0 / 2, 512);
    double sup = 0;
    for (std::size_t k = 0; k < num.r.size(); ++k) sup = std::max(sup, std::abs(num.u[k] - half.profile(num.r[k])));
    CHECK(sup <= 1e-3);

    const auto flat = classical_annulus_numeric(1, 2, 0, 128);
    for (double v : flat.u) CHECK(std::abs(v) <= 1e-12);

    const auto big = classical_annulus_numeric(1, 2, 2 * M0, 512);
    sup = 0;
    for (std::size_t k = 1; k < big.r.size(); ++k)  // interior nodes; the wall node carries the gap sup = std::max(sup, std::abs(big.u[k] - st.profile(big.r[k])));
    CHECK(sup <= 1e-3);
    CHECK(std::abs(big.wall_gap - M0) <= 0.01 * M0);
}
