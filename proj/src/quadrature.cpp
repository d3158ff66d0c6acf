#include "nms/quadrature.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

#include "nms/errors.hpp"

namespace nms {

namespace {

GaussRule compute_rule(int n) {
    GaussRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) { p1 = x; p0 = 1; }
            dp = n * (x * p1 - p0) / (x * x - 1);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1);
        const double w = 2 / ((1 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    return r;
}

} // namespace

const GaussRule& gauss_legendre(int order) {
    if (order < 1 || order > 512) throw ParameterError("Gauss-Legendre order out of range");
    static std::mutex mu;
    static std::map<int, std::unique_ptr<GaussRule>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[order];
    if (!slot) slot = std::make_unique<GaussRule>(compute_rule(order));
    return *slot;
}

double gauss_integrate(const std::function<double(double)>& f, double a, double b, int order) {
    const GaussRule& r = gauss_legendre(order);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) sum += r.weights[i] * f(mid + half * r.nodes[i]);
    return sum * half;
}

double adaptive_integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                          double abs_tol, int max_depth) {
    if (a == b) return 0.0;
    double err = 0;
    const double val = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, a, b, static_cast<unsigned>(max_depth), rel_tol, &err);
    if (!std::isfinite(val))
        throw NumericError("adaptive quadrature produced a non-finite value on [" + std::to_string(a) +
                           ", " + std::to_string(b) + "]");
    if (err > std::max(abs_tol, 1e3 * rel_tol * std::abs(val)))
        throw NumericError("adaptive quadrature did not converge on [" + std::to_string(a) + ", " +
                           std::to_string(b) + "]: error estimate " + std::to_string(err) +
                           ", value " + std::to_string(val));
    return val;
}

double extrapolate_to_zero(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty()) throw ParameterError("extrapolation needs matching, nonempty samples");
    std::vector<double> p(y.begin(), y.end());
    const std::size_t n = x.size();
    for (std::size_t m = 1; m < n; ++m)
        for (std::size_t i = 0; i + m < n; ++i)
            p[i] = (x[i + m] * p[i] - x[i] * p[i + 1]) / (x[i + m] - x[i]);
    return p[0];
}

Extrapolation extrapolate(std::vector<double> x, std::vector<double> y) {
    Extrapolation e;
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(x[a]) < std::abs(x[b]); });
    e.x = x;
    e.y = y;
    e.full = extrapolate_to_zero(x, y);
    if (x.size() >= 2) {
        const double xs[2] = {x[order[0]], x[order[1]]};
        const double ys[2] = {y[order[0]], y[order[1]]};
        e.two_point = extrapolate_to_zero(xs, ys);
    } else {
        e.two_point = e.full;
    }
    return e;
}

} // namespace nms
