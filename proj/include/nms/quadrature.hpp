#pragma once

#include <functional>
#include <span>
#include <vector>

namespace nms {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Rules are computed once per order and cached; the returned reference stays valid.
const GaussRule& gauss_legendre(int order);

/// Fixed-order Gauss-Legendre integral of f over [a, b].
double gauss_integrate(const std::function<double(double)>& f, double a, double b, int order);

/// Adaptive Gauss-Kronrod (15 point) integral with relative/absolute tolerance.
/// Throws NumericError when the error estimate cannot be driven below tolerance.
double adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-12, double abs_tol = 1e-15, int max_depth = 12);

/// Polynomial extrapolation to x = 0 through all given points (Neville).
double extrapolate_to_zero(std::span<const double> x, std::span<const double> y);

/// Per-s values together with low- and high-order extrapolations to the limit.
struct Extrapolation {
    std::vector<double> x;       // abscissae used (s or 1 - s)
    std::vector<double> y;       // sampled values
    double two_point = 0;        // linear fit through the two points closest to 0
    double full = 0;             // polynomial through every point
};

Extrapolation extrapolate(std::vector<double> x, std::vector<double> y);

} // namespace nms
