#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "nms/grid.hpp"
#include "nms/quadrature.hpp"
#include "nms/tail.hpp"

namespace nms {

struct CurvatureParts {
    double core = 0;      // D = B_delta(p) u B_delta(p'), p' the reflection of p through q
    double collar = 0;    // convex hull of D minus D
    double midrange = 0;  // B_R(q) minus the hull
    double far = 0;       // outside B_R(q)
};

/// Geometry of the four-part split: p is the centre of an exterior tangent
/// ball of radius delta at q.
struct CurvatureSplit {
    Point p{0, 0};
    double delta = 0;
    double R = 4;
};

struct CurvatureSample {
    Point q{0, 0};
    double value = 0;
    double pv_radius = 0;
    double unmatched = 0;  // contribution of near cells whose reflection leaves the box
    std::optional<CurvatureParts> parts;
};

/// Scale used by discretization tolerances for set curvature: 1 / (s h).
double curvature_kernel_scale(const Grid& grid, double s);

/// Fractional mean curvature of the binary field (with its tail) at a cell-face
/// midpoint q on the discrete interface. pv_radius <= 0 selects 3h.
CurvatureSample curvature_set(const IndicatorField& field, const TailModel& tail, const Point& q, double s,
                              double pv_radius = 0, const CurvatureSplit* split = nullptr);

/// Graph datum for the 1D local formula: u on the box [lo, hi], tail.graph_value beyond.
struct GraphProfile {
    std::function<double(double)> u;
    double lo = 0, hi = 0;
    TailModel tail = TailModel::supgraph_bounded(0, 0);

    /// Piecewise-linear interpolation of cell values on a 1D grid.
    static GraphProfile from_cells(const Grid& grid, std::vector<double> values, const TailModel& tail);
};

/// Curvature of the subgraph of u at (q, u(q)): the symmetric local integral of
/// G_s over B_r(q) plus the exterior of the cylinder of half-height h_cut,
/// which for a graph reduces to the same G_s integrand over |x - q| >= r.
double curvature_graph_local(const GraphProfile& profile, double q, double s, double r, double h_cut);

struct AlphaResult {
    Extrapolation values;  // s * alpha_s(E, R, q) per s
    double alpha = 0;      // highest-order extrapolation
    std::optional<double> catalogue;
};

/// s alpha_s(E, R, q) along s_list and its extrapolation to s = 0. With a
/// field, cells outside B_R(q) are summed and the tail is taken beyond the box.
AlphaResult alpha_numeric(const TailModel& tail, double R, const Point& q, const std::vector<double>& s_list,
                          const IndicatorField* field = nullptr);

struct CurvatureLimit {
    Extrapolation values;  // s * I_s per s
    double limit = 0;
    double target = 0;     // omega_n - 2 alpha(E)
};

CurvatureLimit curvature_s0_limit(const IndicatorField& field, const TailModel& tail, const Point& q,
                                  const std::vector<double>& s_list);

double delta_threshold(double s, double C, int n);

} // namespace nms
