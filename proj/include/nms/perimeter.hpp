#pragma once

#include <vector>

#include "nms/grid.hpp"
#include "nms/kernel.hpp"
#include "nms/quadrature.hpp"
#include "nms/tail.hpp"

namespace nms {

struct PerimeterBreakdown {
    double local = 0;          // Omega - Omega pairs
    double nonlocal_box = 0;   // Omega - (box \ Omega) pairs
    double nonlocal_tail = 0;  // Omega - outside the box
    double total = 0;
};

/// Per-cell kernel mass outside the box, split between the tail set and its
/// complement. Only cells selected by the mask are evaluated.
struct TailField {
    std::vector<double> tail;
    std::vector<double> complement;
};

TailField compute_tail_field(const Grid& grid, const TailModel& tail, double s, const Mask& cells);

PerimeterBreakdown perimeter(const IndicatorField& field, const Mask& domain, const TailModel& tail,
                             const KernelTable& table, double s);
PerimeterBreakdown perimeter(const IndicatorField& field, const Mask& domain, const TailField& tails,
                             const KernelTable& table);

struct AsymptoticResult {
    Extrapolation values;            // per-s scaled perimeters and their extrapolations
    std::vector<double> raster;      // same quantity on the rasterized grid (s -> 1 only)
    double target = 0;
};

/// (1 - s) P_s(E, Omega) for E a Ball or HalfSpace and Omega a Ball or Box
/// (n = 2), integrated over the exact geometry: the flat-interface singularity
/// is integrated in closed form, the bounded remainder by cellwise Gauss
/// sampling at `cells_per_axis` cells across the bounding box of Omega.
AsymptoticResult asymptotic_s_to_1(const Shape& E, const Shape& omega_shape, const std::vector<double>& s_list,
                                   int cells_per_axis, bool with_raster = false);

/// s P_s(E, Omega) on the grid: `field` carries E inside the box, `tail` outside.
AsymptoticResult asymptotic_s_to_0(const IndicatorField& field, const Mask& domain, const TailModel& tail,
                                   const std::vector<double>& s_list);

/// Closed form of P_s for a disc of radius r in the plane.
double ball_perimeter_closed_form(double r, double s);

} // namespace nms
