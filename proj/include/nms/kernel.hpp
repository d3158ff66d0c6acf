#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

#include "nms/grid.hpp"

namespace nms {

using Offset = std::array<int, 2>;

inline constexpr int kDefaultNearFieldRadius = 4;

/// Unit-cell interaction: integral over two unit cells at integer offset k of
/// |x - y|^-p. Exact scaling to side h multiplies by h^(2n - p).
double unit_pair_integral(int dim, Offset k, double p, int near_radius = kDefaultNearFieldRadius);

/// 1D closed form from the double antiderivative of |t|^-p (p != 1, p < 2).
double unit_pair_closed_form_1d(int k, double p);

/// Cell-pair weight for the kernel |x - y|^-(n + s) on `grid`.
double pair_weight(Offset offset, const Grid& grid, double s, int near_radius = kDefaultNearFieldRadius);

/// Integral of |y|^-p over the unit cell centred at c (cell units).
/// The point must stay off the closed cell.
double unit_point_cell_integral(int dim, const Point& c, double p);

/// Translation-structured table of pair weights, indexed by |offset| per axis.
class KernelTable {
public:
    /// Kernel |x - y|^-(n + s), the perimeter kernel.
    static std::shared_ptr<const KernelTable> build(const Grid& grid, double s,
                                                    int near_radius = kDefaultNearFieldRadius);
    /// Kernel |x - y|^-exponent; the graph functional uses exponent = s in 1D.
    static std::shared_ptr<const KernelTable> build_with_exponent(const Grid& grid, double exponent,
                                                                  int near_radius = kDefaultNearFieldRadius);

    double weight(int di, int dj = 0) const {
        return w_[static_cast<std::size_t>(di < 0 ? -di : di) +
                  nx_ * static_cast<std::size_t>(dj < 0 ? -dj : dj)];
    }
    double weight(std::size_t a, std::size_t b) const;

    int dim() const { return dim_; }
    double h() const { return h_; }
    double exponent() const { return exponent_; }
    int near_field_radius() const { return near_; }
    std::size_t distinct_count() const { return w_.size(); }
    const std::vector<double>& raw() const { return w_; }
    /// Largest relative gap between the 1D closed form and Gauss quadrature at build time.
    double quadrature_check() const { return check_; }
    const Grid& grid() const { return grid_; }

    KernelTable(const Grid& grid, double exponent, int near_radius, std::vector<double> w, double check);

private:
    Grid grid_;
    int dim_;
    double h_;
    double exponent_;
    int near_;
    std::size_t nx_;
    std::vector<double> w_;
    double check_;
};

void clear_kernel_cache();

} // namespace nms
