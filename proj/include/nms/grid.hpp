#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace nms {

using Point = std::array<double, 2>;  // 1D problems use only the first coordinate
using Mask = std::vector<std::uint8_t>;

inline constexpr std::size_t kDefaultCellCap = std::size_t{1} << 22;

/// Uniform decomposition of an axis-aligned box into square cells.
///
/// Cells are ordered row-major with the first axis fastest:
/// index = i + cells(0) * j.
class Grid {
public:
    static Grid build(std::span<const double> lower, std::span<const double> upper,
                      std::span<const int> cells_per_axis,
                      std::size_t cell_cap = kDefaultCellCap);
    static Grid line(double lower, double upper, int cells);
    static Grid square(double lower, double upper, int cells_per_axis);

    int dim() const { return dim_; }
    double h() const { return h_; }
    int cells(int axis) const { return cells_[axis]; }
    std::size_t size() const { return size_; }
    double lower(int axis) const { return lower_[axis]; }
    double upper(int axis) const { return upper_[axis]; }
    double cell_measure() const { return dim_ == 1 ? h_ : h_ * h_; }
    double box_measure() const;

    Point center(std::size_t idx) const;
    std::array<int, 2> coords(std::size_t idx) const;
    std::size_t index(int i, int j = 0) const { return static_cast<std::size_t>(i) + static_cast<std::size_t>(cells_[0]) * j; }

    bool contains(const Point& p) const;
    bool same_as(const Grid& other) const;

private:
    int dim_ = 1;
    std::array<double, 2> lower_{0, 0};
    std::array<double, 2> upper_{0, 0};
    std::array<int, 2> cells_{1, 1};
    double h_ = 0;
    std::size_t size_ = 0;
};

/// Relaxed indicator: values in [0,1] per cell, plus the mask of exterior
/// (frozen) cells that no solver may modify.
struct IndicatorField {
    Grid grid;
    std::vector<double> values;
    Mask frozen;

    explicit IndicatorField(const Grid& g)
        : grid(g), values(g.size(), 0.0), frozen(g.size(), 0) {}

    std::size_t size() const { return values.size(); }
    bool is_binary() const;
    IndicatorField complement() const;
    Mask unfrozen_mask() const;
};

/// Analytic regions in the plane (or on the line when dim = 1).
class Shape {
public:
    struct Ball { Point center; double radius; };
    struct HalfSpace { Point normal; double offset; };  // {x : x.normal < offset}
    struct Annulus { double inner, outer; };             // rho < |x| < R
    struct Ramp { double h, theta; };                    // {x2 >= ((x1 - h) tan theta)_+}
    struct HalfRing { double delta; };                   // (B_{1+delta} \ B_1) cap {x_n < 0}
    struct Box { Point lower, upper; };
    struct Union { std::shared_ptr<const Shape> a, b; };
    struct Intersection { std::shared_ptr<const Shape> a, b; };
    struct Complement { std::shared_ptr<const Shape> a; };
    struct Everything {};
    struct Nothing {};

    using Variant = std::variant<Ball, HalfSpace, Annulus, Ramp, HalfRing, Box, Union,
                                 Intersection, Complement, Everything, Nothing>;

    static Shape ball(Point center, double radius);
    static Shape half_space(Point normal, double offset);
    static Shape annulus(double inner, double outer);
    static Shape ramp(double h, double theta);
    static Shape half_ring(double delta);
    static Shape box(Point lower, Point upper);
    static Shape unite(const Shape& a, const Shape& b);
    static Shape intersect(const Shape& a, const Shape& b);
    static Shape complement(const Shape& a);
    static Shape everything();
    static Shape nothing();

    /// Membership test; `dim` selects the 1D reading (Ball = interval, etc.).
    bool contains(const Point& p, int dim = 2) const;
    const Variant& variant() const { return v_; }
    std::string kind() const;

private:
    explicit Shape(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

struct RasterOptions {
    bool subsample = false;  // 16 samples per cell instead of the center
};

using CellPredicate = std::function<bool(const Point&)>;

IndicatorField rasterize(const Shape& shape, const Grid& grid, const CellPredicate& frozen_region,
                         RasterOptions opts = {});

/// Cells whose centers lie inside `shape`.
Mask mask_of(const Shape& shape, const Grid& grid);
Mask full_mask(const Grid& grid);
Mask invert(const Mask& m);

double volume(const IndicatorField& field, const Mask& region);
double volume(const IndicatorField& field);

} // namespace nms
