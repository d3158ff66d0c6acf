#pragma once

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nms/grid.hpp"

namespace nms {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
    double lo, hi;
};

/// Sorted, disjoint intervals in the ray parameter r >= 0, with inline storage.
class IntervalSet {
public:
    static constexpr int kCapacity = 12;
    void push(double lo, double hi);  // appends; caller keeps order
    int size() const { return n_; }
    const Interval& operator[](int i) const { return v_[i]; }
    bool empty() const { return n_ == 0; }
    static IntervalSet all();

private:
    std::array<Interval, kCapacity> v_{};
    int n_ = 0;
};

IntervalSet intersect(const IntervalSet& a, const IntervalSet& b);
IntervalSet unite(const IntervalSet& a, const IntervalSet& b);
IntervalSet complement(const IntervalSet& a);

/// Analytic description of the exterior set beyond the computational box.
/// The same descriptor doubles as the graph datum for 1D graph problems
/// (SupgraphBounded levels, SupgraphPolynomial coefficients).
class TailModel {
public:
    struct Empty {};
    struct Full {};
    struct HalfSpace { Point normal; double offset; };               // {x.n < offset}
    struct Slab { Point normal; double center, half_width; };        // {|x.n - center| < w}
    struct Cone { Point vertex; Point direction; double opening; };  // angle to axis < opening/2
    struct SupgraphPolynomial { std::array<double, 4> coeffs; };     // {x2 > sum c_k x1^k}
    struct SupgraphBounded { double left, right; };                  // {x2 > left (x1<0), right (x1>=0)}
    struct SupgraphRamp { double h, theta; };                        // {x2 >= ((x1 - h) tan theta)_+}
    struct ComplementOfBall { Point center; double radius; };

    using Variant = std::variant<Empty, Full, HalfSpace, Slab, Cone, SupgraphPolynomial, SupgraphBounded,
                                 SupgraphRamp, ComplementOfBall>;

    static TailModel empty();
    static TailModel full();
    static TailModel half_space(Point normal, double offset);
    static TailModel slab(Point normal, double center, double half_width);
    static TailModel cone(Point vertex, Point direction, double opening);
    static TailModel supgraph_polynomial(std::array<double, 4> coeffs);
    static TailModel supgraph_bounded(double left, double right);
    static TailModel supgraph_ramp(double h, double theta);
    static TailModel complement_of_ball(Point center, double radius);

    TailModel complemented() const;
    bool is_complemented() const { return complemented_; }
    const Variant& variant() const { return v_; }
    std::string kind() const;

    bool contains(const Point& x, int dim) const;
    /// {r >= 0 : q + r dir in the set}.
    IntervalSet ray(const Point& q, const Point& dir, int dim) const;
    /// Directions (angles in [0, 2pi)) where the ray structure changes, seen from q.
    std::vector<double> critical_angles(const Point& q) const;

    /// Catalogue value of the contribution from infinity when one is known.
    std::optional<double> alpha(int dim) const;
    /// Effectively Empty or Full after complementation.
    bool is_trivial() const;
    bool is_full() const;

    /// Graph datum value at x1 (SupgraphBounded / SupgraphPolynomial only).
    double graph_value(double x1) const;

private:
    explicit TailModel(Variant v) : v_(std::move(v)) {}
    Variant v_;
    bool complemented_ = false;
};

double omega(int dim);

struct TailIntegral {
    double tail = 0;        // integral over the tail set
    double complement = 0;  // integral over its complement, same region
};

struct TailOptions {
    const Grid* box = nullptr;  // exclude the box (per direction) when set
    int dim = 2;                // used when no box is given
    double r_max = kInf;        // outer radius (diagnostic splits)
    int min_panels = 512;
    double rel_tol = 1e-10;
};

/// Integral of |x - q|^-(n+s) over {R_cut <= |x - q| < r_max} minus the box,
/// split between the tail set and its complement.
TailIntegral tail_kernel_integral(const TailModel& tail, const Point& q, double s, double R_cut,
                                  const TailOptions& opts = {});

} // namespace nms
