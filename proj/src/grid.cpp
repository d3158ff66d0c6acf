#include "nms/grid.hpp"

#include <cmath>
#include <numbers>

#include "nms/errors.hpp"

namespace nms {

Grid Grid::build(std::span<const double> lower, std::span<const double> upper,
                 std::span<const int> cells_per_axis, std::size_t cell_cap) {
    const std::size_t n = cells_per_axis.size();
    if (n < 1 || n > 2 || lower.size() != n || upper.size() != n)
        throw ConfigError("grid dimension must be 1 or 2 with matching bounds");
    Grid g;
    g.dim_ = static_cast<int>(n);
    std::size_t count = 1;
    std::array<double, 2> hs{0, 0};
    for (std::size_t a = 0; a < n; ++a) {
        if (!(upper[a] > lower[a]) || !std::isfinite(lower[a]) || !std::isfinite(upper[a]))
            throw ConfigError("degenerate grid bounds on axis " + std::to_string(a));
        if (cells_per_axis[a] < 2)
            throw ConfigError("at least 2 cells per axis are required");
        g.lower_[a] = lower[a];
        g.upper_[a] = upper[a];
        g.cells_[a] = cells_per_axis[a];
        hs[a] = (upper[a] - lower[a]) / cells_per_axis[a];
        const auto c = static_cast<std::size_t>(cells_per_axis[a]);
        if (count > cell_cap / c)
            throw CapacityError("cell count exceeds the configured cap of " + std::to_string(cell_cap));
        count *= c;
    }
    if (n == 2 && std::abs(hs[0] - hs[1]) > 1e-12 * std::max(hs[0], hs[1]))
        throw ConfigError("grid cells must be square (h differs between axes)");
    g.h_ = hs[0];
    g.size_ = count;
    return g;
}

Grid Grid::line(double lower, double upper, int cells) {
    const double lo[1] = {lower}, hi[1] = {upper};
    const int c[1] = {cells};
    return build(lo, hi, c);
}

Grid Grid::square(double lower, double upper, int cells_per_axis) {
    const double lo[2] = {lower, lower}, hi[2] = {upper, upper};
    const int c[2] = {cells_per_axis, cells_per_axis};
    return build(lo, hi, c);
}

double Grid::box_measure() const {
    double m = upper_[0] - lower_[0];
    if (dim_ == 2) m *= upper_[1] - lower_[1];
    return m;
}

std::array<int, 2> Grid::coords(std::size_t idx) const {
    const int i = static_cast<int>(idx % static_cast<std::size_t>(cells_[0]));
    const int j = dim_ == 2 ? static_cast<int>(idx / static_cast<std::size_t>(cells_[0])) : 0;
    return {i, j};
}

Point Grid::center(std::size_t idx) const {
    const auto [i, j] = coords(idx);
    Point p{lower_[0] + (i + 0.5) * h_, 0.0};
    if (dim_ == 2) p[1] = lower_[1] + (j + 0.5) * h_;
    return p;
}

bool Grid::contains(const Point& p) const {
    for (int a = 0; a < dim_; ++a)
        if (p[a] < lower_[a] || p[a] > upper_[a]) return false;
    return true;
}

bool Grid::same_as(const Grid& o) const {
    return dim_ == o.dim_ && cells_ == o.cells_ && lower_ == o.lower_ && upper_ == o.upper_;
}

bool IndicatorField::is_binary() const {
    for (double v : values)
        if (v != 0.0 && v != 1.0) return false;
    return true;
}

IndicatorField IndicatorField::complement() const {
    IndicatorField c = *this;
    for (double& v : c.values) v = 1.0 - v;
    return c;
}

Mask IndicatorField::unfrozen_mask() const { return invert(frozen); }

// ---------------------------------------------------------------------------
// Shapes

Shape Shape::ball(Point center, double radius) {
    if (!(radius > 0)) throw ParameterError("ball radius must be positive");
    return Shape(Ball{center, radius});
}

Shape Shape::half_space(Point normal, double offset) {
    const double len = std::hypot(normal[0], normal[1]);
    if (!(len > 0)) throw ParameterError("half-space normal must be nonzero");
    return Shape(HalfSpace{{normal[0] / len, normal[1] / len}, offset / len});
}

Shape Shape::annulus(double inner, double outer) {
    if (!(inner > 0 && inner < outer)) throw ParameterError("annulus requires 0 < rho < R");
    return Shape(Annulus{inner, outer});
}

Shape Shape::ramp(double h, double theta) {
    if (!(theta > 0 && theta < std::numbers::pi / 2)) throw ParameterError("ramp angle must lie in (0, pi/2)");
    if (!(h >= 1)) throw ParameterError("ramp offset h must be >= 1");
    return Shape(Ramp{h, theta});
}

Shape Shape::half_ring(double delta) {
    if (!(delta > 0)) throw ParameterError("half-ring thickness must be positive");
    return Shape(HalfRing{delta});
}

Shape Shape::box(Point lower, Point upper) { return Shape(Box{lower, upper}); }
Shape Shape::unite(const Shape& a, const Shape& b) {
    return Shape(Union{std::make_shared<const Shape>(a), std::make_shared<const Shape>(b)});
}
Shape Shape::intersect(const Shape& a, const Shape& b) {
    return Shape(Intersection{std::make_shared<const Shape>(a), std::make_shared<const Shape>(b)});
}
Shape Shape::complement(const Shape& a) { return Shape(Complement{std::make_shared<const Shape>(a)}); }
Shape Shape::everything() { return Shape(Everything{}); }
Shape Shape::nothing() { return Shape(Nothing{}); }

namespace {

template <class... Ts>
struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double norm(const Point& p, int dim) { return dim == 1 ? std::abs(p[0]) : std::hypot(p[0], p[1]); }

} // namespace

bool Shape::contains(const Point& p, int dim) const {
    return std::visit(
        overloaded{
            [&](const Ball& b) {
                const Point d{p[0] - b.center[0], p[1] - b.center[1]};
                return norm(d, dim) < b.radius;
            },
            [&](const HalfSpace& hs) {
                double dot = p[0] * hs.normal[0];
                if (dim == 2) dot += p[1] * hs.normal[1];
                return dot < hs.offset;
            },
            [&](const Annulus& a) {
                const double r = norm(p, dim);
                return r > a.inner && r < a.outer;
            },
            [&](const Ramp& r) {
                const double floor = std::max(0.0, (p[0] - r.h) * std::tan(r.theta));
                return p[1] >= floor;
            },
            [&](const HalfRing& hr) {
                const double r = norm(p, dim);
                const double last = dim == 1 ? p[0] : p[1];
                return r >= 1.0 && r < 1.0 + hr.delta && last < 0.0;
            },
            [&](const Box& b) {
                for (int a = 0; a < dim; ++a)
                    if (p[a] <= b.lower[a] || p[a] >= b.upper[a]) return false;
                return true;
            },
            [&](const Union& u) { return u.a->contains(p, dim) || u.b->contains(p, dim); },
            [&](const Intersection& u) { return u.a->contains(p, dim) && u.b->contains(p, dim); },
            [&](const Complement& c) { return !c.a->contains(p, dim); },
            [](const Everything&) { return true; },
            [](const Nothing&) { return false; },
        },
        v_);
}

std::string Shape::kind() const {
    static const char* names[] = {"ball",         "half_space", "annulus",  "ramp",
                                  "half_ring",    "box",        "union",    "intersection",
                                  "complement",   "everything", "nothing"};
    return names[v_.index()];
}

IndicatorField rasterize(const Shape& shape, const Grid& grid, const CellPredicate& frozen_region,
                         RasterOptions opts) {
    IndicatorField f(grid);
    const int dim = grid.dim();
    const double h = grid.h();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point c = grid.center(i);
        if (!opts.subsample) {
            f.values[i] = shape.contains(c, dim) ? 1.0 : 0.0;
        } else {
            int hits = 0;
            if (dim == 1) {
                for (int k = 0; k < 16; ++k) {
                    const Point q{c[0] + ((k + 0.5) / 16.0 - 0.5) * h, 0.0};
                    hits += shape.contains(q, dim);
                }
            } else {
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b) {
                        const Point q{c[0] + ((a + 0.5) / 4.0 - 0.5) * h,
                                      c[1] + ((b + 0.5) / 4.0 - 0.5) * h};
                        hits += shape.contains(q, dim);
                    }
            }
            f.values[i] = hits / 16.0;
        }
        f.frozen[i] = frozen_region && frozen_region(c) ? 1 : 0;
    }
    return f;
}

Mask mask_of(const Shape& shape, const Grid& grid) {
    Mask m(grid.size(), 0);
    for (std::size_t i = 0; i < grid.size(); ++i) m[i] = shape.contains(grid.center(i), grid.dim()) ? 1 : 0;
    return m;
}

Mask full_mask(const Grid& grid) { return Mask(grid.size(), 1); }

Mask invert(const Mask& m) {
    Mask r(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) r[i] = m[i] ? 0 : 1;
    return r;
}

double volume(const IndicatorField& field, const Mask& region) {
    if (region.size() != field.size()) throw ConfigError("mask does not match the field's grid");
    double sum = 0;
    for (std::size_t i = 0; i < field.size(); ++i)
        if (region[i]) sum += field.values[i];
    return sum * field.grid.cell_measure();
}

double volume(const IndicatorField& field) { return volume(field, full_mask(field.grid)); }

} // namespace nms
