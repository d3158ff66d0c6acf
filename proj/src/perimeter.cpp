#include "nms/perimeter.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "nms/errors.hpp"
#include "nms/parallel.hpp"

namespace nms {

namespace {

constexpr double kPi = std::numbers::pi;

void check_same_grid(const IndicatorField& field, const Mask& domain, const KernelTable& table) {
    if (!field.grid.same_as(table.grid())) throw ConfigError("field and kernel table live on different grids");
    if (domain.size() != field.size()) throw ConfigError("domain mask does not match the grid");
}

} // namespace

TailField compute_tail_field(const Grid& grid, const TailModel& tail, double s, const Mask& cells) {
    TailField tf;
    tf.tail.assign(grid.size(), 0.0);
    tf.complement.assign(grid.size(), 0.0);
    TailOptions opts;
    opts.box = &grid;
    parallel_for(grid.size(), [&](std::size_t i) {
        if (!cells[i]) return;
        const auto r = tail_kernel_integral(tail, grid.center(i), s, 0.0, opts);
        tf.tail[i] = r.tail;
        tf.complement[i] = r.complement;
    });
    return tf;
}

PerimeterBreakdown perimeter(const IndicatorField& field, const Mask& domain, const TailModel& tail,
                             const KernelTable& table, double s) {
    require_fractional(s);
    check_same_grid(field, domain, table);
    return perimeter(field, domain, compute_tail_field(field.grid, tail, s, domain), table);
}

PerimeterBreakdown perimeter(const IndicatorField& field, const Mask& domain, const TailField& tails,
                             const KernelTable& table) {
    check_same_grid(field, domain, table);
    const Grid& g = field.grid;
    const std::size_t N = g.size();
    const auto& u = field.values;
    std::vector<double> loc(N, 0.0), box(N, 0.0), far(N, 0.0);
    const int nx = g.cells(0), ny = g.dim() == 2 ? g.cells(1) : 1;
    const double hn = g.cell_measure();

    parallel_for(N, [&](std::size_t i) {
        if (!domain[i]) return;
        const auto ci = g.coords(i);
        const double ui = u[i];
        double l = 0, b = 0;
        for (int j2 = 0; j2 < ny; ++j2) {
            const std::size_t row = static_cast<std::size_t>(nx) * j2;
            for (int j1 = 0; j1 < nx; ++j1) {
                const std::size_t j = row + j1;
                const double w = table.weight(j1 - ci[0], j2 - ci[1]);
                if (domain[j]) {
                    if (j > i) l += w * std::abs(ui - u[j]);
                } else {
                    b += w * (ui * (1 - u[j]) + (1 - ui) * u[j]);
                }
            }
        }
        loc[i] = l;
        box[i] = b;
        far[i] = hn * (ui * tails.complement[i] + (1 - ui) * tails.tail[i]);
    });

    PerimeterBreakdown out;
    for (std::size_t i = 0; i < N; ++i) {
        out.local += loc[i];
        out.nonlocal_box += box[i];
        out.nonlocal_tail += far[i];
    }
    out.total = out.local + out.nonlocal_box + out.nonlocal_tail;
    return out;
}

double ball_perimeter_closed_form(double r, double s) {
    require_fractional(s);
    const double I1 = std::sqrt(kPi) * boost::math::tgamma_ratio((1 - s) / 2, 1 - s / 2);
    return 2 * kPi * std::pow(r, 2 - s) * std::pow(2.0, 1 - s) * I1 / (s * (2 - s));
}

// ---------------------------------------------------------------------------
// s -> 1 over the exact geometry

namespace {

struct Ray {
    double lo, hi;
};

// Exit distance from a convex shape (Ball or Box) for a point inside it.
double convex_exit(const Shape& sh, const Point& x, const Point& d) {
    if (const auto* b = std::get_if<Shape::Ball>(&sh.variant())) {
        const double px = x[0] - b->center[0], py = x[1] - b->center[1];
        const double bb = px * d[0] + py * d[1];
        const double c = px * px + py * py - b->radius * b->radius;
        return -bb + std::sqrt(std::max(0.0, bb * bb - c));
    }
    const auto& bx = std::get<Shape::Box>(sh.variant());
    double t = kInf;
    for (int a = 0; a < 2; ++a) {
        if (d[a] > 0) t = std::min(t, (bx.upper[a] - x[a]) / d[a]);
        if (d[a] < 0) t = std::min(t, (bx.lower[a] - x[a]) / d[a]);
    }
    return t;
}

// {r >= 0 : x + r d in E} for a Ball or HalfSpace E.
IntervalSet shape_ray(const Shape& E, const Point& x, const Point& d) {
    IntervalSet out;
    if (const auto* b = std::get_if<Shape::Ball>(&E.variant())) {
        const double px = x[0] - b->center[0], py = x[1] - b->center[1];
        const double bb = px * d[0] + py * d[1];
        const double c = px * px + py * py - b->radius * b->radius;
        const double disc = bb * bb - c;
        if (disc > 0) {
            const double sq = std::sqrt(disc), r1 = -bb - sq, r2 = -bb + sq;
            if (r2 > 0) out.push(std::max(0.0, r1), r2);
        }
        return out;
    }
    const auto& hs = std::get<Shape::HalfSpace>(E.variant());
    const double f0 = x[0] * hs.normal[0] + x[1] * hs.normal[1] - hs.offset;
    const double sl = d[0] * hs.normal[0] + d[1] * hs.normal[1];
    if (sl == 0) {
        if (f0 < 0) out.push(0, kInf);
    } else {
        const double r = -f0 / sl;
        if (sl > 0) {
            if (r > 0) out.push(0, r);
        } else {
            out.push(std::max(0.0, r), kInf);
        }
    }
    return out;
}

struct Geometry {
    const Shape& E;
    const Shape& omega;
    bool is_ball;
    Point center{0, 0};
    double radius = 0;
    Point normal{0, 0};  // unit normal of the half-space, pointing out of E
    double offset = 0;

    Geometry(const Shape& e, const Shape& o) : E(e), omega(o) {
        if (const auto* b = std::get_if<Shape::Ball>(&E.variant())) {
            is_ball = true;
            center = b->center;
            radius = b->radius;
        } else if (const auto* h = std::get_if<Shape::HalfSpace>(&E.variant())) {
            is_ball = false;
            const double l = std::hypot(h->normal[0], h->normal[1]);
            if (!(l > 0)) throw ParameterError("half-space normal must be nonzero");
            normal = {h->normal[0] / l, h->normal[1] / l};
            offset = h->offset / l;
        } else {
            throw ParameterError("s->1 asymptotics support Ball or HalfSpace sets, got " + E.kind());
        }
        if (!std::holds_alternative<Shape::Ball>(omega.variant()) &&
            !std::holds_alternative<Shape::Box>(omega.variant()))
            throw ParameterError("s->1 asymptotics support Ball or Box domains, got " + omega.kind());
    }

    // Distance to the boundary of E and the outward normal angle, for x in E.
    std::pair<double, double> boundary(const Point& x) const {
        if (is_ball) {
            const double px = x[0] - center[0], py = x[1] - center[1];
            const double rho = std::hypot(px, py);
            return {radius - rho, rho > 0 ? std::atan2(py, px) : 0.0};
        }
        return {offset - (x[0] * normal[0] + x[1] * normal[1]), std::atan2(normal[1], normal[0])};
    }

    bool ball_inside_omega() const {
        if (!is_ball) return false;
        if (const auto* b = std::get_if<Shape::Ball>(&omega.variant()))
            return std::hypot(center[0] - b->center[0], center[1] - b->center[1]) + radius <= b->radius;
        const auto& bx = std::get<Shape::Box>(omega.variant());
        return center[0] - radius >= bx.lower[0] && center[0] + radius <= bx.upper[0] &&
               center[1] - radius >= bx.lower[1] && center[1] + radius <= bx.upper[1];
    }

    // Length of {x in Omega : dist(x, boundary of E) = y, x in E}.
    double level_length(double y) const {
        if (is_ball) {
            if (!ball_inside_omega()) throw ParameterError("a Ball set must lie inside the domain");
            return 2 * kPi * std::max(0.0, radius - y);
        }
        // line {x.n = offset - y}, clipped to Omega
        const double c = offset - y;
        if (const auto* b = std::get_if<Shape::Ball>(&omega.variant())) {
            const double dist = std::abs(b->center[0] * normal[0] + b->center[1] * normal[1] - c);
            return dist < b->radius ? 2 * std::sqrt(b->radius * b->radius - dist * dist) : 0.0;
        }
        const auto& bx = std::get<Shape::Box>(omega.variant());
        const Point p0{normal[0] * c, normal[1] * c}, t{-normal[1], normal[0]};
        double lo = -kInf, hi = kInf;
        for (int a = 0; a < 2; ++a) {
            if (t[a] == 0) {
                if (p0[a] < bx.lower[a] || p0[a] > bx.upper[a]) return 0.0;
                continue;
            }
            double r1 = (bx.lower[a] - p0[a]) / t[a], r2 = (bx.upper[a] - p0[a]) / t[a];
            if (r1 > r2) std::swap(r1, r2);
            lo = std::max(lo, r1);
            hi = std::min(hi, r2);
        }
        return std::max(0.0, hi - lo);
    }

    double depth_extent() const {
        if (is_ball) return radius;
        // farthest point of Omega from the line, on the E side
        double m = 0;
        if (const auto* b = std::get_if<Shape::Ball>(&omega.variant())) {
            m = offset - (b->center[0] * normal[0] + b->center[1] * normal[1]) + b->radius;
        } else {
            const auto& bx = std::get<Shape::Box>(omega.variant());
            for (double x : {bx.lower[0], bx.upper[0]})
                for (double y : {bx.lower[1], bx.upper[1]}) m = std::max(m, offset - (x * normal[0] + y * normal[1]));
        }
        return std::max(0.0, m);
    }
};

// C_s = int_{-pi/2}^{pi/2} cos^s
double flat_constant(double s) { return std::sqrt(kPi) * boost::math::tgamma_ratio((1 + s) / 2, 1 + s / 2); }

// int_{E cap Omega} C_s d^-s / s, the flat-interface part of the first term.
double singular_part(const Geometry& geo, double s) {
    const double Cs = flat_constant(s);
    if (geo.is_ball) {
        geo.level_length(0);  // validates containment
        return 2 * kPi * Cs / s * std::pow(geo.radius, 2 - s) / ((1 - s) * (2 - s));
    }
    // int_0^Y y^-s L(y) dy with y = Y t^(1/(1-s)) removes the endpoint singularity.
    const double Y = geo.depth_extent();
    if (!(Y > 0)) return 0.0;
    const double e = 1 / (1 - s);
    boost::math::quadrature::tanh_sinh<double> ts(12);
    const double I = ts.integrate([&](double t) { return geo.level_length(Y * std::pow(t, e)); }, 0.0, 1.0, 1e-12);
    return Cs / s * std::pow(Y, 1 - s) * e * I;
}

// k_{CE}(x) minus the flat kernel C_s d^-s / s, for x inside a ball E.
double ball_remainder(const Geometry& geo, const Point& x, double s) {
    const auto [d, phi_n] = geo.boundary(x);
    const double px = x[0] - geo.center[0], py = x[1] - geo.center[1];
    const double c = px * px + py * py - geo.radius * geo.radius;
    const auto f = [&](double phi) {
        const double dx = std::cos(phi), dy = std::sin(phi);
        const double bb = px * dx + py * dy;
        const double exit = -bb + std::sqrt(std::max(0.0, bb * bb - c));
        const double cpsi = std::cos(phi - phi_n);
        const double flat = cpsi > 0 ? std::pow(cpsi / d, s) : 0.0;
        return std::pow(exit, -s) - flat;
    };
    static thread_local boost::math::quadrature::tanh_sinh<double> ts(10);
    const double a = phi_n - kPi / 2;
    return (ts.integrate(f, a, a + kPi, 1e-9) + ts.integrate(f, a + kPi, a + 2 * kPi, 1e-9)) / s;
}

// k_{E \ Omega}(x) for x in Omega \ E (convex Omega).
double outside_kernel(const Geometry& geo, const Point& x, double s) {
    const auto f = [&](double phi) {
        const Point d{std::cos(phi), std::sin(phi)};
        const double t_exit = convex_exit(geo.omega, x, d);
        IntervalSet beyond;
        beyond.push(t_exit, kInf);
        const auto iv = intersect(shape_ray(geo.E, x, d), beyond);
        double v = 0;
        for (int k = 0; k < iv.size(); ++k)
            v += std::pow(iv[k].lo, -s) - (std::isfinite(iv[k].hi) ? std::pow(iv[k].hi, -s) : 0.0);
        return v;
    };
    double acc = 0;
    constexpr int kSectors = 16;
    for (int k = 0; k < kSectors; ++k) {
        const double a = 2 * kPi * k / kSectors, b = 2 * kPi * (k + 1) / kSectors;
        acc += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 8, 1e-8);
    }
    return acc / s;
}

} // namespace

AsymptoticResult asymptotic_s_to_1(const Shape& E, const Shape& omega_shape, const std::vector<double>& s_list,
                                   int cells_per_axis, bool with_raster) {
    const Geometry geo(E, omega_shape);
    if (cells_per_axis < 4) throw ParameterError("cells_per_axis must be at least 4");
    Point lo, hi;
    if (const auto* b = std::get_if<Shape::Ball>(&omega_shape.variant())) {
        lo = {b->center[0] - b->radius, b->center[1] - b->radius};
        hi = {b->center[0] + b->radius, b->center[1] + b->radius};
    } else {
        const auto& bx = std::get<Shape::Box>(omega_shape.variant());
        lo = bx.lower;
        hi = bx.upper;
        if (std::abs((hi[0] - lo[0]) - (hi[1] - lo[1])) > 1e-12 * (hi[0] - lo[0]))
            throw ConfigError("the domain box must be square");
    }
    const double side = hi[0] - lo[0], h = side / cells_per_axis;
    const bool second_term = !geo.ball_inside_omega();

    // Cellwise 3x3 Gauss sampling; points are classified exactly.
    const auto& rule = gauss_legendre(3);
    struct Sample {
        Point x;
        double w;
        bool in_E;
    };
    std::vector<Sample> samples;
    for (int j = 0; j < cells_per_axis; ++j)
        for (int i = 0; i < cells_per_axis; ++i)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    const Point x{lo[0] + h * (i + 0.5 + 0.5 * rule.nodes[a]),
                                  lo[1] + h * (j + 0.5 + 0.5 * rule.nodes[b])};
                    if (!omega_shape.contains(x)) continue;
                    const bool inE = E.contains(x);
                    if (!inE && !second_term) continue;
                    samples.push_back({x, 0.25 * h * h * rule.weights[a] * rule.weights[b], inE});
                }

    AsymptoticResult out;
    std::vector<double> xs, ys;
    for (double s : s_list) {
        require_fractional(s);
        std::vector<double> contrib(samples.size(), 0.0);
        parallel_for(samples.size(), [&](std::size_t k) {
            const auto& sm = samples[k];
            if (sm.in_E)
                contrib[k] = geo.is_ball ? sm.w * ball_remainder(geo, sm.x, s) : 0.0;
            else
                contrib[k] = sm.w * outside_kernel(geo, sm.x, s);
        });
        double P = singular_part(geo, s);
        for (double c : contrib) P += c;
        xs.push_back(1 - s);
        ys.push_back((1 - s) * P);

        if (with_raster) {
            const Grid g = Grid::square(lo[0], hi[0], cells_per_axis);
            const auto field = rasterize(E, g, [](const Point&) { return false; });
            const auto dom = mask_of(omega_shape, g);
            const auto table = KernelTable::build(g, s);
            const auto tail = std::holds_alternative<Shape::Ball>(E.variant())
                                  ? TailModel::empty()
                                  : TailModel::half_space(geo.normal, geo.offset);
            out.raster.push_back((1 - s) * perimeter(field, dom, tail, *table, s).total);
        }
    }
    out.values = extrapolate(xs, ys);

    // (omega_{n-1} / (n - 1)) P(E, closure of Omega) with n = 2
    double classical;
    if (geo.is_ball) {
        classical = 2 * kPi * geo.radius;
    } else {
        classical = geo.level_length(0);
    }
    out.target = 2 * classical;
    return out;
}

AsymptoticResult asymptotic_s_to_0(const IndicatorField& field, const Mask& domain, const TailModel& tail,
                                   const std::vector<double>& s_list) {
    const int n = field.grid.dim();
    const auto a = tail.alpha(n);
    if (!a) throw ParameterError("s->0 asymptotics need a tail with a known contribution from infinity");
    std::vector<double> xs, ys;
    for (double s : s_list) {
        const auto table = KernelTable::build(field.grid, s);
        xs.push_back(s);
        ys.push_back(s * perimeter(field, domain, tail, *table, s).total);
    }
    AsymptoticResult out;
    out.values = extrapolate(xs, ys);
    const double inside = volume(field, domain);
    double dom_measure = 0;
    for (auto m : domain) dom_measure += m ? field.grid.cell_measure() : 0.0;
    out.target = (omega(n) - *a) * inside + *a * (dom_measure - inside);
    return out;
}

} // namespace nms
