#include "nms/curvature.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>

#include "nms/errors.hpp"
#include "nms/gs_table.hpp"
#include "nms/kernel.hpp"
#include "nms/parallel.hpp"

namespace nms {

namespace {

constexpr double kPi = std::numbers::pi;

bool near_integer(double v) { return std::abs(v - std::round(v)) < 1e-9; }

// Point-cell weight of |x - q|^-(n+s) over cell j.
double point_cell_weight(const Grid& g, const Point& q, std::size_t j, double s) {
    const int n = g.dim();
    const double h = g.h();
    const Point c = g.center(j);
    const Point rel{(c[0] - q[0]) / h, n == 2 ? (c[1] - q[1]) / h : 0.0};
    const double cheb = std::max(std::abs(rel[0]), std::abs(rel[1]));
    const double p = n + s;
    if (cheb <= kDefaultNearFieldRadius + 0.5) return std::pow(h, n - p) * unit_point_cell_integral(n, rel, p);
    const double d = std::hypot(rel[0], rel[1]) * h;
    return g.cell_measure() * std::pow(d, -p);
}

double dist(const Point& a, const Point& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

// Distance from x to the segment [a, b].
double segment_distance(const Point& x, const Point& a, const Point& b) {
    const double vx = b[0] - a[0], vy = b[1] - a[1];
    const double l2 = vx * vx + vy * vy;
    double t = l2 > 0 ? ((x[0] - a[0]) * vx + (x[1] - a[1]) * vy) / l2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(x[0] - a[0] - t * vx, x[1] - a[1] - t * vy);
}

} // namespace

double curvature_kernel_scale(const Grid& grid, double s) { return 1.0 / (s * grid.h()); }

CurvatureSample curvature_set(const IndicatorField& field, const TailModel& tail, const Point& q, double s,
                              double pv_radius, const CurvatureSplit* split) {
    require_fractional(s);
    const Grid& g = field.grid;
    const int n = g.dim();
    const double h = g.h();
    if (pv_radius <= 0) pv_radius = 3 * h;
    if (pv_radius < 2 * h - 1e-12) throw ParameterError("pv_radius must be at least 2h");
    if (!g.contains(q)) throw UsageError("q must lie inside the box");

    // q must be a face midpoint: one coordinate on a face line, the other at a centre.
    const double a0 = (q[0] - g.lower(0)) / h;
    const double a1 = n == 2 ? (q[1] - g.lower(1)) / h : 0.5;
    int face_axis;
    if (near_integer(a0) && near_integer(a1 - 0.5)) face_axis = 0;
    else if (n == 2 && near_integer(a1) && near_integer(a0 - 0.5)) face_axis = 1;
    else throw UsageError("q is not a cell-face midpoint");
    // the two cells sharing the face
    const int fi = static_cast<int>(std::lround(face_axis == 0 ? a0 : a0 - 0.5));
    const int fj = n == 2 ? static_cast<int>(std::lround(face_axis == 1 ? a1 : a1 - 0.5)) : 0;
    const int ai = face_axis == 0 ? fi - 1 : fi, aj = face_axis == 1 ? fj - 1 : fj;
    if (ai < 0 || aj < 0) throw UsageError("q lies on the box boundary");
    const std::size_t cA = g.index(ai, aj), cB = g.index(fi, fj);
    if (std::abs(field.values[cA] - field.values[cB]) < 0.5)
        throw UsageError("q is not on the discrete interface");

    const auto sigma = [&](std::size_t j) { return 1.0 - 2.0 * field.values[j]; };  // chi_CE - chi_E

    // Part index of a point: 0 core, 1 collar, 2 midrange, 3 far.
    Point pr{0, 0};
    if (split) pr = {2 * q[0] - split->p[0], 2 * q[1] - split->p[1]};
    const auto part_of = [&](const Point& x) {
        if (dist(x, q) >= split->R) return 3;
        if (dist(x, split->p) < split->delta || dist(x, pr) < split->delta) return 0;
        if (segment_distance(x, split->p, pr) < split->delta) return 1;
        return 2;
    };

    // Reflection of cell (i, j) through q lands on a cell centre by construction.
    const auto reflect = [&](std::size_t j, std::size_t& out) {
        const auto c = g.coords(j);
        const int ri = (face_axis == 0 ? 2 * fi - 1 : 2 * fi) - c[0];
        const int rj = n == 2 ? (face_axis == 1 ? 2 * fj - 1 : 2 * fj) - c[1] : 0;
        if (ri < 0 || ri >= g.cells(0) || (n == 2 && (rj < 0 || rj >= g.cells(1)))) return false;
        out = g.index(ri, rj);
        return true;
    };

    std::vector<double> contrib(g.size(), 0.0), unmatched(g.size(), 0.0);
    parallel_for(g.size(), [&](std::size_t j) {
        const Point c = g.center(j);
        if (dist(c, q) >= pv_radius) {
            contrib[j] = point_cell_weight(g, q, j, s) * sigma(j);
            return;
        }
        std::size_t r;
        if (!reflect(j, r)) {
            const double v = point_cell_weight(g, q, j, s) * sigma(j);
            contrib[j] = v;
            unmatched[j] = v;
            return;
        }
        if (r < j) return;  // the pair is booked once, on its smaller index
        if (j == cA || j == cB) return;  // sigma cancels across the face
        contrib[j] = point_cell_weight(g, q, j, s) * (sigma(j) + sigma(r));
    });

    CurvatureSample out;
    out.q = q;
    out.pv_radius = pv_radius;
    CurvatureParts parts;
    double v = 0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        v += contrib[j];
        out.unmatched += unmatched[j];
        if (split && contrib[j] != 0.0) {
            double* slot[4] = {&parts.core, &parts.collar, &parts.midrange, &parts.far};
            *slot[part_of(g.center(j))] += contrib[j];
        }
    }

    TailOptions opts;
    opts.box = &g;
    const auto t = tail_kernel_integral(tail, q, s, 0.0, opts);
    const double tail_part = t.complement - t.tail;
    v += tail_part;
    if (split) {
        TailOptions inner = opts;
        inner.r_max = split->R;
        const auto ti = tail_kernel_integral(tail, q, s, 0.0, inner);
        const double mid = ti.complement - ti.tail;
        parts.midrange += mid;
        parts.far += tail_part - mid;
        out.parts = parts;
    }
    out.value = v;
    return out;
}

// ---------------------------------------------------------------------------

GraphProfile GraphProfile::from_cells(const Grid& grid, std::vector<double> values, const TailModel& tail) {
    if (grid.dim() != 1) throw ConfigError("graph profiles live on 1D grids");
    if (values.size() != grid.size()) throw ConfigError("profile size does not match the grid");
    GraphProfile p;
    p.lo = grid.lower(0);
    p.hi = grid.upper(0);
    p.tail = tail;
    const double lo = p.lo, h = grid.h();
    auto v = std::make_shared<std::vector<double>>(std::move(values));
    p.u = [v, lo, h](double x) {
        const double t = (x - lo) / h - 0.5;
        const auto n = static_cast<long>(v->size());
        if (t <= 0) return (*v)[0];
        if (t >= n - 1) return (*v)[n - 1];
        const long k = static_cast<long>(t);
        const double f = t - k;
        return (1 - f) * (*v)[k] + f * (*v)[k + 1];
    };
    return p;
}

double curvature_graph_local(const GraphProfile& prof, double q, double s, double r, double h_cut) {
    require_fractional(s);
    if (!(r > 0) || !(h_cut > 0)) throw ParameterError("r and h_cut must be positive");
    if (!(q - r >= prof.lo && q + r <= prof.hi)) throw ParameterError("B_r(q) must lie inside the profile box");
    const auto gs = GsTable::build(s, 1);
    const double uq = prof.u(q);
    for (int k = -32; k <= 32; ++k)
        if (std::abs(prof.u(q + r * k / 32.0) - uq) >= h_cut)
            throw ParameterError("the graph leaves the cylinder of half-height h_cut over B_r(q)");

    const auto value = [&](double x) {
        if (x < prof.lo || x > prof.hi) return prof.tail.graph_value(x);
        return prof.u(x);
    };
    const auto term = [&](double x) {
        const double d = std::abs(x - q);
        return gs->G((value(x) - uq) / d) * std::pow(d, -1 - s);
    };

    // Symmetric pairing removes the principal-value singularity at q. Below t0
    // the paired integrand is replaced by its leading term g(u') u'' t^-s,
    // which keeps roundoff in the difference quotients from being amplified.
    const double t0 = 1e-5 * r;
    const double d2 = (prof.u(q + t0) + prof.u(q - t0) - 2 * uq) / (t0 * t0);
    const double d1 = (prof.u(q + t0) - prof.u(q - t0)) / (2 * t0);
    boost::math::quadrature::tanh_sinh<double> ts(12);
    double local = gs->g(d1) * d2 * std::pow(t0, 1 - s) / (1 - s);
    local += ts.integrate(
        [&](double t) {
            return (gs->G((prof.u(q + t) - uq) / t) + gs->G((prof.u(q - t) - uq) / t)) * std::pow(t, -1 - s);
        },
        t0, r, 1e-10);

    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    double ext = 0;
    if (q - r > prof.lo) ext += GK::integrate(term, prof.lo, q - r, 15, 1e-11);
    if (q + r < prof.hi) ext += GK::integrate(term, q + r, prof.hi, 15, 1e-11);
    boost::math::quadrature::exp_sinh<double> es;
    ext += es.integrate([&](double t) { return term(prof.hi + t); }, 0.0, kInf, 1e-10);
    ext += es.integrate([&](double t) { return term(prof.lo - t); }, 0.0, kInf, 1e-10);
    // subgraph: columns above the graph count positively, below negatively
    return -2.0 * (local + ext);
}

// ---------------------------------------------------------------------------

AlphaResult alpha_numeric(const TailModel& tail, double R, const Point& q, const std::vector<double>& s_list,
                          const IndicatorField* field) {
    if (!(R > 0)) throw ParameterError("R must be positive");
    const int dim = field ? field->grid.dim() : 2;
    std::vector<double> xs, ys;
    for (double s : s_list) {
        require_fractional(s);
        double v = 0;
        TailOptions opts;
        opts.dim = dim;
        if (field) {
            const Grid& g = field->grid;
            opts.box = &g;
            std::vector<double> c(g.size(), 0.0);
            parallel_for(g.size(), [&](std::size_t j) {
                if (field->values[j] == 0.0) return;
                const Point x = g.center(j);
                if (std::hypot(x[0] - q[0], dim == 2 ? x[1] - q[1] : 0.0) < R) return;
                c[j] = field->values[j] * point_cell_weight(g, q, j, s);
            });
            for (double x : c) v += x;
        }
        v += tail_kernel_integral(tail, q, s, R, opts).tail;
        xs.push_back(s);
        ys.push_back(s * v);
    }
    AlphaResult out;
    out.values = extrapolate(xs, ys);
    out.alpha = out.values.full;
    out.catalogue = tail.alpha(dim);
    return out;
}

CurvatureLimit curvature_s0_limit(const IndicatorField& field, const TailModel& tail, const Point& q,
                                  const std::vector<double>& s_list) {
    const int n = field.grid.dim();
    const auto a = tail.alpha(n);
    if (!a) throw ParameterError("the tail has no known contribution from infinity");
    std::vector<double> xs, ys;
    for (double s : s_list) {
        xs.push_back(s);
        ys.push_back(s * curvature_set(field, tail, q, s).value);
    }
    CurvatureLimit out;
    out.values = extrapolate(xs, ys);
    out.limit = out.values.full;
    out.target = omega(n) - 2 * *a;
    return out;
}

double delta_threshold(double s, double C, int n) {
    require_fractional(s);
    if (!(C > 0)) throw ParameterError("C must be positive");
    const double w = omega(n);
    return std::exp(-std::log((8 * w + C) / (8 * w + C / 2)) / s);
}

} // namespace nms
