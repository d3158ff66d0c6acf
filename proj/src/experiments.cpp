#include "nms/experiments.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <boost/version.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "nms/curvature.hpp"
#include "nms/errors.hpp"
#include "nms/graph_solver.hpp"
#include "nms/kernel.hpp"
#include "nms/perimeter.hpp"
#include "nms/set_solver.hpp"

namespace nms {

using json = nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

struct Schema {
    std::vector<std::string> geometry, parameters;
};

const std::map<std::string, Schema>& schemas() {
    static const std::map<std::string, Schema> m{
        {"perimeter", {{"grid", "set", "domain", "tail"}, {"s"}}},
        {"asymptotics-s1", {{"set", "domain", "cells"}, {"s", "raster"}}},
        {"asymptotics-s0", {{"grid", "set", "domain", "tail"}, {"s"}}},
        {"alpha", {{"tail"}, {"R", "q", "s"}}},
        {"curvature", {{"grid", "set", "tail"}, {"q", "s", "pv_radius", "limit_s"}}},
        {"graph", {{"a", "b", "W", "cells", "datum", "tail"}, {"s", "delta", "method", "tol", "max_iter", "profiles"}}},
        {"annulus", {{"rho", "R"}, {"M", "M_over_M0", "mesh"}}},
        {"set", {{"grid", "exterior", "domain", "tail"}, {"s", "method", "tol"}}},
        {"sweep", {{"family", "cells", "box_half_width", "complemented", "h", "theta"},
                   {"parameter", "values", "s", "delta"}}},
        {"cylinder-demo", {{"rho", "R", "W", "cells", "far_level"}, {"M", "s", "profiles"}}},
    };
    return m;
}

void check_keys(const json& obj, const std::vector<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [k, v] : obj.items())
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw ConfigError(where + ": unknown key '" + k + "'");
}

std::string at(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

double number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(where + ": expected a finite number");
    return v;
}

double num(const json& o, const std::string& key, const std::string& where, std::optional<double> def = {}) {
    if (!o.contains(key)) {
        if (def) return *def;
        throw ConfigError(at(where, key) + ": required");
    }
    return number(o.at(key), at(where, key));
}

int integer(const json& o, const std::string& key, const std::string& where, std::optional<int> def = {}) {
    if (!o.contains(key)) {
        if (def) return *def;
        throw ConfigError(at(where, key) + ": required");
    }
    const json& j = o.at(key);
    if (!j.is_number_integer()) throw ConfigError(at(where, key) + ": expected an integer");
    return j.get<int>();
}

bool flag(const json& o, const std::string& key, const std::string& where, bool def) {
    if (!o.contains(key)) return def;
    if (!o.at(key).is_boolean()) throw ConfigError(at(where, key) + ": expected true or false");
    return o.at(key).get<bool>();
}

std::string text(const json& o, const std::string& key, const std::string& where, std::optional<std::string> def = {}) {
    if (!o.contains(key)) {
        if (def) return *def;
        throw ConfigError(at(where, key) + ": required");
    }
    if (!o.at(key).is_string()) throw ConfigError(at(where, key) + ": expected a string");
    return o.at(key).get<std::string>();
}

std::vector<double> numbers(const json& o, const std::string& key, const std::string& where,
                            std::optional<std::vector<double>> def = {}) {
    if (!o.contains(key)) {
        if (def) return *def;
        throw ConfigError(at(where, key) + ": required");
    }
    const json& j = o.at(key);
    std::vector<double> out;
    if (j.is_number()) {
        out.push_back(number(j, at(where, key)));
        return out;
    }
    if (!j.is_array() || j.empty()) throw ConfigError(at(where, key) + ": expected a nonempty list of numbers");
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], at(where, key) + "[" + std::to_string(i) + "]"));
    return out;
}

Point point(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty() || j.size() > 2) throw ConfigError(where + ": expected [x] or [x, y]");
    Point p{number(j[0], where + "[0]"), 0.0};
    if (j.size() == 2) p[1] = number(j[1], where + "[1]");
    return p;
}

Point point_at(const json& o, const std::string& key, const std::string& where, std::optional<Point> def = {}) {
    if (!o.contains(key)) {
        if (def) return *def;
        throw ConfigError(at(where, key) + ": required");
    }
    return point(o.at(key), at(where, key));
}

Shape shape_at(const json& j, const std::string& where);

const json& req(const json& o, const std::string& key, const std::string& where) {
    if (!o.contains(key)) throw ConfigError(at(where, key) + ": required");
    return o.at(key);
}

std::shared_ptr<const Shape> shape_ptr(const json& o, const std::string& key, const std::string& where) {
    if (!o.contains(key)) throw ConfigError(at(where, key) + ": required");
    return std::make_shared<const Shape>(shape_at(o.at(key), at(where, key)));
}

Shape shape_at(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a shape object");
    const std::string type = text(j, "type", where);
    try {
        if (type == "ball") {
            check_keys(j, {"type", "center", "radius"}, where);
            return Shape::ball(point_at(j, "center", where, Point{0, 0}), num(j, "radius", where));
        }
        if (type == "half_space") {
            check_keys(j, {"type", "normal", "offset"}, where);
            return Shape::half_space(point_at(j, "normal", where), num(j, "offset", where, 0.0));
        }
        if (type == "annulus") {
            check_keys(j, {"type", "inner", "outer"}, where);
            return Shape::annulus(num(j, "inner", where), num(j, "outer", where));
        }
        if (type == "ramp") {
            check_keys(j, {"type", "h", "theta"}, where);
            return Shape::ramp(num(j, "h", where), num(j, "theta", where));
        }
        if (type == "half_ring") {
            check_keys(j, {"type", "delta"}, where);
            return Shape::half_ring(num(j, "delta", where));
        }
        if (type == "box") {
            check_keys(j, {"type", "lower", "upper"}, where);
            return Shape::box(point_at(j, "lower", where), point_at(j, "upper", where));
        }
        if (type == "union" || type == "intersection") {
            check_keys(j, {"type", "a", "b"}, where);
            const auto a = shape_ptr(j, "a", where), b = shape_ptr(j, "b", where);
            return type == "union" ? Shape::unite(*a, *b) : Shape::intersect(*a, *b);
        }
        if (type == "complement") {
            check_keys(j, {"type", "a"}, where);
            return Shape::complement(*shape_ptr(j, "a", where));
        }
        if (type == "everything" || type == "nothing") {
            check_keys(j, {"type"}, where);
            return type == "everything" ? Shape::everything() : Shape::nothing();
        }
    } catch (const ParameterError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    throw ConfigError(where + ": unknown shape type '" + type + "'");
}

TailModel tail_at(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a tail object");
    const std::string type = text(j, "type", where);
    const bool comp = flag(j, "complemented", where, false);
    auto keys = [&](std::vector<std::string> k) {
        k.push_back("type");
        k.push_back("complemented");
        check_keys(j, k, where);
    };
    auto done = [&](TailModel t) { return comp ? t.complemented() : t; };
    try {
        if (type == "empty") return keys({}), done(TailModel::empty());
        if (type == "full") return keys({}), done(TailModel::full());
        if (type == "half_space") {
            keys({"normal", "offset"});
            return done(TailModel::half_space(point_at(j, "normal", where), num(j, "offset", where, 0.0)));
        }
        if (type == "slab") {
            keys({"normal", "center", "half_width"});
            return done(TailModel::slab(point_at(j, "normal", where), num(j, "center", where, 0.0),
                                        num(j, "half_width", where)));
        }
        if (type == "cone") {
            keys({"vertex", "direction", "opening"});
            return done(TailModel::cone(point_at(j, "vertex", where, Point{0, 0}), point_at(j, "direction", where),
                                        num(j, "opening", where)));
        }
        if (type == "supgraph_polynomial") {
            keys({"coeffs"});
            const auto c = numbers(j, "coeffs", where);
            if (c.size() > 4) throw ConfigError(at(where, "coeffs") + ": at most 4 coefficients");
            std::array<double, 4> a{0, 0, 0, 0};
            std::copy(c.begin(), c.end(), a.begin());
            return done(TailModel::supgraph_polynomial(a));
        }
        if (type == "supgraph_bounded") {
            keys({"left", "right"});
            return done(TailModel::supgraph_bounded(num(j, "left", where), num(j, "right", where)));
        }
        if (type == "supgraph_ramp") {
            keys({"h", "theta"});
            return done(TailModel::supgraph_ramp(num(j, "h", where), num(j, "theta", where)));
        }
        if (type == "complement_of_ball") {
            keys({"center", "radius"});
            return done(TailModel::complement_of_ball(point_at(j, "center", where, Point{0, 0}), num(j, "radius", where)));
        }
    } catch (const ParameterError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    throw ConfigError(where + ": unknown tail type '" + type + "'");
}

Grid grid_at(const json& j, const std::string& where) {
    check_keys(j, {"lower", "upper", "cells"}, where);
    const auto lo = numbers(j, "lower", where), hi = numbers(j, "upper", where);
    if (!j.contains("cells") || !j.at("cells").is_array()) throw ConfigError(at(where, "cells") + ": expected a list");
    std::vector<int> cells;
    for (const auto& c : j.at("cells")) {
        if (!c.is_number_integer()) throw ConfigError(at(where, "cells") + ": expected integers");
        cells.push_back(c.get<int>());
    }
    try {
        return Grid::build(lo, hi, cells);
    } catch (const ParameterError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

TailModel tail_or(const json& o, const std::string& key, const std::string& where, const TailModel& def) {
    return o.contains(key) ? tail_at(o.at(key), at(where, key)) : def;
}

Shape shape_or(const json& o, const std::string& key, const std::string& where, const Shape& def) {
    return o.contains(key) ? shape_at(o.at(key), at(where, key)) : def;
}

void require_s_list(const std::vector<double>& s, const std::string& where) {
    for (double v : s)
        if (!(v > 0 && v < 1)) throw ConfigError(where + ": every s must lie in (0, 1)");
}

std::string profile_csv(const Grid& g, const std::vector<double>& u) {
    std::string out = "x,u\n";
    for (std::size_t i = 0; i < u.size(); ++i) out += format_double(g.center(i)[0]) + "," + format_double(u[i]) + "\n";
    return out;
}

const ReportValue kNone = std::string();

ReportValue opt(const std::optional<double>& v) { return v ? ReportValue(*v) : kNone; }

// ---------------------------------------------------------------------------
// experiments; with dry = true they stop after resolving the config

using Runner = ExperimentReport (*)(const ExperimentConfig&, bool);

ExperimentReport exp_perimeter(const ExperimentConfig& c, bool dry) {
    const json& G = c.geometry;
    const Grid grid = grid_at(req(G, "grid", "geometry"), "geometry.grid");
    const Shape set = shape_at(req(G, "set", "geometry"), "geometry.set");
    const Shape domain = shape_or(G, "domain", "geometry", Shape::everything());
    const TailModel tail = tail_or(G, "tail", "geometry", TailModel::empty());
    const auto s_list = numbers(c.parameters, "s", "parameters", std::vector<double>{0.5});
    require_s_list(s_list, "parameters.s");
    ExperimentReport r;
    r.columns = {"s", "local", "nonlocal_box", "nonlocal_tail", "total", "target", "provenance"};
    if (dry) return r;

    const int dim = grid.dim();
    const Mask dm = mask_of(domain, grid);
    const IndicatorField field = rasterize(set, grid, [&](const Point& p) { return !domain.contains(p, dim); });
    // closed form applies to a disc fully inside Omega with nothing beyond the box
    std::optional<double> radius;
    if (const auto* b = std::get_if<Shape::Ball>(&set.variant()); b && dim == 2 && tail.is_trivial() && !tail.is_full()) {
        bool inside = true;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (field.values[i] > 0 && !dm[i]) inside = false;
        if (inside) radius = b->radius;
    }
    for (double s : s_list) {
        const auto table = KernelTable::build(grid, s);
        const auto p = perimeter(field, dm, tail, *table, s);
        if (radius)
            r.add_row({s, p.local, p.nonlocal_box, p.nonlocal_tail, p.total, ball_perimeter_closed_form(*radius, s),
                       std::string("derived")});
        else
            r.add_row({s, p.local, p.nonlocal_box, p.nonlocal_tail, p.total, kNone, kNone});
    }
    if (radius) r.notes.push_back("target: closed-form fractional perimeter of the disc; the grid value uses the rasterized disc");
    return r;
}

void asymptotic_rows(ExperimentReport& r, const AsymptoticResult& a, const std::vector<double>& s_list, bool with_raster) {
    for (std::size_t i = 0; i < s_list.size(); ++i)
        r.add_row({std::string("sample"), s_list[i], a.values.y[i],
                   with_raster && i < a.raster.size() ? ReportValue(a.raster[i]) : kNone, kNone, kNone});
    r.add_row({std::string("limit_two_point"), 0.0, a.values.two_point, kNone, a.target, std::string("paper")});
    r.add_row({std::string("limit_full"), 0.0, a.values.full, kNone, a.target, std::string("paper")});
    r.summary["limit"] = a.values.full;
    r.summary["limit_two_point"] = a.values.two_point;
    r.summary["target"] = a.target;
    r.summary["relative_error"] = std::abs(a.values.full - a.target) / std::abs(a.target);
}

ExperimentReport exp_s1(const ExperimentConfig& c, bool dry) {
    const json& G = c.geometry;
    const Shape set = shape_at(req(G, "set", "geometry"), "geometry.set");
    const Shape domain = shape_at(req(G, "domain", "geometry"), "geometry.domain");
    const int cells = integer(G, "cells", "geometry", 128);
    const auto s_list = numbers(c.parameters, "s", "parameters", std::vector<double>{0.90, 0.95, 0.975});
    require_s_list(s_list, "parameters.s");
    const bool raster = flag(c.parameters, "raster", "parameters", false);
    ExperimentReport r;
    r.columns = {"kind", "s", "value", "raster_value", "target", "provenance"};
    if (dry) return r;
    const auto a = asymptotic_s_to_1(set, domain, s_list, cells, raster);
    asymptotic_rows(r, a, s_list, raster);
    r.notes.push_back("value: (1 - s) P_s over the exact geometry; target: twice the classical perimeter");
    return r;
}

ExperimentReport exp_s0(const ExperimentConfig& c, bool dry) {
    const json& G = c.geometry;
    const Grid grid = grid_at(req(G, "grid", "geometry"), "geometry.grid");
    const Shape set = shape_at(req(G, "set", "geometry"), "geometry.set");
    const Shape domain = shape_or(G, "domain", "geometry", Shape::everything());
    const TailModel tail = tail_or(G, "tail", "geometry", TailModel::empty());
    const auto s_list = numbers(c.parameters, "s", "parameters", std::vector<double>{0.10, 0.05, 0.025});
    require_s_list(s_list, "parameters.s");
    ExperimentReport r;
    r.columns = {"kind", "s", "value", "raster_value", "target", "provenance"};
    if (dry) return r;
    const int dim = grid.dim();
    const IndicatorField field = rasterize(set, grid, [&](const Point& p) { return !domain.contains(p, dim); });
    const auto a = asymptotic_s_to_0(field, mask_of(domain, grid), tail, s_list);
    asymptotic_rows(r, a, s_list, false);
    r.notes.push_back("value: s P_s on the grid; target: (omega - alpha)|E cap Omega| + alpha|CE cap Omega| on the rasterized volumes");
    return r;
}

ExperimentReport exp_alpha(const ExperimentConfig& c, bool dry) {
    const TailModel tail = tail_at(req(c.geometry, "tail", "geometry"), "geometry.tail");
    const auto R_list = numbers(c.parameters, "R", "parameters", std::vector<double>{2.0, 4.0});
    std::vector<Point> qs{{0, 0}};
    if (c.parameters.contains("q")) {
        const json& jq = c.parameters.at("q");
        if (!jq.is_array() || jq.empty() || !jq[0].is_array()) throw ConfigError("parameters.q: expected a list of points");
        qs.clear();
        for (std::size_t i = 0; i < jq.size(); ++i) qs.push_back(point(jq[i], "parameters.q[" + std::to_string(i) + "]"));
    }
    std::vector<double> ladder;
    for (int k = 0; k <= 5; ++k) ladder.push_back(0.05 * std::ldexp(1.0, -k));
    const auto s_list = numbers(c.parameters, "s", "parameters", ladder);
    require_s_list(s_list, "parameters.s");
    for (double R : R_list)
        if (!(R > 0)) throw ConfigError("parameters.R: radii must be positive");
    ExperimentReport r;
    r.columns = {"R", "qx", "qy", "s_alpha_first", "alpha", "catalogue", "provenance"};
    if (dry) return r;
    double lo = kInf, hi = -kInf;
    for (double R : R_list)
        for (const Point& q : qs) {
            const auto a = alpha_numeric(tail, R, q, s_list);
            r.add_row({R, q[0], q[1], a.values.y.front(), a.alpha, opt(a.catalogue),
                       a.catalogue ? ReportValue(std::string("paper")) : kNone});
            lo = std::min(lo, a.alpha);
            hi = std::max(hi, a.alpha);
            if (!r.summary.contains("catalogue") && a.catalogue) r.summary["catalogue"] = *a.catalogue;
        }
    r.summary["alpha"] = r.rows.empty() ? 0.0 : std::get<double>(r.rows.front()[4]);
    r.summary["spread"] = hi - lo;
    r.notes.push_back("alpha: polynomial extrapolation of s alpha_s(E, R, q) to s = 0");
    return r;
}

ExperimentReport exp_curvature(const ExperimentConfig& c, bool dry) {
    const json& G = c.geometry;
    const Grid grid = grid_at(req(G, "grid", "geometry"), "geometry.grid");
    const Shape set = shape_at(req(G, "set", "geometry"), "geometry.set");
    const TailModel tail = tail_or(G, "tail", "geometry", TailModel::empty());
    const Point q0 = point_at(c.parameters, "q", "parameters");
    const auto s_list = numbers(c.parameters, "s", "parameters", std::vector<double>{0.5});
    require_s_list(s_list, "parameters.s");
    const double pv = num(c.parameters, "pv_radius", "parameters", 0.0);
    std::vector<double> limit_s;
    if (c.parameters.contains("limit_s")) {
        limit_s = numbers(c.parameters, "limit_s", "parameters");
        require_s_list(limit_s, "parameters.limit_s");
    }
    ExperimentReport r;
    r.columns = {"kind", "s", "value", "scaled", "band", "target", "provenance"};
    if (dry) return r;
    const IndicatorField field = rasterize(set, grid, [](const Point&) { return false; });
    const Point q = nearest_interface_face(field, q0);
    r.summary["q"] = {q[0], q[1]};
    for (double s : s_list) {
        const auto cs = curvature_set(field, tail, q, s, pv);
        const double band = 5 * std::pow(grid.h(), 1 - s) * curvature_kernel_scale(grid, s);
        r.add_row({std::string("sample"), s, cs.value, s * cs.value, band, kNone, kNone});
    }
    if (!limit_s.empty()) {
        const auto lim = curvature_s0_limit(field, tail, q, limit_s);
        for (std::size_t i = 0; i < limit_s.size(); ++i)
            r.add_row({std::string("limit_sample"), limit_s[i], lim.values.y[i] / limit_s[i], lim.values.y[i], kNone, kNone, kNone});
        r.add_row({std::string("limit"), 0.0, kNone, lim.limit, kNone, lim.target, std::string("paper")});
        r.summary["limit"] = lim.limit;
        r.summary["target"] = lim.target;
    }
    r.notes.push_back("q is snapped to the nearest interface face midpoint; band = 5 h^(1-s) / (s h)");
    return r;
}

struct Datum {
    double base = 0;
    std::vector<std::pair<double, double>> bumps;
    double height = 0;
    double operator()(double x) const {
        for (const auto& [lo, hi] : bumps)
            if (x >= lo && x < hi) return base + height;
        return base;
    }
};

Datum datum_at(const json& G) {
    Datum d;
    if (!G.contains("datum")) return d;
    const json& j = req(G, "datum", "geometry");
    check_keys(j, {"base", "bumps", "height"}, "geometry.datum");
    d.base = num(j, "base", "geometry.datum", 0.0);
    d.height = num(j, "height", "geometry.datum", 0.0);
    if (j.contains("bumps")) {
        const json& b = j.at("bumps");
        if (!b.is_array()) throw ConfigError("geometry.datum.bumps: expected a list of [lo, hi]");
        for (std::size_t i = 0; i < b.size(); ++i) {
            const std::string w = "geometry.datum.bumps[" + std::to_string(i) + "]";
            if (!b[i].is_array() || b[i].size() != 2) throw ConfigError(w + ": expected [lo, hi]");
            const double lo = number(b[i][0], w), hi = number(b[i][1], w);
            if (!(hi > lo)) throw ConfigError(w + ": needs lo < hi");
            d.bumps.emplace_back(lo, hi);
        }
    }
    return d;
}

GraphMethod method_at(const json& P) {
    const std::string m = text(P, "method", "parameters", std::string("newton"));
    if (m == "newton") return GraphMethod::Newton;
    if (m == "gradient") return GraphMethod::Gradient;
    if (m == "preconditioned") return GraphMethod::PreconditionedGradient;
    throw ConfigError("parameters.method: expected newton, gradient or preconditioned");
}

ExperimentReport exp_graph(const ExperimentConfig& c, bool dry) {
    const json& G = c.geometry;
    const json& P = c.parameters;
    const double a = num(G, "a", "geometry", -1.0), b = num(G, "b", "geometry", 1.0);
    const double W = num(G, "W", "geometry", 3.0);
    const int cells = integer(G, "cells", "geometry", 64);
    if (!(b > a) || !(W > 0) || cells < 4) throw ConfigError("geometry: needs a < b, W > 0 and at least 4 cells");
    Datum datum = datum_at(G);
    const TailModel tail = tail_or(G, "tail", "geometry", TailModel::supgraph_bounded(datum.base, datum.base));
    const auto s_list = numbers(P, "s", "parameters", std::vector<double>{0.5});
    require_s_list(s_list, "parameters.s");
    const auto deltas = numbers(P, "delta", "parameters", std::vector<double>{datum.height});
    GraphOptions opts;
    opts.method = method_at(P);
    opts.tol = num(P, "tol", "parameters", 1e-8);
    opts.max_iter = integer(P, "max_iter", "parameters", 50000);
    const bool profiles = flag(P, "profiles", "parameters", true);
    if (!(opts.tol > 0)) throw ConfigError("parameters.tol: must be positive");
    ExperimentReport r;
    r.columns = {"delta", "s", "h", "energy", "gradient_norm", "left_gap", "right_gap", "left_sticks", "right_sticks",
                 "iterations"};
    if (dry) return r;
    int k = 0;
    for (double delta : deltas)
        for (double s : s_list) {
            datum.height = delta;
            const auto prob = GraphProblem::make(a, b, W, cells, datum, tail, s);
            const auto sol = minimize_graph(prob, opts);
            const double h = prob.grid.h();
            r.add_row({delta, s, h, sol.energy, sol.gradient_norm, sol.left_gap, sol.right_gap, sol.left_gap > 5 * h,
                       sol.right_gap > 5 * h, static_cast<std::int64_t>(sol.iterations)});
            if (profiles) r.files.emplace_back("graph_profile_" + std::to_string(k) + ".csv", profile_csv(prob.grid, sol.u));
            ++k;
        }
    r.notes.push_back("gaps: quadratic extrapolation of the three cells next to each wall against the adjacent datum; sticks = gap > 5h");
    return r;
}

ExperimentReport exp_annulus(const ExperimentConfig& c, bool dry) {
    const double rho = num(c.geometry, "rho", "geometry", 1.0), R = num(c.geometry, "R", "geometry", 2.0);
    if (!(rho > 0 && R > rho)) throw ConfigError("geometry: needs 0 < rho < R");
    const double M0 = annulus_threshold(rho, R);
    std::vector<double> Ms;
    if (c.parameters.contains("M") && c.parameters.contains("M_over_M0"))
        throw ConfigError("parameters: give either M or M_over_M0");
    if (c.parameters.contains("M")) {
        Ms = numbers(c.parameters, "M", "parameters");
    } else {
        for (double f : numbers(c.parameters, "M_over_M0", "parameters", std::vector<double>{0.5, 1.0, 2.0}))
            Ms.push_back(f * M0);
    }
    for (double M : Ms)
        if (!(M >= 0)) throw ConfigError("parameters.M: heights must be nonnegative");
    const int mesh = integer(c.parameters, "mesh", "parameters", 512);
    if (mesh < 64) throw ConfigError("parameters.mesh: at least 64");
    ExperimentReport r;
    r.columns = {"M", "M0", "c", "sticks", "gap", "numeric_gap", "sup_error", "provenance"};
    if (dry) return r;
    for (double M : Ms) {
        const auto cf = classical_annulus(rho, R, M);
        const auto nu = classical_annulus_numeric(rho, R, M, mesh);
        double sup = 0;
        for (std::size_t i = 0; i < nu.r.size(); ++i) sup = std::max(sup, std::abs(nu.u[i] - cf.profile(nu.r[i])));
        r.add_row({M, M0, cf.c, cf.sticks, cf.gap, nu.wall_gap, sup, std::string("derived")});
    }
    r.summary["M0"] = M0;
    r.notes.push_back("M0 = rho log((sqrt(R^2 - rho^2) + R) / rho); numeric profile from the graded-mesh radial solver");
    return r;
}

IndicatorField set_exterior(const ExperimentConfig& c, const Grid& grid) {
    const json& G = c.geometry;
    const Shape domain = shape_at(req(G, "domain", "geometry"), "geometry.domain");
    const int dim = grid.dim();
    IndicatorField f(grid);
    const json& ex = req(G, "exterior", "geometry");
    if (ex.is_object() && ex.value("type", "") == "random") {
        check_keys(ex, {"type", "density"}, "geometry.exterior");
        const double p = num(ex, "density", "geometry.exterior", 0.5);
        std::mt19937_64 rng(c.seed);
        for (std::size_t i = 0; i < grid.size(); ++i) f.values[i] = static_cast<double>(rng() >> 11) * 0x1.0p-53 < p;
    } else {
        f = rasterize(shape_at(ex, "geometry.exterior"), grid, [](const Point&) { return false; });
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        f.frozen[i] = !domain.contains(grid.center(i), dim);
        if (!f.frozen[i]) f.values[i] = 0.0;
    }
    return f;
}

std::string field_csv(const IndicatorField& f) {
    const Grid& g = f.grid;
    std::string out = g.dim() == 2 ? "x,y,value\n" : "x,value\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point p = g.center(i);
        out += format_double(p[0]) + ",";
        if (g.dim() == 2) out += format_double(p[1]) + ",";
        out += format_double(f.values[i]) + "\n";
    }
    return out;
}

ExperimentReport exp_set(const ExperimentConfig& c, bool dry) {
    const json& G = c.geometry;
    const Grid grid = grid_at(req(G, "grid", "geometry"), "geometry.grid");
    SetProblem prob{set_exterior(c, grid), tail_or(G, "tail", "geometry", TailModel::empty()),
                    num(c.parameters, "s", "parameters", 0.5)};
    require_s_list({prob.s}, "parameters.s");
    const std::string method = text(c.parameters, "method", "parameters", std::string("mincut"));
    if (method != "mincut" && method != "relaxed" && method != "brute" && method != "all")
        throw ConfigError("parameters.method: expected mincut, relaxed, brute or all");
    RelaxedOptions ro;
    ro.tol = num(c.parameters, "tol", "parameters", 1e-9);
    try {
        prob.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("geometry: ") + e.what());
    }
    ExperimentReport r;
    r.columns = {"method", "occupancy", "local", "nonlocal_box", "nonlocal_tail", "total", "certificate"};
    if (dry) return r;
    const SetModel model(prob);
    std::vector<SetSolution> sols;
    if (method == "mincut" || method == "all") sols.push_back(mincut_minimize(model));
    if (method == "relaxed" || method == "all") sols.push_back(relaxed_minimize(model, ro).thresholded);
    if (method == "brute" || (method == "all" && model.size() <= kBruteForceLimit)) sols.push_back(brute_force(model));
    for (const auto& s : sols)
        r.add_row({to_string(s.method), s.occupancy, s.energy.local, s.energy.nonlocal_box, s.energy.nonlocal_tail,
                   s.energy.total, s.certificate});
    r.summary["mask_rle"] = run_length_encode(sols.front().E);
    r.files.emplace_back("set_solution.csv", field_csv(sols.front().E));
    if (sols.size() > 1) {
        double lo = kInf, hi = -kInf;
        for (const auto& s : sols) {
            lo = std::min(lo, s.energy.total);
            hi = std::max(hi, s.energy.total);
        }
        r.checks["methods_agree"] = hi - lo <= 1e-6 * std::max(1.0, std::abs(lo));
    }
    return r;
}

ExperimentReport exp_sweep(const ExperimentConfig& c, bool dry) {
    const json& G = c.geometry;
    const json& P = c.parameters;
    const std::string family = text(G, "family", "geometry");
    const std::string param = text(P, "parameter", "parameters");
    const auto values = numbers(P, "values", "parameters");
    if (family != "half_ring" && family != "ramp") throw ConfigError("geometry.family: expected half_ring or ramp");
    if (param != "s" && !(param == "delta" && family == "half_ring"))
        throw ConfigError("parameters.parameter: expected s (or delta for the half-ring family)");
    const int cells = integer(G, "cells", "geometry", family == "half_ring" ? 96 : 64);
    const double box = num(G, "box_half_width", "geometry", family == "half_ring" ? 2.0 : 1.25);
    const bool comp = flag(G, "complemented", "geometry", false);
    const double h = num(G, "h", "geometry", 1.0), theta = num(G, "theta", "geometry", kPi / 8);
    const double s_fixed = num(P, "s", "parameters", 0.3);
    const double delta_fixed = num(P, "delta", "parameters", 0.3);
    if (param == "s") require_s_list(values, "parameters.values");
    else require_s_list({s_fixed}, "parameters.s");
    if (family == "half_ring" && comp) throw ConfigError("geometry.complemented: only for the ramp family");
    std::function<SetProblem(double)> gen;
    if (family == "half_ring") {
        gen = [=](double v) {
            return param == "delta" ? half_ring_problem(v, s_fixed, cells, box) : half_ring_problem(delta_fixed, v, cells, box);
        };
    } else {
        gen = [=](double v) { return ramp_problem(v, h, theta, cells, comp, box); };
    }
    try {
        for (double v : values) gen(v).validate();
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("sweep family: ") + e.what());
    }
    ExperimentReport r;
    r.columns = {param, "occupancy", "local", "nonlocal_box", "nonlocal_tail", "total", "interface_length"};
    if (dry) return r;
    const auto res = stickiness_sweep(gen, values);
    for (const auto& row : res.rows)
        r.add_row({row.value, row.occupancy, row.energy.local, row.energy.nonlocal_box, row.energy.nonlocal_tail,
                   row.energy.total, row.interface_length});
    r.summary["transition"] = std::isnan(res.transition) ? json(nullptr) : json(res.transition);
    r.notes.push_back("transition: first value in sweep order with occupancy < 0.01 or > 0.99");
    return r;
}

ExperimentReport exp_cylinder(const ExperimentConfig& c, bool dry) {
    const json& G = c.geometry;
    const double rho = num(G, "rho", "geometry", 1.0), R = num(G, "R", "geometry", 2.0);
    const double W = num(G, "W", "geometry", 2.0);
    const int cells = integer(G, "cells", "geometry", 64);
    const double far = num(G, "far_level", "geometry", -1.0);
    const double M = num(c.parameters, "M", "parameters", 1.0);
    const auto s_list = numbers(c.parameters, "s", "parameters", std::vector<double>{0.5, 0.3, 0.2, 0.1, 0.05});
    require_s_list(s_list, "parameters.s");
    const bool profiles = flag(c.parameters, "profiles", "parameters", true);
    if (!(rho > 0 && R > rho && W >= rho && cells >= 8))
        throw ConfigError("geometry: needs 0 < rho < R, W >= rho and at least 8 cells");
    ExperimentReport r;
    r.columns = {"s", "min_u", "left_gap", "right_gap", "energy", "iterations"};
    for (std::size_t i = 1; i < s_list.size(); ++i)
        if (!(s_list[i] < s_list[i - 1])) throw ConfigError("parameters.s: the cylinder sweep needs strictly decreasing s");
    if (dry) return r;

    // radial slice: u = M over [0, rho), 0 elsewhere in the box, far_level beyond
    const auto phi = [&](double x) { return x >= 0 && x < rho ? M : 0.0; };
    const TailModel tail = TailModel::supgraph_bounded(far, far);
    std::vector<double> mins;
    double last_left = 0, last_right = 0;
    int k = 0;
    for (double s : s_list) {
        const auto prob = GraphProblem::make(rho, R, W, cells, phi, tail, s);
        const auto sol = minimize_graph(prob);
        double mn = kInf;
        for (std::size_t i = prob.first_free(); i < prob.first_free() + prob.free_count(); ++i) mn = std::min(mn, sol.u[i]);
        mins.push_back(mn);
        last_left = sol.left_gap;
        last_right = sol.right_gap;
        r.add_row({s, mn, sol.left_gap, sol.right_gap, sol.energy, static_cast<std::int64_t>(sol.iterations)});
        if (profiles) r.files.emplace_back("cylinder_profile_" + std::to_string(k++) + ".csv", profile_csv(prob.grid, sol.u));
    }
    bool monotone = true;
    for (std::size_t i = 1; i < s_list.size(); ++i) monotone = monotone && mins[i] <= mins[i - 1] + 1e-9;
    r.checks["min_u_nonincreasing"] = monotone;
    r.checks["gaps_positive_at_smallest_s"] = last_left > 0 && last_right > 0;
    r.summary["min_u"] = mins;
    r.notes.push_back("1D slice over (rho, R): datum M on [0, rho), 0 on the rest of the box, far_level beyond it");
    return r;
}

const std::map<std::string, Runner>& runners() {
    static const std::map<std::string, Runner> m{
        {"perimeter", exp_perimeter}, {"asymptotics-s1", exp_s1}, {"asymptotics-s0", exp_s0},
        {"alpha", exp_alpha},         {"curvature", exp_curvature}, {"graph", exp_graph},
        {"annulus", exp_annulus},     {"set", exp_set},           {"sweep", exp_sweep},
        {"cylinder-demo", exp_cylinder},
    };
    return m;
}

ExperimentReport dispatch(const ExperimentConfig& c, bool dry) {
    const auto it = runners().find(c.experiment);
    if (it == runners().end()) throw ConfigError("unknown experiment id '" + c.experiment + "'");
    try {
        return it->second(c, dry);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("configuration: ") + e.what());
    }
}

} // namespace

// ---------------------------------------------------------------------------

const std::vector<std::string>& experiment_ids() {
    static const std::vector<std::string> ids{"perimeter", "asymptotics-s1", "asymptotics-s0", "alpha", "curvature",
                                              "graph",     "annulus",        "set",            "sweep", "cylinder-demo"};
    return ids;
}

ExperimentConfig ExperimentConfig::parse(const std::string& src) {
    json j;
    try {
        j = json::parse(src);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < src.size(); ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                          e.what());
    }
    check_keys(j, {"experiment", "geometry", "parameters", "output", "seed"}, "config");
    ExperimentConfig c;
    c.experiment = text(j, "experiment", "");
    const auto sc = schemas().find(c.experiment);
    if (sc == schemas().end()) throw ConfigError("experiment: unknown id '" + c.experiment + "'");
    if (j.contains("geometry")) c.geometry = j.at("geometry");
    if (j.contains("parameters")) c.parameters = j.at("parameters");
    check_keys(c.geometry, sc->second.geometry, "geometry");
    check_keys(c.parameters, sc->second.parameters, "parameters");
    c.output = text(j, "output", "", std::string("out"));
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed: expected a nonnegative integer");
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    validate(c);
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string ExperimentConfig::serialize() const {
    json j;
    j["experiment"] = experiment;
    j["geometry"] = geometry;
    j["parameters"] = parameters;
    j["output"] = output;
    j["seed"] = seed;
    return j.dump(2) + "\n";
}

std::string ExperimentConfig::hash() const {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : serialize()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void validate(const ExperimentConfig& c) { dispatch(c, true); }

ExperimentReport cylinder_demo(const ExperimentConfig& c) {
    if (c.experiment != "cylinder-demo") throw ConfigError("cylinder_demo needs experiment 'cylinder-demo'");
    return run(c);
}

ExperimentReport run(const ExperimentConfig& c) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentReport r = dispatch(c, false);
    r.experiment = c.experiment;
    r.config_hash = c.hash();
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void ExperimentReport::add_row(std::vector<ReportValue> row) {
    if (row.size() != columns.size()) throw UsageError("report row does not match the column list");
    rows.push_back(std::move(row));
}

std::string ExperimentReport::csv() const {
    auto cell = [](const ReportValue& v) -> std::string {
        return std::visit(
            [](const auto& x) -> std::string {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, double>) return format_double(x);
                else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(x);
                else if constexpr (std::is_same_v<T, bool>) return x ? "true" : "false";
                else {
                    if (x.find_first_of(",\"\n") == std::string::npos) return x;
                    std::string q = "\"";
                    for (char ch : x) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
                    return q + "\"";
                }
            },
            v);
    };
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
    out += "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell(row[i]);
        out += "\n";
    }
    return out;
}

nlohmann::json ExperimentReport::json() const {
    nlohmann::json j;
    j["experiment"] = experiment;
    j["config_hash"] = config_hash;
    j["versions"] = {{"nms", version},
                     {"boost", BOOST_LIB_VERSION},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)}};
    j["wall_time_s"] = wall_time;
    j["columns"] = columns;
    j["row_count"] = rows.size();
    j["summary"] = summary;
    j["checks"] = checks;
    j["notes"] = notes;
    std::vector<std::string> names;
    for (const auto& f : files) names.push_back(f.first);
    j["files"] = names;
    return j;
}

bool ExperimentReport::checks_passed() const {
    for (const auto& [k, v] : checks.items())
        if (!v.get<bool>()) return false;
    return true;
}

void write_report(const ExperimentReport& r, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    auto put = [&](const std::string& name, const std::string& content) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + (dir / name).string());
        out << content;
    };
    put(r.experiment + ".csv", r.csv());
    put(r.experiment + ".json", r.json().dump(2) + "\n");
    for (const auto& [name, content] : r.files) put(name, content);
}

Shape shape_from_json(const nlohmann::json& j) { return shape_at(j, "shape"); }
TailModel tail_from_json(const nlohmann::json& j) { return tail_at(j, "tail"); }
Grid grid_from_json(const nlohmann::json& j) { return grid_at(j, "grid"); }

Point nearest_interface_face(const IndicatorField& f, const Point& p) {
    const Grid& g = f.grid;
    const int nx = g.cells(0), ny = g.dim() == 2 ? g.cells(1) : 1;
    double best = kInf;
    Point out{0, 0};
    auto consider = [&](std::size_t a, std::size_t b) {
        if ((f.values[a] >= 0.5) == (f.values[b] >= 0.5)) return;
        const Point ca = g.center(a), cb = g.center(b);
        const Point m{0.5 * (ca[0] + cb[0]), 0.5 * (ca[1] + cb[1])};
        const double d = std::hypot(m[0] - p[0], m[1] - p[1]);
        if (d < best) {
            best = d;
            out = m;
        }
    };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            if (i + 1 < nx) consider(g.index(i, j), g.index(i + 1, j));
            if (j + 1 < ny) consider(g.index(i, j), g.index(i, j + 1));
        }
    if (!std::isfinite(best)) throw UsageError("the field has no interface inside the box");
    return out;
}

std::string run_length_encode(const IndicatorField& f) {
    if (f.values.empty()) return "";
    int cur = f.values[0] >= 0.5;
    std::string out = std::to_string(cur) + ":";
    std::size_t run = 0;
    bool first = true;
    for (double v : f.values) {
        const int b = v >= 0.5;
        if (b == cur) {
            ++run;
            continue;
        }
        out += (first ? "" : ",") + std::to_string(run);
        first = false;
        cur = b;
        run = 1;
    }
    out += (first ? "" : ",") + std::to_string(run);
    return out;
}

} // namespace nms
