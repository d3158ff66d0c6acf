#include "nms/set_solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "nms/errors.hpp"
#include "nms/maxflow.hpp"
#include "nms/parallel.hpp"

namespace nms {

std::string to_string(SetMethod m) {
    switch (m) {
        case SetMethod::MinCut: return "mincut";
        case SetMethod::RelaxedThreshold: return "relaxed+threshold";
        case SetMethod::BruteForce: return "brute";
    }
    return "unknown";
}

void SetProblem::validate() const {
    require_fractional(s);
    const Grid& g = exterior.grid;
    const Mask om = omega();
    std::size_t first = g.size(), count = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (om[i]) {
            if (first == g.size()) first = i;
            ++count;
        }
    if (count == 0) throw ConfigError("Omega is empty");
    for (std::size_t i = 0; i < g.size(); ++i)
        if (exterior.frozen[i] && exterior.values[i] != 0.0 && exterior.values[i] != 1.0)
            throw ConfigError("exterior data must be binary");

    // flood fill over 4-neighbours (left/right only in 1D)
    std::vector<std::uint8_t> seen(g.size(), 0);
    std::vector<std::size_t> stack{first};
    seen[first] = 1;
    std::size_t reached = 0;
    const int nx = g.cells(0), ny = g.dim() == 2 ? g.cells(1) : 1;
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        ++reached;
        const auto c = g.coords(i);
        const int nb[4][2] = {{c[0] - 1, c[1]}, {c[0] + 1, c[1]}, {c[0], c[1] - 1}, {c[0], c[1] + 1}};
        for (const auto& n : nb) {
            if (n[0] < 0 || n[0] >= nx || n[1] < 0 || n[1] >= ny) continue;
            const std::size_t j = g.index(n[0], n[1]);
            if (om[j] && !seen[j]) {
                seen[j] = 1;
                stack.push_back(j);
            }
        }
    }
    if (reached != count) throw ConfigError("Omega is not connected");
}

// ---------------------------------------------------------------------------
// model

SetModel::SetModel(const SetProblem& p) : p_(p) {
    p_.validate();
    const Grid& g = p_.exterior.grid;
    table_ = KernelTable::build(g, p_.s);
    const Mask om = p_.omega();
    tails_ = compute_tail_field(g, p_.tail, p_.s, om);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (om[i]) {
            idx_.push_back(i);
            co_.push_back(g.coords(i));
        }
    const std::size_t n = idx_.size();
    A_.assign(n, 0.0);
    B_.assign(n, 0.0);
    const double hn = g.cell_measure();
    const auto& ex = p_.exterior;
    parallel_for(n, [&](std::size_t k) {
        const std::size_t i = idx_[k];
        double a = 0, b = 0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (!ex.frozen[j]) continue;
            const double w = table_->weight(i, j);
            a += w * (1 - ex.values[j]);
            b += w * ex.values[j];
        }
        A_[k] = a + hn * tails_.complement[i];
        B_[k] = b + hn * tails_.tail[i];
    });
}

double SetModel::pair(std::size_t a, std::size_t b) const {
    return table_->weight(co_[a][0] - co_[b][0], co_[a][1] - co_[b][1]);
}

double SetModel::energy(const std::vector<double>& x) const {
    const std::size_t n = size();
    std::vector<double> part(n, 0.0);
    parallel_for(n, [&](std::size_t a) {
        double e = x[a] * A_[a] + (1 - x[a]) * B_[a];
        for (std::size_t b = a + 1; b < n; ++b) e += pair(a, b) * std::abs(x[a] - x[b]);
        part[a] = e;
    });
    double total = 0;
    for (double e : part) total += e;
    return total;
}

IndicatorField SetModel::field(const std::vector<double>& x) const {
    IndicatorField f = p_.exterior;
    for (std::size_t k = 0; k < idx_.size(); ++k) f.values[idx_[k]] = x[k];
    return f;
}

namespace {

SetSolution finish(const SetModel& m, const std::vector<double>& x, SetMethod method) {
    SetSolution out{m.field(x), {}, 0, method, 0};
    out.energy = perimeter(out.E, m.problem().omega(), m.tails(), m.table());
    double occ = 0;
    for (double v : x) occ += v;
    out.occupancy = x.empty() ? 0 : occ / static_cast<double>(x.size());
    return out;
}

std::int64_t to_capacity(double e) {
    const double c = std::round(e * kCapacityScale);
    if (!(c >= 0) || c > 9.0e18) throw NumericError("capacity out of the fixed-point range");
    return static_cast<std::int64_t>(c);
}

} // namespace

// ---------------------------------------------------------------------------
// min-cut: source side = label 1. Cutting s->i pays label 0, i->t pays label 1.

SetSolution mincut_minimize(const SetProblem& problem) { return mincut_minimize(SetModel(problem)); }

SetSolution mincut_minimize(const SetModel& m) {
    const std::size_t n = m.size();
    if (n + 2 > static_cast<std::size_t>(std::numeric_limits<int>::max()))
        throw CapacityError("too many cells for the flow network");
    const int S = static_cast<int>(n), T = S + 1;
    MaxFlow mf(static_cast<int>(n) + 2);
    double constant = 0;
    std::int64_t total_cap = 0;
    auto add = [&](int u, int v, double w1, double w2) {
        const std::int64_t c1 = to_capacity(w1), c2 = to_capacity(w2);
        if (total_cap > std::numeric_limits<std::int64_t>::max() - c1 - c2)
            throw NumericError("total capacity overflows int64");
        total_cap += c1 + c2;
        mf.add_edge(u, v, c1, c2);
    };
    for (std::size_t k = 0; k < n; ++k) {
        const double a = m.cost_one(k), b = m.cost_zero(k), lo = std::min(a, b);
        constant += lo;
        if (b > lo) add(S, static_cast<int>(k), b - lo, 0);
        if (a > lo) add(static_cast<int>(k), T, a - lo, 0);
    }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            const double w = m.pair(a, b);
            add(static_cast<int>(a), static_cast<int>(b), w, w);
        }
    const std::int64_t flow = mf.solve(S, T);
    const auto side = mf.source_side();
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = side[k] ? 1.0 : 0.0;
    SetSolution out = finish(m, x, SetMethod::MinCut);
    out.certificate = static_cast<double>(flow) / kCapacityScale + constant;
    return out;
}

// ---------------------------------------------------------------------------
// relaxation: min sum_e w_e |u_i - u_j| + sum_i (A_i - B_i) u_i over [0,1]^n

RelaxedResult relaxed_minimize(const SetProblem& problem, const RelaxedOptions& opts) {
    return relaxed_minimize(SetModel(problem), opts);
}

RelaxedResult relaxed_minimize(const SetModel& m, const RelaxedOptions& opts) {
    if (!(opts.tol > 0)) throw ParameterError("relaxation tolerance must be positive");
    const std::size_t n = m.size();
    struct Edge {
        std::uint32_t i, j;
        double w;
    };
    std::vector<Edge> edges;
    edges.reserve(n * (n - 1) / 2);
    std::vector<double> c(n), tau(n, 0.0);
    double base = 0;
    for (std::size_t k = 0; k < n; ++k) {
        c[k] = m.cost_one(k) - m.cost_zero(k);
        base += m.cost_zero(k);
    }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            const double w = m.pair(a, b);
            if (w <= 0) continue;
            edges.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), w});
            tau[a] += w;
            tau[b] += w;
        }
    for (double& t : tau) t = t > 0 ? 1.0 / t : 1.0;

    std::vector<double> u(n, 0.0), ubar(n, 0.0), kt(n, 0.0), p(edges.size(), 0.0);
    auto primal = [&](const std::vector<double>& v) {
        double e = base;
        for (std::size_t k = 0; k < n; ++k) e += c[k] * v[k];
        for (const auto& ed : edges) e += ed.w * std::abs(v[ed.i] - v[ed.j]);
        return e;
    };
    auto dual = [&]() {
        double d = base;
        for (std::size_t k = 0; k < n; ++k) d += std::min(0.0, kt[k] + c[k]);
        return d;
    };

    double gap = kInf;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        // dual step, p in [-1,1]
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const auto& ed = edges[e];
            const double v = p[e] + 0.5 * (ubar[ed.i] - ubar[ed.j]);  // sigma_e K = 1/(2w) * w
            p[e] = std::clamp(v, -1.0, 1.0);
        }
        std::fill(kt.begin(), kt.end(), 0.0);
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const auto& ed = edges[e];
            kt[ed.i] += ed.w * p[e];
            kt[ed.j] -= ed.w * p[e];
        }
        for (std::size_t k = 0; k < n; ++k) {
            const double un = std::clamp(u[k] - tau[k] * (kt[k] + c[k]), 0.0, 1.0);
            ubar[k] = 2 * un - u[k];
            u[k] = un;
        }
        if (it % 20 == 19) {
            const double P = primal(u), D = dual();
            gap = P - D;
            if (gap <= opts.tol * std::max(1.0, std::abs(P))) {
                ++it;
                break;
            }
        }
    }
    if (!(gap <= opts.tol * std::max(1.0, std::abs(primal(u)))))
        throw IterationLimitError("relaxed minimization did not reach the requested gap", gap);


    // best level set; ties go to the smaller set (higher level)
    std::vector<double> best_x(n, 0.0), x(n);
    double best = m.energy(best_x);
    for (int k = 1; k <= 101; ++k) {
        const double level = k <= 100 ? 0.01 * k : 0.0;
        for (std::size_t i = 0; i < n; ++i) x[i] = (k <= 100 ? u[i] >= level : 1.0) ? 1.0 : 0.0;
        const double e = m.energy(x);
        if (e < best - 1e-12 * std::max(1.0, std::abs(best))) {
            best = e;
            best_x = x;
        }
    }
    const double relaxed = primal(u);
    RelaxedResult out{m.field(u), relaxed, gap, it, finish(m, best_x, SetMethod::RelaxedThreshold)};
    out.thresholded.certificate = relaxed;
    return out;
}

// ---------------------------------------------------------------------------
// exhaustive search in Gray-code order

SetSolution brute_force(const SetProblem& problem, std::vector<double>* landscape) {
    std::size_t free = 0;
    for (auto f : problem.exterior.frozen) free += !f;
    if (free > kBruteForceLimit) throw CapacityError("brute force is limited to 20 unfrozen cells");
    if (free == 0) {
        // nothing to choose: the exterior is the solution
        if (landscape) landscape->assign(1, 0.0);
        return SetSolution{problem.exterior, {}, 0, SetMethod::BruteForce, 0};
    }
    return brute_force(SetModel(problem), landscape);
}

SetSolution brute_force(const SetModel& m, std::vector<double>* landscape) {
    const std::size_t n = m.size();
    if (n > kBruteForceLimit) throw CapacityError("brute force is limited to 20 unfrozen cells");
    std::vector<double> W(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            if (a != b) W[a * n + b] = m.pair(a, b);
    const std::uint32_t count = std::uint32_t{1} << n;
    if (landscape) landscape->assign(count, 0.0);

    std::vector<int> x(n, 0);
    double e = 0;
    for (std::size_t k = 0; k < n; ++k) e += m.cost_zero(k);
    const double scale = std::max(1.0, std::abs(e));
    std::uint32_t best_code = 0;
    double best = e;
    if (landscape) (*landscape)[0] = e;
    std::uint32_t code = 0;
    for (std::uint32_t g = 1; g < count; ++g) {
        const int k = std::countr_zero(g);
        const int nv = 1 - x[k];
        double d = nv ? m.cost_one(k) - m.cost_zero(k) : m.cost_zero(k) - m.cost_one(k);
        for (std::size_t j = 0; j < n; ++j)
            if (j != static_cast<std::size_t>(k)) d += W[k * n + j] * (std::abs(nv - x[j]) - std::abs(1 - nv - x[j]));
        x[k] = nv;
        e += d;
        code ^= std::uint32_t{1} << k;
        if (landscape) (*landscape)[code] = e;
        const double tol = 1e-12 * scale;
        if (e < best - tol ||
            (e <= best + tol && (std::popcount(code) < std::popcount(best_code) ||
                                 (std::popcount(code) == std::popcount(best_code) && code < best_code)))) {
            best = e;
            best_code = code;
        }
    }
    std::vector<double> bx(n);
    for (std::size_t k = 0; k < n; ++k) bx[k] = (best_code >> k) & 1u ? 1.0 : 0.0;
    SetSolution out = finish(m, bx, SetMethod::BruteForce);
    out.certificate = best;
    return out;
}

// ---------------------------------------------------------------------------
// sweeps

SweepResult stickiness_sweep(const std::function<SetProblem(double)>& family, const std::vector<double>& values) {
    SweepResult out;
    out.transition = std::numeric_limits<double>::quiet_NaN();
    for (double v : values) {
        const SetProblem p = family(v);
        const SetSolution sol = mincut_minimize(p);
        SweepRow row{v, sol.occupancy, sol.energy, 0};
        const Grid& g = sol.E.grid;
        const Mask om = p.omega();
        const auto& u = sol.E.values;
        const int nx = g.cells(0), ny = g.dim() == 2 ? g.cells(1) : 1;
        std::size_t faces = 0;
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::size_t a = g.index(i, j);
                if (i + 1 < nx) {
                    const std::size_t b = g.index(i + 1, j);
                    faces += (om[a] || om[b]) && u[a] != u[b];
                }
                if (j + 1 < ny) {
                    const std::size_t b = g.index(i, j + 1);
                    faces += (om[a] || om[b]) && u[a] != u[b];
                }
            }
        row.interface_length = static_cast<double>(faces) * (g.dim() == 2 ? g.h() : 1.0);
        if (std::isnan(out.transition) && (row.occupancy < 0.01 || row.occupancy > 0.99)) out.transition = v;
        out.rows.push_back(row);
    }
    return out;
}

SetProblem half_ring_problem(double delta, double s, int cells, double box_half_width) {
    if (!(delta > 0) || 1 + delta >= box_half_width) throw ParameterError("half-ring must fit inside the box");
    const Grid g = Grid::square(-box_half_width, box_half_width, cells);
    auto outside = [](const Point& p) { return std::hypot(p[0], p[1]) >= 1.0; };
    return SetProblem{rasterize(Shape::half_ring(delta), g, outside), TailModel::empty(), s};
}

SetProblem ramp_problem(double s, double h, double theta, int cells, bool complemented, double box_half_width) {
    if (box_half_width <= 1.0) throw ParameterError("box must contain the unit ball");
    const Grid g = Grid::square(-box_half_width, box_half_width, cells);
    auto outside = [](const Point& p) { return std::hypot(p[0], p[1]) >= 1.0; };
    SetProblem p{rasterize(Shape::ramp(h, theta), g, outside), TailModel::supgraph_ramp(h, theta), s};
    if (complemented) {
        p.exterior = p.exterior.complement();
        p.tail = p.tail.complemented();
    }
    // unfrozen cells start empty
    for (std::size_t i = 0; i < p.exterior.size(); ++i)
        if (!p.exterior.frozen[i]) p.exterior.values[i] = 0.0;
    return p;
}

} // namespace nms
