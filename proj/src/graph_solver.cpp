#include "nms/graph_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>

#include "nms/errors.hpp"
#include "nms/parallel.hpp"

namespace nms {

GraphProblem GraphProblem::make(double a, double b, double W, int cells, const std::function<double(double)>& phi,
                                const TailModel& tail, double s) {
    require_fractional(s);
    if (!(b > a)) throw ParameterError("graph domain requires a < b");
    if (cells < 3) throw ParameterError("at least 3 cells across the domain are required");
    if (!(W >= 0)) throw ParameterError("collar width must be nonnegative");
    const double h = (b - a) / cells;
    const int collar = static_cast<int>(std::ceil(W / h - 1e-9));
    if (collar < 3) throw ParameterError("the collar must hold at least 3 cells");
    GraphProblem p;
    p.a = a;
    p.b = b;
    p.grid = Grid::line(a - collar * h, b + collar * h, cells + 2 * collar);
    p.tail = tail;
    p.s = s;
    p.phi.assign(p.grid.size(), 0.0);
    p.frozen.assign(p.grid.size(), 0);
    for (std::size_t i = 0; i < p.grid.size(); ++i) {
        const double x = p.grid.center(i)[0];
        p.frozen[i] = (x < a || x > b) ? 1 : 0;
        if (p.frozen[i]) p.phi[i] = phi(x);
    }
    tail.graph_value(0.0);  // validates the tail kind
    return p;
}

std::size_t GraphProblem::first_free() const {
    for (std::size_t i = 0; i < frozen.size(); ++i)
        if (!frozen[i]) return i;
    throw ConfigError("graph problem has no free cells");
}

std::size_t GraphProblem::free_count() const {
    std::size_t n = 0;
    for (auto f : frozen) n += f ? 0 : 1;
    return n;
}

// ---------------------------------------------------------------------------

GraphEnergy::GraphEnergy(const GraphProblem& p) : p_(p) {
    if (p_.grid.dim() != 1) throw ConfigError("graph problems are one-dimensional");
    if (p_.phi.size() != p_.grid.size() || p_.frozen.size() != p_.grid.size())
        throw ConfigError("graph datum does not match the grid");
    require_fractional(p_.s);
    table_ = KernelTable::build_with_exponent(p_.grid, p_.s);
    gs_ = GsTable::build(p_.s, 1);
    const double lo = p_.grid.lower(0), hi = p_.grid.upper(0);
    if (const auto* bd = std::get_if<TailModel::SupgraphBounded>(&p_.tail.variant())) {
        prof_ = GraphTailProfile::build(gs_);
        if (lo <= 0) {
            segments_.push_back({-kInf, lo, bd->left});
        } else {
            segments_.push_back({-kInf, 0.0, bd->left});
            segments_.push_back({0.0, lo, bd->right});
        }
        if (hi >= 0) {
            segments_.push_back({hi, kInf, bd->right});
        } else {
            segments_.push_back({hi, 0.0, bd->left});
            segments_.push_back({0.0, kInf, bd->right});
        }
    } else if (std::holds_alternative<TailModel::SupgraphPolynomial>(p_.tail.variant())) {
        polynomial_ = true;
    } else {
        throw ConfigError("graph tails must be supgraph_bounded or supgraph_polynomial");
    }
}

namespace {

template <class F>
double beyond(const F& f) {
    static thread_local boost::math::quadrature::exp_sinh<double> es;
    return es.integrate(f, 0.0, kInf, 1e-11);
}

} // namespace

// Far-field pieces carry the factor 2 of the ordered pairs and the cell measure.
double GraphEnergy::tail_energy(std::size_t i, double ui) const {
    const double x = p_.grid.center(i)[0], h = p_.grid.h();
    const double lo = p_.grid.lower(0), hi = p_.grid.upper(0);
    double e = 0;
    if (polynomial_) {
        const auto& t = p_.tail;
        const double el = t.graph_value(lo), er = t.graph_value(hi);
        e += beyond([&](double r) {
            const double y = lo - r, d = x - y, f = t.graph_value(y);
            return (gs_->Gg((ui - f) / d) - gs_->Gg((el - f) / d)) * std::pow(d, -p_.s);
        });
        e += beyond([&](double r) {
            const double y = hi + r, d = y - x, f = t.graph_value(y);
            return (gs_->Gg((ui - f) / d) - gs_->Gg((er - f) / d)) * std::pow(d, -p_.s);
        });
    } else {
        for (const auto& sg : segments_) {
            const double d1 = sg.hi <= lo ? x - sg.hi : sg.lo - x;
            const double d2 = sg.hi <= lo ? x - sg.lo : sg.hi - x;
            const double v = ui - sg.level;
            e += prof_->psi(v, d1) - (std::isfinite(d2) ? prof_->psi(v, d2) : 0.0);
        }
    }
    return 2 * h * e;
}

double GraphEnergy::tail_d1(std::size_t i, double ui) const {
    const double x = p_.grid.center(i)[0], h = p_.grid.h();
    const double lo = p_.grid.lower(0), hi = p_.grid.upper(0);
    double e = 0;
    if (polynomial_) {
        const auto& t = p_.tail;
        e += beyond([&](double r) {
            const double y = lo - r, d = x - y;
            return gs_->G((ui - t.graph_value(y)) / d) * std::pow(d, -1 - p_.s);
        });
        e += beyond([&](double r) {
            const double y = hi + r, d = y - x;
            return gs_->G((ui - t.graph_value(y)) / d) * std::pow(d, -1 - p_.s);
        });
    } else {
        for (const auto& sg : segments_) {
            const double d1 = sg.hi <= lo ? x - sg.hi : sg.lo - x;
            const double d2 = sg.hi <= lo ? x - sg.lo : sg.hi - x;
            const double v = ui - sg.level;
            e += prof_->dpsi(v, d1) - (std::isfinite(d2) ? prof_->dpsi(v, d2) : 0.0);
        }
    }
    return 2 * h * e;
}

double GraphEnergy::tail_d2(std::size_t i, double ui) const {
    const double x = p_.grid.center(i)[0], h = p_.grid.h();
    const double lo = p_.grid.lower(0), hi = p_.grid.upper(0);
    double e = 0;
    if (polynomial_) {
        const auto& t = p_.tail;
        e += beyond([&](double r) {
            const double y = lo - r, d = x - y;
            return gs_->g((ui - t.graph_value(y)) / d) * std::pow(d, -2 - p_.s);
        });
        e += beyond([&](double r) {
            const double y = hi + r, d = y - x;
            return gs_->g((ui - t.graph_value(y)) / d) * std::pow(d, -2 - p_.s);
        });
    } else {
        for (const auto& sg : segments_) {
            const double d1 = sg.hi <= lo ? x - sg.hi : sg.lo - x;
            const double d2 = sg.hi <= lo ? x - sg.lo : sg.hi - x;
            const double v = ui - sg.level;
            e += prof_->d2psi(v, d1) - (std::isfinite(d2) ? prof_->d2psi(v, d2) : 0.0);
        }
    }
    return 2 * h * e;
}

double GraphEnergy::energy(const std::vector<double>& u) const {
    const std::size_t N = p_.grid.size();
    if (u.size() != N) throw ConfigError("profile size does not match the grid");
    const double h = p_.grid.h();
    std::vector<double> row(N, 0.0);
    parallel_for(N, [&](std::size_t i) {
        double e = 0;
        for (std::size_t j = 0; j < N; ++j) {
            if (j == i || (p_.frozen[i] && p_.frozen[j])) continue;
            const int k = static_cast<int>(j) - static_cast<int>(i);
            const double d = std::abs(k) * h;
            e += table_->weight(k) * gs_->Gg((u[i] - u[j]) / d);
        }
        if (!p_.frozen[i]) e += tail_energy(i, u[i]);
        row[i] = e;
    });
    double e = 0;
    for (double r : row) e += r;
    return e;
}

std::vector<double> GraphEnergy::gradient(const std::vector<double>& u) const {
    const std::size_t N = p_.grid.size(), f0 = p_.first_free(), m = p_.free_count();
    const double h = p_.grid.h();
    std::vector<double> g(m, 0.0);
    parallel_for(m, [&](std::size_t k) {
        const std::size_t i = f0 + k;
        double v = 0;
        for (std::size_t j = 0; j < N; ++j) {
            if (j == i) continue;
            const int o = static_cast<int>(j) - static_cast<int>(i);
            const double d = std::abs(o) * h;
            v += 2 * table_->weight(o) * gs_->G((u[i] - u[j]) / d) / d;
        }
        g[k] = v + tail_d1(i, u[i]);
    });
    return g;
}

std::vector<double> GraphEnergy::hessian(const std::vector<double>& u) const {
    const std::size_t N = p_.grid.size(), f0 = p_.first_free(), m = p_.free_count();
    const double h = p_.grid.h();
    std::vector<double> H(m * m, 0.0);
    parallel_for(m, [&](std::size_t k) {
        const std::size_t i = f0 + k;
        double diag = 0;
        for (std::size_t j = 0; j < N; ++j) {
            if (j == i) continue;
            const int o = static_cast<int>(j) - static_cast<int>(i);
            const double d = std::abs(o) * h;
            const double c = 2 * table_->weight(o) * gs_->g((u[i] - u[j]) / d) / (d * d);
            diag += c;
            if (!p_.frozen[j]) H[k * m + (j - f0)] = -c;
        }
        H[k * m + k] = diag + tail_d2(i, u[i]);
    });
    return H;
}

// ---------------------------------------------------------------------------

std::pair<double, double> wall_gaps(const GraphProblem& p, const std::vector<double>& u) {
    const std::size_t f0 = p.first_free(), m = p.free_count();
    if (m < 3 || f0 == 0 || f0 + m >= u.size()) throw ConfigError("gap extrapolation needs 3 free cells and a collar");
    // quadratic through centres at h/2, 3h/2, 5h/2 evaluated at the wall
    const auto trace = [](double u1, double u2, double u3) { return (15 * u1 - 10 * u2 + 3 * u3) / 8; };
    const std::size_t l = f0 + m - 1;
    const double left = std::abs(trace(u[f0], u[f0 + 1], u[f0 + 2]) - p.phi[f0 - 1]);
    const double right = std::abs(trace(u[l], u[l - 1], u[l - 2]) - p.phi[l + 1]);
    return {left, right};
}

GraphSolution minimize_graph(const GraphProblem& problem, const GraphOptions& opts) {
    const GraphEnergy F(problem);
    const std::size_t f0 = problem.first_free(), m = problem.free_count();
    std::vector<double> u = problem.phi;
    {
        const double ul = problem.phi[f0 - 1], ur = problem.phi[f0 + m];
        for (std::size_t k = 0; k < m; ++k) u[f0 + k] = ul + (ur - ul) * (k + 1.0) / (m + 1.0);
    }
    const auto sup = [](const std::vector<double>& g) {
        double v = 0;
        for (double x : g) v = std::max(v, std::abs(x));
        return v;
    };

    double E = F.energy(u);
    std::vector<double> g = F.gradient(u);
    double gn = sup(g);
    int it = 0;
    double step = 1.0;
    while (gn > opts.tol) {
        if (it >= opts.max_iter)
            throw IterationLimitError("graph minimization hit the iteration limit", gn);
        ++it;
        std::vector<double> dir(m);
        if (opts.method == GraphMethod::Newton) {
            const auto Hv = F.hessian(u);
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> H(
                Hv.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
            Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(m));
            const Eigen::VectorXd d = H.ldlt().solve(-gv);
            for (std::size_t k = 0; k < m; ++k) dir[k] = d[static_cast<Eigen::Index>(k)];
            step = 1.0;
        } else if (opts.method == GraphMethod::PreconditionedGradient) {
            const auto Hv = F.hessian(u);
            for (std::size_t k = 0; k < m; ++k) dir[k] = -g[k] / Hv[k * m + k];
            step = std::min(1.0, 2 * step);
        } else {
            for (std::size_t k = 0; k < m; ++k) dir[k] = -g[k];
            step = 2 * step;
        }
        double slope = 0;
        for (std::size_t k = 0; k < m; ++k) slope += g[k] * dir[k];
        if (!(slope < 0)) throw NumericError("graph descent direction is not a descent direction");

        // Armijo backtracking; near the optimum energy differences drown in
        // roundoff, so a step that reduces the gradient is also accepted.
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            std::vector<double> v = u;
            for (std::size_t k = 0; k < m; ++k) v[f0 + k] += step * dir[k];
            const double Ev = F.energy(v);
            const bool armijo = Ev <= E + 1e-4 * step * slope;
            std::vector<double> gv;
            bool grad_ok = false;
            if (!armijo && std::abs(Ev - E) <= 1e-12 * std::max(1.0, std::abs(E))) {
                gv = F.gradient(v);
                grad_ok = sup(gv) < gn;
            }
            if (armijo || grad_ok) {
                u = std::move(v);
                E = Ev;
                g = grad_ok ? std::move(gv) : F.gradient(u);
                gn = sup(g);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) throw IterationLimitError("graph line search failed to make progress", gn);
    }

    GraphSolution sol;
    sol.u = std::move(u);
    sol.energy = E;
    sol.gradient_norm = gn;
    sol.iterations = it;
    const auto [l, r] = wall_gaps(problem, sol.u);
    sol.left_gap = l;
    sol.right_gap = r;
    return sol;
}

// ---------------------------------------------------------------------------

double annulus_threshold(double rho, double R) {
    if (!(rho > 0 && R > rho)) throw ParameterError("annulus requires 0 < rho < R");
    return rho * std::log((std::sqrt(R * R - rho * rho) + R) / rho);
}

double AnnulusSolution::profile(double r) const {
    if (c == 0) return 0.0;
    r = std::max(r, c);
    return c * std::log((std::sqrt(R * R - c * c) + R) / (std::sqrt(r * r - c * c) + r));
}

AnnulusSolution classical_annulus(double rho, double R, double M) {
    AnnulusSolution a;
    a.rho = rho;
    a.R = R;
    a.M = M;
    a.M0 = annulus_threshold(rho, R);
    if (!(M >= 0)) throw ParameterError("annulus height M must be nonnegative");
    if (M > a.M0) {
        a.c = rho;
        a.sticks = true;
        a.gap = M - a.M0;
        return a;
    }
    const auto f = [&](double c) {
        return c * std::log((std::sqrt(R * R - c * c) + R) / (std::sqrt(rho * rho - c * c) + rho));
    };
    double lo = 0, hi = rho;
    while (hi - lo > 1e-12 * rho) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < M ? lo : hi) = mid;
    }
    a.c = 0.5 * (lo + hi);
    return a;
}

RadialProfile classical_annulus_numeric(double rho, double R, double M, int mesh) {
    if (!(rho > 0 && R > rho)) throw ParameterError("annulus requires 0 < rho < R");
    if (mesh < 64) throw ParameterError("mesh must be at least 64");
    if (!(M >= 0)) throw ParameterError("annulus height M must be nonnegative");
    RadialProfile out;
    // graded towards rho, where the extremal profile has a vertical tangent
    out.r.resize(mesh + 1);
    for (int k = 0; k <= mesh; ++k) {
        const double t = static_cast<double>(k) / mesh;
        out.r[k] = rho + (R - rho) * t * t;
    }
    const auto& r = out.r;

    // unknowns u_0..u_{mesh-1}; u_mesh = 0. With `clamped`, u_0 = M.
    const auto solve = [&](bool clamped, std::vector<double>& u) {
        const int first = clamped ? 1 : 0, m = mesh - first;
        const auto energy = [&](const std::vector<double>& v) {
            double e = clamped ? 0.0 : rho * (M - v[0]);
            for (int k = 0; k < mesh; ++k) {
                const double dr = r[k + 1] - r[k], p = (v[k + 1] - v[k]) / dr;
                e += 0.5 * (r[k] + r[k + 1]) * std::sqrt(1 + p * p) * dr;
            }
            return e;
        };
        int it = 0;
        while (true) {
            Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
            Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
            if (!clamped) g[0] -= rho;
            for (int k = 0; k < mesh; ++k) {
                const double dr = r[k + 1] - r[k], p = (u[k + 1] - u[k]) / dr, rm = 0.5 * (r[k] + r[k + 1]);
                const double q = std::sqrt(1 + p * p);
                const double d1 = rm * p / q, d2 = rm / (q * q * q) / dr;
                const int a = k - first, b = k + 1 - first;
                if (a >= 0) {
                    g[a] -= d1;
                    H(a, a) += d2;
                }
                if (b < m) {
                    g[b] += d1;
                    H(b, b) += d2;
                }
                if (a >= 0 && b < m) {
                    H(a, b) -= d2;
                    H(b, a) -= d2;
                }
            }
            if (g.lpNorm<Eigen::Infinity>() < 1e-13) break;
            if (++it > 500) throw NumericError("radial Newton iteration did not converge");
            const Eigen::VectorXd d = H.ldlt().solve(-g);
            if (!d.allFinite()) throw NumericError("radial Newton step is not finite");
            if (d.lpNorm<Eigen::Infinity>() < 1e-13 * (1 + M)) break;
            const double E0 = energy(u), slope = g.dot(d);
            double t = 1.0;
            std::vector<double> v;
            for (int ls = 0;; ++ls) {
                v = u;
                for (int k = 0; k < m; ++k) v[k + first] += t * d[k];
                if (energy(v) <= E0 + 1e-4 * t * slope || std::abs(energy(v) - E0) < 1e-15) break;
                t *= 0.5;
                if (ls > 60) throw NumericError("radial Newton line search failed");
            }
            u = std::move(v);
        }
        out.iterations += it;
    };

    std::vector<double> u(mesh + 1);
    for (int k = 0; k <= mesh; ++k) u[k] = M * (1 - static_cast<double>(k) / mesh);
    if (M == 0) {
        out.u.assign(mesh + 1, 0.0);
        return out;
    }
    // Clamped first; the end is released only when lowering it pays off,
    // i.e. the area saved per unit drop exceeds the wall cost rho.
    solve(true, u);
    {
        const double dr = r[1] - r[0], p = (u[1] - u[0]) / dr, rm = 0.5 * (r[0] + r[1]);
        if (rm * std::abs(p) / std::sqrt(1 + p * p) > rho) solve(false, u);
    }
    out.wall_gap = M - u[0];
    out.u = std::move(u);
    return out;
}

} // namespace nms
