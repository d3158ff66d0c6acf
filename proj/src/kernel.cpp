#include "nms/kernel.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "nms/cache.hpp"
#include "nms/errors.hpp"
#include "nms/quadrature.hpp"

namespace nms {

namespace {

constexpr int kTensorOrder = 16;
constexpr int kAngularOrder = 32;

double phi_1d(double t, double p) {
    t = std::abs(t);
    if (t == 0.0) return 0.0;
    return std::pow(t, 2.0 - p) / ((1.0 - p) * (2.0 - p));
}

double tent(double z) { return std::max(0.0, 1.0 - std::abs(z)); }

double gauss_1d_near(int k, double p) {
    const auto f = [&](double t) { return tent(t - k) * std::pow(std::abs(t), -p); };
    return gauss_integrate(f, k - 1.0, k, kTensorOrder) + gauss_integrate(f, k, k + 1.0, kTensorOrder);
}

// Tensor Gauss over [x0,x1]x[y0,y1] of weight(y) |y|^-p, refined towards the origin.
template <class W>
double tensor_square(const W& weight, double p, double x0, double x1, double y0, double y1, int depth) {
    const double size = x1 - x0;
    const double dx = std::max({x0, -x1, 0.0});
    const double dy = std::max({y0, -y1, 0.0});
    const double dist = std::hypot(dx, dy);
    if (dist < 0.75 * size && depth < 40) {
        const double xm = 0.5 * (x0 + x1), ym = 0.5 * (y0 + y1);
        return tensor_square(weight, p, x0, xm, y0, ym, depth + 1) +
               tensor_square(weight, p, xm, x1, y0, ym, depth + 1) +
               tensor_square(weight, p, x0, xm, ym, y1, depth + 1) +
               tensor_square(weight, p, xm, x1, ym, y1, depth + 1);
    }
    const GaussRule& r = gauss_legendre(kTensorOrder);
    const double hx = 0.5 * (x1 - x0), hy = 0.5 * (y1 - y0);
    const double mx = 0.5 * (x0 + x1), my = 0.5 * (y0 + y1);
    double sum = 0;
    for (int a = 0; a < kTensorOrder; ++a) {
        const double x = mx + hx * r.nodes[a];
        for (int b = 0; b < kTensorOrder; ++b) {
            const double y = my + hy * r.nodes[b];
            sum += r.weights[a] * r.weights[b] * weight(x, y) * std::pow(x * x + y * y, -0.5 * p);
        }
    }
    return sum * hx * hy;
}

// Unit square with a corner at the origin, bilinear weight (A1 + B1 x1)(A2 + B2 x2)
// in local coordinates x in [0,1]^2. Radial integral in closed form.
double corner_square(double A1, double B1, double A2, double B2, double p) {
    if (A1 * A2 != 0.0 && p >= 2.0)
        throw NumericError("corner-singular weight is not integrable");
    const auto f = [&](double th) {
        const double c = std::cos(th), sn = std::sin(th);
        const double R = 1.0 / std::max(c, sn);
        double v = (A1 * B2 * sn + B1 * A2 * c) * std::pow(R, 3.0 - p) / (3.0 - p) +
                   B1 * B2 * c * sn * std::pow(R, 4.0 - p) / (4.0 - p);
        if (A1 * A2 != 0.0) v += A1 * A2 * std::pow(R, 2.0 - p) / (2.0 - p);
        return v;
    };
    const double q = std::numbers::pi / 4;
    return gauss_integrate(f, 0.0, q, kAngularOrder) + gauss_integrate(f, q, 2 * q, kAngularOrder);
}

double unit_pair_2d_near(Offset k, double p) {
    double total = 0;
    for (int a = -1; a <= 0; ++a)
        for (int b = -1; b <= 0; ++b) {
            const double x0 = k[0] + a, x1 = x0 + 1, y0 = k[1] + b, y1 = y0 + 1;
            const bool cx = (x0 == 0 || x1 == 0), cy = (y0 == 0 || y1 == 0);
            if (cx && cy) {
                const double s1 = x0 == 0 ? 1.0 : -1.0, s2 = y0 == 0 ? 1.0 : -1.0;
                const double A1 = 1 - std::abs(k[0]), A2 = 1 - std::abs(k[1]);
                const double B1 = (1 - std::abs(s1 - k[0])) - A1;
                const double B2 = (1 - std::abs(s2 - k[1])) - A2;
                total += corner_square(A1, B1, A2, B2, p);
            } else {
                const auto w = [&](double x, double y) { return tent(x - k[0]) * tent(y - k[1]); };
                total += tensor_square(w, p, x0, x1, y0, y1, 0);
            }
        }
    return total;
}

} // namespace

double unit_pair_closed_form_1d(int k, double p) {
    if (!(p > 0 && p < 2 && p != 1)) throw ParameterError("closed form needs exponent in (0,1) or (1,2)");
    return phi_1d(k + 1.0, p) - 2.0 * phi_1d(k, p) + phi_1d(k - 1.0, p);
}

double unit_pair_integral(int dim, Offset k, double p, int near_radius) {
    if (dim == 1) k[1] = 0;
    const int ka = std::abs(k[0]), kb = std::abs(k[1]);
    if (ka == 0 && kb == 0) return 0.0;
    const int cheb = std::max(ka, kb);
    if (cheb > near_radius) {
        const double d = dim == 1 ? ka : std::hypot(double(ka), double(kb));
        return std::pow(d, -p);
    }
    if (dim == 1) return ka == 1 ? unit_pair_closed_form_1d(1, p) : gauss_1d_near(ka, p);
    return unit_pair_2d_near({ka, kb}, p);
}

double pair_weight(Offset offset, const Grid& grid, double s, int near_radius) {
    require_fractional(s);
    const int n = grid.dim();
    const double p = n + s;
    return unit_pair_integral(n, offset, p, near_radius) * std::pow(grid.h(), 2.0 * n - p);
}

double unit_point_cell_integral(int dim, const Point& c, double p) {
    if (dim == 1) {
        const double a = c[0] - 0.5, b = c[0] + 0.5;
        if (a <= 0 && b >= 0) throw NumericError("point lies on the integration cell");
        const double lo = std::min(std::abs(a), std::abs(b)), hi = std::max(std::abs(a), std::abs(b));
        if (p == 1.0) return std::log(hi / lo);
        return (std::pow(hi, 1 - p) - std::pow(lo, 1 - p)) / (1 - p);
    }
    const double x0 = c[0] - 0.5, x1 = c[0] + 0.5, y0 = c[1] - 0.5, y1 = c[1] + 0.5;
    if (x0 <= 0 && x1 >= 0 && y0 <= 0 && y1 >= 0) throw NumericError("point lies on the integration cell");
    const auto one = [](double, double) { return 1.0; };
    return tensor_square(one, p, x0, x1, y0, y1, 0);
}

// ---------------------------------------------------------------------------

KernelTable::KernelTable(const Grid& grid, double exponent, int near_radius, std::vector<double> w, double check)
    : grid_(grid), dim_(grid.dim()), h_(grid.h()), exponent_(exponent), near_(near_radius),
      nx_(static_cast<std::size_t>(grid.cells(0))), w_(std::move(w)), check_(check) {}

double KernelTable::weight(std::size_t a, std::size_t b) const {
    const auto ca = grid_.coords(a), cb = grid_.coords(b);
    return weight(ca[0] - cb[0], ca[1] - cb[1]);
}

namespace {

std::shared_ptr<const KernelTable> compute_table(const Grid& grid, double p, int near_radius) {
    const int n = grid.dim();
    const int nx = grid.cells(0), ny = n == 2 ? grid.cells(1) : 1;
    std::vector<double> w(static_cast<std::size_t>(nx) * ny, 0.0);
    const double scale = std::pow(grid.h(), 2.0 * n - p);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            double v;
            if (n == 2 && i < j && j < nx && i <= near_radius && j <= near_radius)
                v = w[static_cast<std::size_t>(j) + nx * static_cast<std::size_t>(i)] / scale;
            else
                v = unit_pair_integral(n, {i, j}, p, near_radius);
            w[static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * j] = v * scale;
        }

    double check = 0;
    if (n == 1 && p != 1.0 && p < 2.0) {
        for (int k = 2; k <= near_radius + 1; ++k) {
            const double g = gauss_1d_near(k, p), c = unit_pair_closed_form_1d(k, p);
            check = std::max(check, std::abs(g - c) / std::abs(c));
        }
        if (check > 1e-8)
            throw NumericError("1D near-field quadrature disagrees with the closed form (relative gap " +
                               std::to_string(check) + ")");
    }
    return std::make_shared<const KernelTable>(grid, p, near_radius, std::move(w), check);
}

std::mutex g_mu;
std::map<std::tuple<int, int, int, double, double, int>, std::shared_ptr<const KernelTable>> g_tables;

} // namespace

std::shared_ptr<const KernelTable> KernelTable::build_with_exponent(const Grid& grid, double exponent,
                                                                    int near_radius) {
    if (!(exponent > 0 && exponent < 3)) throw ParameterError("kernel exponent out of range");
    if (near_radius < 1) throw ParameterError("near-field radius must be at least 1");
    const auto key = std::make_tuple(grid.dim(), grid.cells(0), grid.dim() == 2 ? grid.cells(1) : 1, grid.h(),
                                     exponent, near_radius);
    {
        std::lock_guard lock(g_mu);
        if (auto it = g_tables.find(key); it != g_tables.end()) return it->second;
    }
    std::shared_ptr<const KernelTable> t;
    if (auto cached = load_kernel_weights(grid, exponent, near_radius))
        t = std::make_shared<const KernelTable>(grid, exponent, near_radius, std::move(*cached), 0.0);
    else {
        t = compute_table(grid, exponent, near_radius);
        store_kernel_weights(grid, exponent, near_radius, t->raw());
    }
    std::lock_guard lock(g_mu);
    return g_tables.emplace(key, t).first->second;
}

std::shared_ptr<const KernelTable> KernelTable::build(const Grid& grid, double s, int near_radius) {
    require_fractional(s);
    return build_with_exponent(grid, grid.dim() + s, near_radius);
}

void clear_kernel_cache() {
    std::lock_guard lock(g_mu);
    g_tables.clear();
}

} // namespace nms
