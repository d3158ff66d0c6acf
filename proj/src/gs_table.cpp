#include "nms/gs_table.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
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

struct Hermite5 {
    double v, d1, d2;
};

double quintic(const Hermite5& a, const Hermite5& b, double H, double u) {
    const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
    const double h0 = 1 - 10 * u3 + 15 * u4 - 6 * u5, h1 = u - 6 * u3 + 8 * u4 - 3 * u5;
    const double h2 = 0.5 * (u2 - 3 * u3 + 3 * u4 - u5), h5 = 10 * u3 - 15 * u4 + 6 * u5;
    const double h4 = -4 * u3 + 7 * u4 - 3 * u5, h3 = 0.5 * (u3 - 2 * u4 + u5);
    return a.v * h0 + H * a.d1 * h1 + H * H * a.d2 * h2 + b.v * h5 + H * b.d1 * h4 + H * H * b.d2 * h3;
}

double quintic_derivative(const Hermite5& a, const Hermite5& b, double H, double u) {
    const double u2 = u * u, u3 = u2 * u, u4 = u3 * u;
    const double h0 = -30 * u2 + 60 * u3 - 30 * u4, h1 = 1 - 18 * u2 + 32 * u3 - 15 * u4;
    const double h2 = 0.5 * (2 * u - 9 * u2 + 12 * u3 - 5 * u4), h5 = 30 * u2 - 60 * u3 + 30 * u4;
    const double h4 = -12 * u2 + 28 * u3 - 15 * u4, h3 = 0.5 * (3 * u2 - 8 * u3 + 5 * u4);
    return (a.v * h0 + H * a.d1 * h1 + H * H * a.d2 * h2 + b.v * h5 + H * b.d1 * h4 + H * H * b.d2 * h3) / H;
}

double cubic(double v0, double d0, double v1, double d1, double H, double u) {
    const double u2 = u * u, u3 = u2 * u;
    return v0 * (2 * u3 - 3 * u2 + 1) + H * d0 * (u3 - 2 * u2 + u) + v1 * (-2 * u3 + 3 * u2) +
           H * d1 * (u3 - u2);
}

} // namespace

GsTable::GsTable(double s, int n, double T_max, int knot_count) : s_(s), T_(T_max), n_(n) {
    require_fractional(s);
    if (n != 1 && n != 2) throw ParameterError("GsTable dimension must be 1 or 2");
    if (!(T_max >= 10)) throw ParameterError("T_max must be at least 10");
    if (knot_count < 256) throw ParameterError("knot_count must be at least 256");
    p_ = 0.5 * (n + 1 + s);
    G_inf_ = 0.5 * std::sqrt(std::numbers::pi) * boost::math::tgamma_ratio(p_ - 0.5, p_);

    const auto N = static_cast<std::size_t>(knot_count);
    t_.resize(N);
    G_.resize(N);
    F_.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double xi = double(i) / double(N - 1);
        t_[i] = T_ * xi * xi;
    }
    const auto gfun = [this](double t) { return g(t); };
    G_[0] = 0.0;
    for (std::size_t i = 1; i < N; ++i) G_[i] = G_[i - 1] + gauss_integrate(gfun, t_[i - 1], t_[i], 10);
    const double gap = std::abs(G_[N - 1] - G_exact(T_));
    if (!(gap < 1e-11))
        throw NumericError("G_s quadrature failed to converge: cumulative value at T_max differs from the "
                           "incomplete-beta value by " + std::to_string(gap));
    for (std::size_t i = 0; i < N; ++i) {
        const double t = t_[i];
        F_[i] = t * G_[i] - (std::pow(1 + t * t, 1 - p_) - 1) / (2 * (1 - p_));
    }
}

double GsTable::g(double t) const { return std::pow(1 + t * t, -p_); }

double GsTable::G_exact(double t) const {
    const double a = std::abs(t);
    const double x = 1.0 / (1.0 + a * a);
    const double v = G_inf_ - 0.5 * boost::math::beta(p_ - 0.5, 0.5, x);
    return t < 0 ? -v : v;
}

std::size_t GsTable::locate(double t) const {
    const double xi = std::sqrt(t / T_);
    const auto N = t_.size();
    auto i = static_cast<std::size_t>(xi * double(N - 1));
    return std::min(i, N - 2);
}

double GsTable::G(double t) const {
    const double a = std::abs(t);
    double v;
    if (a >= T_) {
        v = G_exact(a);
    } else {
        const std::size_t i = locate(a);
        const double H = t_[i + 1] - t_[i];
        v = cubic(G_[i], g(t_[i]), G_[i + 1], g(t_[i + 1]), H, (a - t_[i]) / H);
    }
    return t < 0 ? -v : v;
}

double GsTable::Gg_beyond(double a) const {
    return a * G_exact(a) - (std::pow(1 + a * a, 1 - p_) - 1) / (2 * (1 - p_));
}

double GsTable::Gg(double t) const {
    const double a = std::abs(t);
    if (a >= T_) return Gg_beyond(a);
    const std::size_t i = locate(a);
    const double H = t_[i + 1] - t_[i];
    const Hermite5 lo{F_[i], G_[i], g(t_[i])}, hi{F_[i + 1], G_[i + 1], g(t_[i + 1])};
    return quintic(lo, hi, H, (a - t_[i]) / H);
}

double GsTable::dGg(double t) const {
    const double a = std::abs(t);
    double v;
    if (a >= T_) {
        v = G_exact(a);
    } else {
        const std::size_t i = locate(a);
        const double H = t_[i + 1] - t_[i];
        const Hermite5 lo{F_[i], G_[i], g(t_[i])}, hi{F_[i + 1], G_[i + 1], g(t_[i + 1])};
        v = quintic_derivative(lo, hi, H, (a - t_[i]) / H);
    }
    return t < 0 ? -v : v;
}

namespace {
std::mutex g_mu;
std::map<std::tuple<double, int, double, int>, std::shared_ptr<const GsTable>> g_gs;
std::map<std::tuple<const GsTable*, double, int>, std::shared_ptr<const GraphTailProfile>> g_profiles;
} // namespace

std::shared_ptr<const GsTable> GsTable::build(double s, int n, double T_max, int knot_count) {
    const auto key = std::make_tuple(s, n, T_max, knot_count);
    std::lock_guard lock(g_mu);
    if (auto it = g_gs.find(key); it != g_gs.end()) return it->second;
    auto t = std::make_shared<const GsTable>(s, n, T_max, knot_count);
    return g_gs.emplace(key, t).first->second;
}

void clear_gs_cache() {
    std::lock_guard lock(g_mu);
    g_gs.clear();
    g_profiles.clear();
}

// ---------------------------------------------------------------------------

GraphTailProfile::GraphTailProfile(std::shared_ptr<const GsTable> gs, double T_max, int knot_count)
    : gs_(std::move(gs)), s_(gs_->s()), T_(T_max) {
    const auto N = static_cast<std::size_t>(knot_count);
    const double s = s_, p = gs_->p();
    t_.resize(N);
    K_.resize(N);
    dK_.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double xi = double(i) / double(N - 1);
        t_[i] = T_ * xi * xi;
    }
    const auto series = [&](double t) {
        return std::pow(t, 1 + s) / (1 + s) - p * std::pow(t, 3 + s) / (3 * (3 + s)) +
               p * (p + 1) * std::pow(t, 5 + s) / (10 * (5 + s));
    };
    const auto integrand = [&](double t) { return gs_->G(t) * std::pow(t, s - 1); };
    std::vector<double> K(N);
    K[0] = 0;
    K[1] = series(t_[1]);
    for (std::size_t i = 2; i < N; ++i)
        K[i] = K[i - 1] + gauss_integrate(integrand, t_[i - 1], t_[i], i < 16 ? 24 : 10);
    K_[0] = 1 / (1 + s);
    dK_[0] = 0;
    for (std::size_t i = 1; i < N; ++i) {
        const double t = t_[i];
        K_[i] = K[i] / std::pow(t, 1 + s);
        dK_[i] = gs_->G(t) / (t * t) - (1 + s) * K_[i] / t;
    }
    const double R = std::pow(T_, s + 1 - 2 * p) / ((2 * p - 1) * (2 * p - 1 - s)) -
                     p * std::pow(T_, s - 1 - 2 * p) / ((2 * p + 1) * (2 * p + 1 - s));
    C_K_ = gs_->G_infinity() * std::pow(T_, s) / s + R - K[N - 1];
}

std::shared_ptr<const GraphTailProfile> GraphTailProfile::build(std::shared_ptr<const GsTable> gs, double T_max,
                                                                int knot_count) {
    if (gs->n() != 1) throw ParameterError("graph tail profiles are defined for n = 1");
    const auto key = std::make_tuple(gs.get(), T_max, knot_count);
    {
        std::lock_guard lock(g_mu);
        if (auto it = g_profiles.find(key); it != g_profiles.end()) return it->second;
    }
    auto prof = std::make_shared<const GraphTailProfile>(gs, T_max, knot_count);
    std::lock_guard lock(g_mu);
    return g_profiles.emplace(key, prof).first->second;
}

double GraphTailProfile::Khat(double T) const {
    const double s = s_;
    if (T >= T_) {
        const double p = gs_->p();
        const double R = std::pow(T, s + 1 - 2 * p) / ((2 * p - 1) * (2 * p - 1 - s)) -
                         p * std::pow(T, s - 1 - 2 * p) / ((2 * p + 1) * (2 * p + 1 - s));
        return (gs_->G_infinity() * std::pow(T, s) / s - C_K_ + R) / std::pow(T, 1 + s);
    }
    const double xi = std::sqrt(T / T_);
    const auto N = t_.size();
    const std::size_t i = std::min(static_cast<std::size_t>(xi * double(N - 1)), N - 2);
    const double H = t_[i + 1] - t_[i];
    return cubic(K_[i], dK_[i], K_[i + 1], dK_[i + 1], H, (T - t_[i]) / H);
}

double GraphTailProfile::Hhat(double T) const {
    const double p = gs_->p();
    double ratio;  // Gg(T) / T^2
    if (T < 1e-4) {
        const double T2 = T * T;
        ratio = 0.5 - p * T2 / 12 + p * (p + 1) * T2 * T2 / 60;
    } else {
        ratio = gs_->Gg(T) / (T * T);
    }
    return (ratio - Khat(T)) / (s_ - 1);
}

double GraphTailProfile::Jhat(double T) const {
    const double p = gs_->p();
    const double GT = T < 1e-4 ? 1 - p * T * T / 3 : gs_->G(T) / T;
    return -s_ * Khat(T) + GT;
}

double GraphTailProfile::psi(double v, double D) const {
    if (v == 0) return 0;
    return v * v * std::pow(D, -1 - s_) * Hhat(std::abs(v) / D);
}

double GraphTailProfile::dpsi(double v, double D) const {
    if (v == 0) return 0;
    return v * std::pow(D, -1 - s_) * Khat(std::abs(v) / D);
}

double GraphTailProfile::d2psi(double v, double D) const {
    return std::pow(D, -1 - s_) * Jhat(std::abs(v) / D);
}

} // namespace nms
