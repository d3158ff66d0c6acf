#pragma once

#include <memory>
#include <vector>

namespace nms {

/// Tabulated G_s(t) = int_0^t (1 + r^2)^-p dr and its antiderivative, p = (n + 1 + s) / 2.
///
/// Knots are quadratically graded on [0, T_max]. G uses cubic Hermite
/// interpolation with exact slopes; the antiderivative uses quintic Hermite
/// data (value, G, g) so that its derivative reproduces G. Beyond T_max both
/// are evaluated from the incomplete-beta form of the tail of G.
class GsTable {
public:
    static std::shared_ptr<const GsTable> build(double s, int n, double T_max = 50.0, int knot_count = 2048);

    double G(double t) const;
    double Gg(double t) const;        // the antiderivative, even in t
    double dGg(double t) const;       // derivative of the Gg interpolant
    double g(double t) const;         // (1 + t^2)^-p
    double G_infinity() const { return G_inf_; }

    double s() const { return s_; }
    int n() const { return n_; }
    double p() const { return p_; }
    double T_max() const { return T_; }
    const std::vector<double>& knots() const { return t_; }
    const std::vector<double>& G_values() const { return G_; }
    const std::vector<double>& Gg_values() const { return F_; }

    /// G(t) from the incomplete beta function, any t >= 0. Used beyond T_max.
    double G_exact(double t) const;

    GsTable(double s, int n, double T_max, int knot_count);

private:
    std::size_t locate(double t) const;
    double Gg_beyond(double t) const;

    double s_, p_, T_, G_inf_;
    int n_;
    std::vector<double> t_, G_, F_;
};

/// Far-field profile for graphs whose datum is constant beyond a cut at
/// distance D from a point (n = 1). With v the height difference to that level,
///   psi(v, D)   = int_D^inf Gg(v / d) d^-s dd = v^2 D^(-1-s) Hhat(|v| / D),
///   dpsi / dv   = v D^(-1-s) Khat(|v| / D),
///   d2psi / dv2 = D^(-1-s) Jhat(|v| / D),
/// with Khat(T) = T^-(1+s) int_0^T G(t) t^(s-1) dt.
class GraphTailProfile {
public:
    static std::shared_ptr<const GraphTailProfile> build(std::shared_ptr<const GsTable> gs, double T_max = 1e4,
                                                         int knot_count = 4096);

    double psi(double v, double D) const;
    double dpsi(double v, double D) const;
    double d2psi(double v, double D) const;

    double Khat(double T) const;
    double Hhat(double T) const;
    double Jhat(double T) const;

    GraphTailProfile(std::shared_ptr<const GsTable> gs, double T_max, int knot_count);

private:
    std::shared_ptr<const GsTable> gs_;
    double s_, T_, C_K_;
    std::vector<double> t_, K_, dK_;
};

void clear_gs_cache();

} // namespace nms
