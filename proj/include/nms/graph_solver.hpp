#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "nms/grid.hpp"
#include "nms/gs_table.hpp"
#include "nms/kernel.hpp"
#include "nms/tail.hpp"

namespace nms {

/// Nonlocal area problem for a 1D graph over Omega = (a, b).
struct GraphProblem {
    double a = -1, b = 1;
    Grid grid = Grid::line(-2, 2, 4);
    std::vector<double> phi;  // datum on frozen cells (ignored elsewhere)
    Mask frozen;              // cells with centre outside (a, b)
    TailModel tail = TailModel::supgraph_bounded(0, 0);  // datum beyond the box
    double s = 0.5;

    /// Grid over [a - W, b + W] with `cells` cells across Omega; W is rounded
    /// to whole cells so that a and b fall on cell faces.
    static GraphProblem make(double a, double b, double W, int cells, const std::function<double(double)>& phi,
                             const TailModel& tail, double s);

    std::size_t first_free() const;
    std::size_t free_count() const;
};

/// Energy of the pairs not both frozen, over ordered pairs, plus the pairs
/// reaching beyond the box. For constant tail levels the far-field part is
/// exact; for polynomial tails it is taken relative to the datum at the box
/// edge, which drops a u-independent constant.
class GraphEnergy {
public:
    explicit GraphEnergy(const GraphProblem& p);

    double energy(const std::vector<double>& u) const;
    /// Components on the free cells only.
    std::vector<double> gradient(const std::vector<double>& u) const;
    /// Dense Hessian on the free cells, row-major.
    std::vector<double> hessian(const std::vector<double>& u) const;
    /// Energy with all free cells replaced by `u`-values; helpers for tests.
    const GraphProblem& problem() const { return p_; }

private:
    struct Segment {
        double lo, hi;   // datum interval beyond the box (may be infinite)
        double level;    // constant level (bounded tails)
    };
    double tail_energy(std::size_t i, double ui) const;
    double tail_d1(std::size_t i, double ui) const;
    double tail_d2(std::size_t i, double ui) const;

    GraphProblem p_;
    std::shared_ptr<const KernelTable> table_;
    std::shared_ptr<const GsTable> gs_;
    std::shared_ptr<const GraphTailProfile> prof_;
    std::vector<Segment> segments_;
    bool polynomial_ = false;
};

enum class GraphMethod { Newton, Gradient, PreconditionedGradient };

struct GraphOptions {
    double tol = 1e-8;
    int max_iter = 50000;
    GraphMethod method = GraphMethod::Newton;
};

struct GraphSolution {
    std::vector<double> u;
    double energy = 0;
    double gradient_norm = 0;
    double left_gap = 0, right_gap = 0;
    int iterations = 0;
};

GraphSolution minimize_graph(const GraphProblem& problem, const GraphOptions& opts = {});

/// Wall gaps of a profile: quadratic extrapolation of the three nearest free
/// cells to the wall, compared with the adjacent frozen value.
std::pair<double, double> wall_gaps(const GraphProblem& problem, const std::vector<double>& u);

// ---------------------------------------------------------------------------
// Classical radial minimal graph on the annulus rho < |x| < R.

struct AnnulusSolution {
    double rho = 0, R = 0, M = 0;
    double c = 0;
    double M0 = 0;
    bool sticks = false;
    double gap = 0;
    double profile(double r) const;
};

double annulus_threshold(double rho, double R);
AnnulusSolution classical_annulus(double rho, double R, double M);

struct RadialProfile {
    std::vector<double> r, u;
    double wall_gap = 0;  // M - u(rho)
    int iterations = 0;
};

/// Damped Newton on the discretized radial area with a wall term
/// rho (M - u(rho)) for the free inner end; the inner value is clamped to M.
RadialProfile classical_annulus_numeric(double rho, double R, double M, int mesh);

} // namespace nms
