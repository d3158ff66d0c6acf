#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nms/grid.hpp"
#include "nms/perimeter.hpp"
#include "nms/tail.hpp"

namespace nms {

/// Set minimization of P_s(., Omega): frozen cells of `exterior` hold the data
/// inside the box, `tail` the data beyond it, Omega = the unfrozen cells.
struct SetProblem {
    IndicatorField exterior;
    TailModel tail = TailModel::empty();
    double s = 0.5;

    Mask omega() const { return exterior.unfrozen_mask(); }
    /// Omega nonempty and connected (4-neighbours in 2D, an interval in 1D).
    void validate() const;
};

enum class SetMethod { MinCut, RelaxedThreshold, BruteForce };
std::string to_string(SetMethod m);

struct SetSolution {
    IndicatorField E;
    PerimeterBreakdown energy;
    double occupancy = 0;
    SetMethod method = SetMethod::MinCut;
    double certificate = 0;  // min-cut: flow value in energy units plus the unary constant
};

/// Fixed-point scale of the flow network: capacities are energies times 2^32.
inline constexpr double kCapacityScale = 4294967296.0;

/// Unary and pairwise data of the binary objective, assembled once.
class SetModel {
public:
    explicit SetModel(const SetProblem& p);

    /// Energy of a labelling of the free cells (in free-cell order), without
    /// the exterior-exterior constant.
    double energy(const std::vector<double>& x) const;
    /// Free-cell labelling to a full field with the exterior data.
    IndicatorField field(const std::vector<double>& x) const;

    std::size_t size() const { return idx_.size(); }
    const std::vector<std::size_t>& cells() const { return idx_; }
    double cost_one(std::size_t k) const { return A_[k]; }   // unary cost of label 1
    double cost_zero(std::size_t k) const { return B_[k]; }  // unary cost of label 0
    double pair(std::size_t a, std::size_t b) const;
    const SetProblem& problem() const { return p_; }
    const KernelTable& table() const { return *table_; }
    const TailField& tails() const { return tails_; }

private:
    SetProblem p_;
    std::shared_ptr<const KernelTable> table_;
    TailField tails_;
    std::vector<std::size_t> idx_;
    std::vector<std::array<int, 2>> co_;
    std::vector<double> A_, B_;
};

SetSolution mincut_minimize(const SetProblem& problem);
SetSolution mincut_minimize(const SetModel& model);

struct RelaxedOptions {
    double tol = 1e-9;      // relative primal-dual gap
    int max_iter = 200000;
};

struct RelaxedResult {
    IndicatorField u;
    double energy = 0;      // relaxed objective
    double gap = 0;         // final primal-dual gap
    int iterations = 0;
    SetSolution thresholded;  // best level set among u >= 0.01 k
};

/// Preconditioned primal-dual iteration on the convex extension, followed by
/// thresholding.
RelaxedResult relaxed_minimize(const SetProblem& problem, const RelaxedOptions& opts = {});
RelaxedResult relaxed_minimize(const SetModel& model, const RelaxedOptions& opts = {});

inline constexpr std::size_t kBruteForceLimit = 20;

/// Exhaustive search; `landscape` (optional) receives the energy of every
/// labelling indexed by its bit pattern.
SetSolution brute_force(const SetProblem& problem, std::vector<double>* landscape = nullptr);
SetSolution brute_force(const SetModel& model, std::vector<double>* landscape = nullptr);

struct SweepRow {
    double value = 0;
    double occupancy = 0;
    PerimeterBreakdown energy;
    double interface_length = 0;  // faces between E and its complement inside Omega, times h^(n-1)
};

struct SweepResult {
    std::vector<SweepRow> rows;
    /// First value (in sweep order) with occupancy < 0.01 or > 0.99; NaN when none.
    double transition = 0;
};

SweepResult stickiness_sweep(const std::function<SetProblem(double)>& family, const std::vector<double>& values);

/// Standard families.
SetProblem half_ring_problem(double delta, double s, int cells, double box_half_width = 2.0);
/// Example of the ramp supergraph Sigma(h, theta) outside B_1; `complemented`
/// swaps the data and its complement.
SetProblem ramp_problem(double s, double h, double theta, int cells, bool complemented = false,
                        double box_half_width = 1.25);

} // namespace nms
