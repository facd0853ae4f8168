#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edml/injections.hpp"
#include "edml/line_limits.hpp"
#include "edml/nlp.hpp"

namespace edml {

/// How line ratings enter the dispatch problem:
///   AngleWindows    : ratings are folded into per-line angle windows (bounds)
///   ExplicitCurrent : ratings stay as inequality rows I^2(dth) <= limit
/// Both give the same optimum; windows keep the KKT system smaller.
enum class LimitMode { AngleWindows, ExplicitCurrent };

struct DispatchOptions {
    ApproxTier tier = ApproxTier::Exact;
    std::optional<int> reference_bus;  ///< external id; defaults to slack/first bus
    std::optional<int> ldf_bus;        ///< allocate losses to this bus; half-line if empty
    LimitMode limit_mode = LimitMode::AngleWindows;
    bool relax_balance = false;        ///< allow over-satisfying demand (see relax_oversatisfaction)
    SolverOptions solver;
};

struct LineConstraint {
    BoundedWindow bounds;
    std::optional<double> current_sq_limit_ij;  ///< explicit-mode limit, from side
    std::optional<double> current_sq_limit_ji;  ///< explicit-mode limit, to side
};

/// Variable block for one generator after cost normalization. Piecewise
/// costs are decomposed into one variable per segment (convexity makes the
/// fill order automatic); a generator with p_min == p_max contributes no
/// variable, only a constant injection.
struct GenBlock {
    int gen_index = 0;
    int first_var = -1;
    int num_vars = 0;
    double p_base = 0.0;   ///< dispatch = p_base + sum of the block's variables
    double cost_base = 0.0;
    bool is_quadratic = false;
    QuadraticCost quad;             ///< valid when is_quadratic
    std::vector<double> seg_slope;  ///< piecewise slopes, one per variable
    std::vector<double> seg_width;  ///< piecewise segment widths
};

/// Assembled dispatch instance:
///
///   min  sum_g cost_g(p_g)
///   s.t. T(dth) = P - D        (nodal balance; "<=" when relaxed)
///        A_dot * theta = dth   (angles consistent with differences)
///        window_l <= dth_l <= window_u
///        p in generator boxes  [, I^2(dth) <= limit in explicit mode]
///
/// The network copy and the derived structures are immutable after assembly
/// except for `demand`, which sensitivity runs may perturb.
struct DispatchProblem {
    Network network;
    DispatchOptions options;
    InjectionModel model;
    std::vector<LineConstraint> line_constraints;
    std::vector<GenBlock> gen_blocks;
    Eigen::VectorXd demand;           ///< p.u. per bus
    Eigen::VectorXd fixed_injection;  ///< p.u. per bus: fixed gens + block bases
    double cost_constant = 0.0;
    int reference_bus = 0;  ///< resolved external id

    // Variable layout: [gen vars | reduced angles | angle differences |
    //                   relaxation slacks | current slacks]
    int num_gen_vars = 0;
    int theta_offset = 0;
    int dth_offset = 0;
    int relax_offset = -1;
    int current_slack_offset = -1;
    std::vector<std::pair<int, int>> current_rows;  ///< (line, side) per explicit row
    int num_vars = 0;
    int num_constraints = 0;
};

DispatchProblem assemble(const Network& network, const DispatchOptions& options);

/// Same instance with the nodal balance relaxed to T(dth) <= P - D, i.e.
/// delivery may exceed demand. The relaxed problem is convex whenever the
/// tier's loss is convex and flow affine on the windows, and its solution
/// matches the original whenever all prices stay positive.
DispatchProblem relax_oversatisfaction(const DispatchProblem& problem);

struct DispatchSolution {
    SolveStatus status = SolveStatus::NumericalFailure;
    double objective = 0.0;            ///< $/h
    Eigen::VectorXd gen_dispatch;      ///< per generator, p.u.
    Eigen::VectorXd bus_injection;     ///< per bus total generation, p.u.
    Eigen::VectorXd theta;             ///< per bus, reference pinned to 0
    Eigen::VectorXd delta_theta;       ///< per line
    Eigen::VectorXd lmp;               ///< per bus, $/p.u.-h (divide by base for $/MWh)
    Eigen::VectorXd window_dual_lower; ///< per line
    Eigen::VectorXd window_dual_upper;
    std::vector<bool> lmp_degenerate;  ///< strict complementarity failed at the bus
    KktResiduals residuals;
    int iterations = 0;
    double wall_time_s = 0.0;
    std::string message;
};

struct DispatchInit {
    Eigen::VectorXd gen_dispatch;  ///< per generator
    Eigen::VectorXd theta_dot;     ///< reduced angles (reference removed)
};

DispatchSolution solve_dispatch(const DispatchProblem& problem,
                                const DispatchInit* warm = nullptr);

/// Production cost of a dispatch under the network's own cost functions.
double total_cost(const Network& network, const Eigen::VectorXd& gen_dispatch);

/// Central finite-difference estimate of d(cost)/d(demand) at one bus,
/// resolving the problem warm-started from `solution` at demand +- step.
/// Throws when either perturbed solve fails.
double lmp_finite_difference(const DispatchProblem& problem, const DispatchSolution& solution,
                             int bus_id, double step);

/// Solves the same instance under two reference buses and reports how far
/// the two solutions are from the guaranteed equivalence: identical cost and
/// dispatch, with the first run's angles (shifted to the new reference)
/// reproducing the same angle differences.
struct ReferenceInvarianceReport {
    double objective_rel_delta = 0.0;
    double dispatch_delta = 0.0;       ///< inf-norm, p.u.
    double lmp_delta = 0.0;            ///< inf-norm, $/p.u.
    double mapped_angle_residual = 0.0;///< |A_dot_b * mapped - delta_theta_a|_inf
    double mapped_balance_residual = 0.0;
};

ReferenceInvarianceReport verify_reference_invariance(const Network& network,
                                                      const DispatchOptions& options,
                                                      int reference_a, int reference_b);

}  // namespace edml
