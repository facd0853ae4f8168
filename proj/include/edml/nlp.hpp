#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "edml/errors.hpp"

namespace edml {

using SparseTriplets = std::vector<Eigen::Triplet<double>>;

/// Smooth equality-constrained NLP with variable bounds:
///
///   min f(x)   s.t.  c(x) = 0,  lower <= x <= upper
///
/// Callbacks must be deterministic for fixed x. Hessian callbacks append
/// lower-triangle triplets (row >= col); entries may repeat (summed). A null
/// Hessian callback means the corresponding Hessian is zero.
struct NlpSpec {
    int num_vars = 0;
    int num_constraints = 0;
    Eigen::VectorXd lower;  ///< -inf entries for unbounded below
    Eigen::VectorXd upper;  ///< +inf entries for unbounded above

    std::function<double(const Eigen::VectorXd&)> objective;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
    std::function<void(const Eigen::VectorXd&, SparseTriplets&)> objective_hessian;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> constraints;
    std::function<void(const Eigen::VectorXd&, SparseTriplets&)> constraint_jacobian;
    /// Triplets of sum_k y[k] * hess c_k(x).
    std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&, SparseTriplets&)>
        constraint_hessian;
};

struct SolverOptions {
    double tol_kkt = 1e-8;        ///< scaled KKT error for convergence
    int max_iter = 200;
    double mu_init = 0.1;         ///< initial barrier parameter
    double mu_shrink = 0.2;       ///< monotone barrier reduction factor
    double boundary_frac = 0.995; ///< fraction-to-the-boundary tau
    bool log_iterations = false;  ///< write an iteration trace to log_sink
    std::function<void(const std::string&)> log_sink;  ///< defaults to stderr
};

enum class SolveStatus {
    Converged,
    MaxIterations,
    SingularKkt,       ///< regularization could not produce a solvable system
    NumericalFailure,  ///< non-finite evaluation or failed line search
};

const char* solve_status_name(SolveStatus status);

/// Scaled KKT residuals at the returned point (the quantities compared with
/// tol_kkt): dual stationarity, primal feasibility, complementarity.
struct KktResiduals {
    double stationarity = 0.0;
    double feasibility = 0.0;
    double complementarity = 0.0;
    double max() const;
};

struct NlpResult {
    SolveStatus status = SolveStatus::NumericalFailure;
    Eigen::VectorXd x;
    /// Multipliers in the original (unscaled) problem: stationarity reads
    /// grad f + J^T eq_duals - lower_duals + upper_duals = 0 with both bound
    /// dual vectors >= 0.
    Eigen::VectorXd eq_duals;
    Eigen::VectorXd lower_duals;
    Eigen::VectorXd upper_duals;
    double objective = 0.0;
    KktResiduals residuals;
    int iterations = 0;
    double wall_time_s = 0.0;
    std::string message;
    /// Internal scaling applied during the solve (informational).
    double objective_scale = 1.0;
    Eigen::VectorXd constraint_scales;
};

/// Primal-dual interior-point solve started from x0 (projected strictly
/// inside the bounds). Throws Error(DimensionMismatch) on inconsistent
/// spec shapes and std::invalid_argument on missing callbacks.
NlpResult solve_nlp(const NlpSpec& spec, const Eigen::VectorXd& x0,
                    const SolverOptions& options = {});

}  // namespace edml
