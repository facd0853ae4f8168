#pragma once

#include <optional>
#include <vector>

#include <Eigen/Sparse>

#include "edml/line_functions.hpp"
#include "edml/network.hpp"

namespace edml {

/// Maps per-line losses and midline flows to nodal withdrawals:
///
///   T(dth) = W * L(dth) + A^T * F(dth)
///
/// where W allocates each line's loss to buses. The half-line allocation
/// (W = |A|^T / 2) charges half of a line's loss to each endpoint; a loss
/// distribution factor (LDF) allocation (W = eta * 1^T) charges every line's
/// loss to a fixed bus profile eta >= 0 with sum(eta) = 1.
///
/// T_i(dth) is the net power withdrawn from bus i by the lines; nodal balance
/// in dispatch reads T(dth) = P - D.
struct InjectionModel {
    IncidenceSet incidence;
    std::vector<LineFunctionSet> lines;
    std::vector<std::pair<int, int>> endpoints;  ///< (from, to) dense bus indices per line
    std::optional<Eigen::VectorXd> ldf_eta;      ///< empty = half-line allocation

    int num_buses() const { return static_cast<int>(incidence.a.cols()); }
    int num_lines() const { return static_cast<int>(lines.size()); }
    bool uses_ldf() const { return ldf_eta.has_value(); }
};

/// Builds the model at a tier. When ldf_bus is given, losses are allocated
/// entirely to that bus (eta = unit vector); otherwise half-line is used.
InjectionModel make_injection_model(const Network& network, ApproxTier tier,
                                    int reference_bus_id,
                                    std::optional<int> ldf_bus = std::nullopt);

Eigen::VectorXd line_losses(const InjectionModel& model, const Eigen::VectorXd& dth);
Eigen::VectorXd line_flows(const InjectionModel& model, const Eigen::VectorXd& dth);

/// T(dth); dth has one entry per line.
Eigen::VectorXd injections(const InjectionModel& model, const Eigen::VectorXd& dth);

/// dT/d(dth), an n x m sparse matrix with column l supported on the endpoints
/// of line l (plus the LDF carrier buses).
Eigen::SparseMatrix<double> injections_jacobian(const InjectionModel& model,
                                                const Eigen::VectorXd& dth);

/// Diagonal of sum_i lambda_i * hess T_i(dth) as an m-vector; the Hessian is
/// diagonal because T_i depends on each dth_l separately. Entry l equals
/// w_l * L_l'' + (lambda_from - lambda_to) * F_l'' with w_l the loss weight
/// of line l under the model's allocation.
Eigen::VectorXd injections_hessian_diag(const InjectionModel& model, const Eigen::VectorXd& dth,
                                        const Eigen::VectorXd& lambda);

}  // namespace edml
