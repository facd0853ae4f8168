#include "edml/injections.hpp"

namespace edml {

InjectionModel make_injection_model(const Network& network, ApproxTier tier,
                                    int reference_bus_id, std::optional<int> ldf_bus) {
    InjectionModel model;
    model.incidence = build_incidence(network, reference_bus_id);
    model.lines = make_line_functions(network, tier);
    model.endpoints.reserve(network.lines.size());
    for (const auto& line : network.lines) {
        model.endpoints.emplace_back(network.bus_index(line.from_bus),
                                     network.bus_index(line.to_bus));
    }
    if (ldf_bus) {
        Eigen::VectorXd eta = Eigen::VectorXd::Zero(network.num_buses());
        eta[network.bus_index(*ldf_bus)] = 1.0;
        model.ldf_eta = std::move(eta);
    }
    return model;
}

static void check_dims(const InjectionModel& model, const Eigen::VectorXd& dth) {
    if (dth.size() != model.num_lines()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "expected " + std::to_string(model.num_lines()) + " angle differences, got " +
                        std::to_string(dth.size()));
    }
}

Eigen::VectorXd line_losses(const InjectionModel& model, const Eigen::VectorXd& dth) {
    check_dims(model, dth);
    Eigen::VectorXd out(model.num_lines());
    for (int l = 0; l < model.num_lines(); ++l) out[l] = model.lines[l].loss(dth[l]);
    return out;
}

Eigen::VectorXd line_flows(const InjectionModel& model, const Eigen::VectorXd& dth) {
    check_dims(model, dth);
    Eigen::VectorXd out(model.num_lines());
    for (int l = 0; l < model.num_lines(); ++l) out[l] = model.lines[l].midline_flow(dth[l]);
    return out;
}

Eigen::VectorXd injections(const InjectionModel& model, const Eigen::VectorXd& dth) {
    const Eigen::VectorXd losses = line_losses(model, dth);
    const Eigen::VectorXd flows = line_flows(model, dth);
    Eigen::VectorXd t = model.incidence.a.transpose() * flows;
    if (model.ldf_eta) {
        t += *model.ldf_eta * losses.sum();
    } else {
        t += 0.5 * (model.incidence.a_abs.transpose() * losses);
    }
    return t;
}

Eigen::SparseMatrix<double> injections_jacobian(const InjectionModel& model,
                                                const Eigen::VectorXd& dth) {
    check_dims(model, dth);
    const int n = model.num_buses();
    const int m = model.num_lines();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(model.ldf_eta ? static_cast<std::size_t>(m) * (2 + model.ldf_eta->nonZeros())
                                : static_cast<std::size_t>(m) * 2);
    for (int l = 0; l < m; ++l) {
        const auto [from, to] = model.endpoints[l];
        const double dl = model.lines[l].loss_d1(dth[l]);
        const double df = model.lines[l].flow_d1(dth[l]);
        if (model.ldf_eta) {
            trips.emplace_back(from, l, df);
            trips.emplace_back(to, l, -df);
            const auto& eta = *model.ldf_eta;
            for (int i = 0; i < n; ++i) {
                if (eta[i] != 0.0) trips.emplace_back(i, l, eta[i] * dl);
            }
        } else {
            trips.emplace_back(from, l, 0.5 * dl + df);
            trips.emplace_back(to, l, 0.5 * dl - df);
        }
    }
    Eigen::SparseMatrix<double> jac(n, m);
    jac.setFromTriplets(trips.begin(), trips.end());
    jac.makeCompressed();
    return jac;
}

Eigen::VectorXd injections_hessian_diag(const InjectionModel& model, const Eigen::VectorXd& dth,
                                        const Eigen::VectorXd& lambda) {
    check_dims(model, dth);
    if (lambda.size() != model.num_buses()) {
        throw Error(ErrorCode::DimensionMismatch, "lambda must have one entry per bus");
    }
    const double eta_weight = model.ldf_eta ? model.ldf_eta->dot(lambda) : 0.0;
    Eigen::VectorXd out(model.num_lines());
    for (int l = 0; l < model.num_lines(); ++l) {
        const auto [from, to] = model.endpoints[l];
        const double w_loss =
            model.ldf_eta ? eta_weight : 0.5 * (lambda[from] + lambda[to]);
        out[l] = w_loss * model.lines[l].loss_d2(dth[l]) +
                 (lambda[from] - lambda[to]) * model.lines[l].flow_d2(dth[l]);
    }
    return out;
}

}  // namespace edml
