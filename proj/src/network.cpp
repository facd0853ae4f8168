#include "edml/network.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <queue>
#include <unordered_set>

namespace edml {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::ZeroImpedance: return "ZeroImpedance";
        case ErrorCode::Disconnected: return "Disconnected";
        case ErrorCode::UnknownBus: return "UnknownBus";
        case ErrorCode::TierUnsupported: return "TierUnsupported";
        case ErrorCode::LimitOutOfRange: return "LimitOutOfRange";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InvalidNetwork: return "InvalidNetwork";
        case ErrorCode::InfeasibleByConstruction: return "InfeasibleByConstruction";
        case ErrorCode::SyntaxError: return "SyntaxError";
        case ErrorCode::MissingTable: return "MissingTable";
        case ErrorCode::ColumnCountMismatch: return "ColumnCountMismatch";
        case ErrorCode::UnsupportedCost: return "UnsupportedCost";
        case ErrorCode::IsolatedBusAfterFiltering: return "IsolatedBusAfterFiltering";
    }
    return "Unknown";
}

double cost_value(const CostFunction& cost, double p) {
    if (const auto* q = std::get_if<QuadraticCost>(&cost)) {
        return (q->c2 * p + q->c1) * p + q->c0;
    }
    const auto& pwl = std::get<PiecewiseLinearCost>(cost);
    const auto& xs = pwl.breakpoints;
    const auto& ys = pwl.values;
    const std::size_t n = xs.size();
    if (n == 0) return 0.0;
    if (n == 1) return ys[0];
    // Locate the segment; end segments extend beyond the breakpoint range.
    std::size_t k = std::upper_bound(xs.begin(), xs.end(), p) - xs.begin();
    if (k == 0) k = 1;
    if (k == n) k = n - 1;
    const double slope = (ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1]);
    return ys[k - 1] + slope * (p - xs[k - 1]);
}

bool cost_is_convex(const CostFunction& cost) {
    if (const auto* q = std::get_if<QuadraticCost>(&cost)) {
        return q->c2 >= 0.0;
    }
    const auto& pwl = std::get<PiecewiseLinearCost>(cost);
    const auto& xs = pwl.breakpoints;
    const auto& ys = pwl.values;
    if (xs.size() != ys.size() || xs.size() < 2) return xs.size() == ys.size();
    double prev_slope = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < xs.size(); ++k) {
        if (!(xs[k] > xs[k - 1])) return false;
        const double slope = (ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1]);
        // Allow tiny slope decreases from limited input precision.
        if (slope < prev_slope - 1e-9 * std::max(1.0, std::abs(prev_slope))) return false;
        prev_slope = std::max(prev_slope, slope);
    }
    return true;
}

DerivedLineParams derive_line_params(const Line& line) {
    if (line.r == 0.0 && line.x == 0.0) {
        throw Error(ErrorCode::ZeroImpedance,
                    "line " + std::to_string(line.from_bus) + "-" + std::to_string(line.to_bus) +
                        " has r = x = 0");
    }
    const std::complex<double> z(line.r, line.x);
    const std::complex<double> y = 1.0 / z;
    DerivedLineParams p;
    p.g = y.real();
    p.b = y.imag();
    p.y_mag_sq = std::norm(y);
    // alpha*e^{j phi} = z*(y_shunt + y) with y_shunt = j*b_total/2 per side,
    // so z*y = 1 and the product reduces to 1 + j*z*b_s.
    const std::complex<double> a = 1.0 + z * std::complex<double>(0.0, line.shunt_susceptance / 2.0);
    p.alpha = std::abs(a);
    p.phi = std::arg(a);
    return p;
}

int Network::bus_index(int bus_id) const {
    if (index_cache_.size() != buses.size()) {
        index_cache_.clear();
        index_cache_.reserve(buses.size());
        for (std::size_t i = 0; i < buses.size(); ++i) index_cache_.emplace(buses[i].id, static_cast<int>(i));
    }
    auto it = index_cache_.find(bus_id);
    if (it == index_cache_.end()) {
        throw Error(ErrorCode::UnknownBus, "bus id " + std::to_string(bus_id) + " not in network");
    }
    return it->second;
}

Eigen::VectorXd Network::demand_vector() const {
    Eigen::VectorXd d(num_buses());
    for (int i = 0; i < num_buses(); ++i) d[i] = buses[i].demand;
    return d;
}

void validate(const Network& network) {
    if (network.buses.empty()) {
        throw Error(ErrorCode::InvalidNetwork, "network has no buses");
    }
    if (!(network.base_mva > 0.0)) {
        throw Error(ErrorCode::InvalidNetwork, "base_mva must be positive");
    }
    std::unordered_set<int> seen;
    for (const auto& bus : network.buses) {
        if (!seen.insert(bus.id).second) {
            throw Error(ErrorCode::InvalidNetwork, "duplicate bus id " + std::to_string(bus.id));
        }
        if (!(bus.voltage_mag > 0.0)) {
            throw Error(ErrorCode::InvalidNetwork,
                        "bus " + std::to_string(bus.id) + " has non-positive voltage magnitude");
        }
        if (!std::isfinite(bus.demand)) {
            throw Error(ErrorCode::InvalidNetwork,
                        "bus " + std::to_string(bus.id) + " has non-finite demand");
        }
    }
    for (const auto& line : network.lines) {
        network.bus_index(line.from_bus);
        network.bus_index(line.to_bus);
        if (line.from_bus == line.to_bus) {
            throw Error(ErrorCode::InvalidNetwork,
                        "line " + std::to_string(line.from_bus) + "-" + std::to_string(line.to_bus) +
                            " is a self-loop");
        }
        if (!(std::isfinite(line.r) && std::isfinite(line.x) &&
              std::isfinite(line.shunt_susceptance) && std::isfinite(line.tap_ratio) &&
              std::isfinite(line.phase_shift) &&
              (!line.rating_mva || std::isfinite(*line.rating_mva)))) {
            throw Error(ErrorCode::InvalidNetwork,
                        "line " + std::to_string(line.from_bus) + "-" + std::to_string(line.to_bus) +
                            " has a non-finite parameter");
        }
        if (!(line.tap_ratio > 0.0)) {
            throw Error(ErrorCode::InvalidNetwork, "tap ratio must be positive");
        }
        if (line.r < 0.0) {
            throw Error(ErrorCode::InvalidNetwork, "negative line resistance");
        }
        if (line.rating_mva && !(*line.rating_mva > 0.0)) {
            throw Error(ErrorCode::InvalidNetwork, "line rating must be positive when present");
        }
        derive_line_params(line);  // rejects r = x = 0
    }
    for (const auto& gen : network.generators) {
        network.bus_index(gen.bus);
        if (!(std::isfinite(gen.p_min) && std::isfinite(gen.p_max))) {
            throw Error(ErrorCode::InvalidNetwork,
                        "generator at bus " + std::to_string(gen.bus) + " has non-finite limits");
        }
        if (!(gen.p_min <= gen.p_max)) {
            throw Error(ErrorCode::InvalidNetwork,
                        "generator at bus " + std::to_string(gen.bus) + " has p_min > p_max");
        }
        if (!cost_is_convex(gen.cost)) {
            throw Error(ErrorCode::UnsupportedCost,
                        "generator at bus " + std::to_string(gen.bus) + " has a non-convex cost");
        }
    }
    if (network.slack_bus) network.bus_index(*network.slack_bus);
}

bool check_connected(const Network& network) {
    const int n = network.num_buses();
    if (n == 0) return false;
    std::vector<std::vector<int>> adjacency(n);
    for (const auto& line : network.lines) {
        const int i = network.bus_index(line.from_bus);
        const int j = network.bus_index(line.to_bus);
        adjacency[i].push_back(j);
        adjacency[j].push_back(i);
    }
    std::vector<char> visited(n, 0);
    std::queue<int> frontier;
    frontier.push(0);
    visited[0] = 1;
    int count = 1;
    while (!frontier.empty()) {
        const int i = frontier.front();
        frontier.pop();
        for (int j : adjacency[i]) {
            if (!visited[j]) {
                visited[j] = 1;
                ++count;
                frontier.push(j);
            }
        }
    }
    return count == n;
}

IncidenceSet build_incidence(const Network& network, int reference_bus_id) {
    const int n = network.num_buses();
    const int m = network.num_lines();
    const int ref = network.bus_index(reference_bus_id);

    IncidenceSet inc;
    inc.reference_bus = reference_bus_id;
    inc.reference_index = ref;

    std::vector<Eigen::Triplet<double>> ta, tabs, tdot;
    ta.reserve(2 * m);
    tabs.reserve(2 * m);
    tdot.reserve(2 * m);
    for (int l = 0; l < m; ++l) {
        const int i = network.bus_index(network.lines[l].from_bus);
        const int j = network.bus_index(network.lines[l].to_bus);
        ta.emplace_back(l, i, 1.0);
        ta.emplace_back(l, j, -1.0);
        tabs.emplace_back(l, i, 1.0);
        tabs.emplace_back(l, j, 1.0);
        if (i != ref) tdot.emplace_back(l, i < ref ? i : i - 1, 1.0);
        if (j != ref) tdot.emplace_back(l, j < ref ? j : j - 1, -1.0);
    }
    inc.a.resize(m, n);
    inc.a_abs.resize(m, n);
    inc.a_dot.resize(m, n > 0 ? n - 1 : 0);
    inc.a.setFromTriplets(ta.begin(), ta.end());
    inc.a_abs.setFromTriplets(tabs.begin(), tabs.end());
    inc.a_dot.setFromTriplets(tdot.begin(), tdot.end());
    inc.a.makeCompressed();
    inc.a_abs.makeCompressed();
    inc.a_dot.makeCompressed();
    return inc;
}

}  // namespace edml
