#pragma once

#include <optional>
#include <unordered_map>
#include <variant>
#include <vector>

#include <Eigen/Sparse>

#include "edml/errors.hpp"

namespace edml {

/// Network quantities are stored in per-unit on the system base. Angles are in
/// radians. Bus ids are external labels (arbitrary positive integers); dense
/// indices are assigned by Network in bus-vector order.

struct Bus {
    int id = 0;
    double voltage_mag = 1.0;  ///< fixed magnitude |V| used by the line model
    double demand = 0.0;       ///< active-power demand, p.u.
};

/// cost(p) = c2*p^2 + c1*p + c0 with p in p.u.; convex iff c2 >= 0.
struct QuadraticCost {
    double c2 = 0.0;
    double c1 = 0.0;
    double c0 = 0.0;
};

/// Piecewise-linear cost given as (breakpoint, value) pairs with strictly
/// increasing breakpoints; convex iff segment slopes are non-decreasing.
/// Evaluation extrapolates the end segments beyond the breakpoint range.
struct PiecewiseLinearCost {
    std::vector<double> breakpoints;  ///< p.u.
    std::vector<double> values;       ///< $/h
};

using CostFunction = std::variant<QuadraticCost, PiecewiseLinearCost>;

double cost_value(const CostFunction& cost, double p);
bool cost_is_convex(const CostFunction& cost);

struct Generator {
    int bus = 0;
    double p_min = 0.0;  ///< p.u.
    double p_max = 0.0;  ///< p.u.
    CostFunction cost;
};

/// Branch in the two-port model: series impedance r + jx behind an ideal
/// transformer tap_ratio * e^{j phase_shift} at the from side, plus equal
/// charging shunts j*shunt_susceptance/2 on each side of the series element.
struct Line {
    int from_bus = 0;
    int to_bus = 0;
    double r = 0.0;
    double x = 0.0;
    double shunt_susceptance = 0.0;        ///< total line charging, p.u.
    double tap_ratio = 1.0;                ///< tau > 0
    double phase_shift = 0.0;              ///< psi, radians
    std::optional<double> rating_mva;      ///< apparent-power rating; empty = unlimited
};

/// Quantities derived from a Line's impedance data.
///   g + jb           = 1 / (r + jx), series admittance
///   y_mag_sq         = g^2 + b^2
///   alpha * e^{j phi}= (r + jx) * (j*shunt_susceptance/2 + (g + jb))
struct DerivedLineParams {
    double g = 0.0;
    double b = 0.0;
    double y_mag_sq = 0.0;
    double alpha = 1.0;
    double phi = 0.0;
};

DerivedLineParams derive_line_params(const Line& line);

struct Network {
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    double base_mva = 100.0;
    std::optional<int> slack_bus;  ///< case-designated reference, if any

    /// Dense index of an external bus id; throws UnknownBus.
    int bus_index(int bus_id) const;
    int num_buses() const { return static_cast<int>(buses.size()); }
    int num_lines() const { return static_cast<int>(lines.size()); }

    Eigen::VectorXd demand_vector() const;

private:
    mutable std::unordered_map<int, int> index_cache_;
};

/// Checks structural invariants: unique bus ids, positive voltages, endpoints
/// and generator buses resolve, nonzero impedance, tap_ratio > 0, p_min <=
/// p_max, convex costs. Throws Error on the first violation.
void validate(const Network& network);

/// True when every bus is reachable from the first bus over in-service lines.
bool check_connected(const Network& network);

/// Oriented incidence matrices with one bus (the reference) removed.
///   a       : m x n, row l has +1 at from(l), -1 at to(l)
///   a_abs   : |a| elementwise
///   a_dot   : a with the reference column deleted (m x (n-1))
struct IncidenceSet {
    Eigen::SparseMatrix<double> a;
    Eigen::SparseMatrix<double> a_abs;
    Eigen::SparseMatrix<double> a_dot;
    int reference_bus = 0;    ///< external id
    int reference_index = 0;  ///< dense column removed from a to form a_dot
};

IncidenceSet build_incidence(const Network& network, int reference_bus_id);

}  // namespace edml
