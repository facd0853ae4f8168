#include "edml/line_functions.hpp"

#include <cmath>
#include <stdexcept>

namespace edml {

const char* tier_name(ApproxTier tier) {
    switch (tier) {
        case ApproxTier::Exact: return "exact";
        case ApproxTier::Taylor: return "taylor";
        case ApproxTier::Nominal: return "nominal";
        case ApproxTier::DC: return "dc";
    }
    return "unknown";
}

LineFunctionSet::LineFunctionSet(const Line& line, const DerivedLineParams& derived,
                                 double v_from, double v_to, ApproxTier tier)
    : tier_(tier), trig_(tier == ApproxTier::Exact) {
    switch (tier) {
        case ApproxTier::Exact:
        case ApproxTier::Taylor:
            g_ = derived.g;
            b_ = derived.b;
            y2_ = derived.y_mag_sq;
            tau_ = line.tap_ratio;
            psi_ = line.phase_shift;
            alpha_ = derived.alpha;
            phi_ = derived.phi;
            vi_ = v_from;
            vj_ = v_to;
            break;
        case ApproxTier::Nominal:
            // Flat profile: nominal voltages and transformer, no charging.
            g_ = derived.g;
            b_ = derived.b;
            y2_ = derived.y_mag_sq;
            tau_ = 1.0;
            psi_ = 0.0;
            alpha_ = 1.0;
            phi_ = 0.0;
            vi_ = vj_ = 1.0;
            break;
        case ApproxTier::DC:
            if (line.x == 0.0) {
                throw Error(ErrorCode::TierUnsupported,
                            "dc tier requires nonzero reactance on line " +
                                std::to_string(line.from_bus) + "-" + std::to_string(line.to_bus));
            }
            g_ = line.r / (line.x * line.x);
            b_ = -1.0 / line.x;
            y2_ = 1.0 / (line.x * line.x);
            tau_ = 1.0;
            psi_ = 0.0;
            alpha_ = 1.0;
            phi_ = 0.0;
            vi_ = vj_ = 1.0;
            break;
    }
}

double LineFunctionSet::series_flow(double dth, double d) const {
    if (!trig_) {
        throw Error(ErrorCode::TierUnsupported,
                    "series_flow at arbitrary d is defined for the exact tier only");
    }
    if (!(d >= 0.0 && d <= 1.0)) {
        throw std::invalid_argument("series_flow: d must lie in [0, 1]");
    }
    const double u = dth - psi_;
    return g_ * (d * vi_ * vi_ / (tau_ * tau_) - (1.0 - d) * vj_ * vj_) -
           (b_ / tau_) * vi_ * vj_ * std::sin(u) -
           (g_ / tau_) * vi_ * vj_ * (2.0 * d - 1.0) * std::cos(u);
}

double LineFunctionSet::loss(double dth) const {
    const double u = dth - psi_;
    const double c0 = g_ * (vj_ * vj_ + vi_ * vi_ / (tau_ * tau_));
    const double c1 = 2.0 * (g_ / tau_) * vi_ * vj_;
    return trig_ ? c0 - c1 * std::cos(u) : c0 - c1 * (1.0 - 0.5 * u * u);
}

double LineFunctionSet::loss_d1(double dth) const {
    const double u = dth - psi_;
    const double c1 = 2.0 * (g_ / tau_) * vi_ * vj_;
    return c1 * (trig_ ? std::sin(u) : u);
}

double LineFunctionSet::loss_d2(double dth) const {
    const double u = dth - psi_;
    const double c1 = 2.0 * (g_ / tau_) * vi_ * vj_;
    return trig_ ? c1 * std::cos(u) : c1;
}

double LineFunctionSet::midline_flow(double dth) const {
    const double u = dth - psi_;
    const double k0 = 0.5 * g_ * (vi_ * vi_ / (tau_ * tau_) - vj_ * vj_);
    const double c1 = (b_ / tau_) * vi_ * vj_;
    return k0 - c1 * (trig_ ? std::sin(u) : u);
}

double LineFunctionSet::flow_d1(double dth) const {
    const double u = dth - psi_;
    const double c1 = (b_ / tau_) * vi_ * vj_;
    return -c1 * (trig_ ? std::cos(u) : 1.0);
}

double LineFunctionSet::flow_d2(double dth) const {
    if (!trig_) return 0.0;
    const double u = dth - psi_;
    return (b_ / tau_) * vi_ * vj_ * std::sin(u);
}

double LineFunctionSet::current_center(CurrentSide side) const {
    return side == CurrentSide::IntoFromI ? psi_ - phi_ : psi_ + phi_;
}

namespace {
struct CurrentCoeffs {
    double c0;  // constant part
    double c1;  // cosine coefficient
};
}  // namespace

// Shared shape: I(dth) = c0 - c1*cos(w) with w = dth - center(side); the
// quadratic family substitutes cos(w) -> 1 - w^2/2.
static CurrentCoeffs current_coeffs(double y2, double tau, double alpha, double vi, double vj,
                                    CurrentSide side) {
    if (side == CurrentSide::IntoFromI) {
        const double scale = y2 / (tau * tau);
        return {scale * (alpha * alpha * vi * vi / (tau * tau) + vj * vj),
                scale * (2.0 * alpha / tau) * vi * vj};
    }
    return {y2 * (vi * vi / (tau * tau) + alpha * alpha * vj * vj),
            y2 * (2.0 * alpha / tau) * vi * vj};
}

double LineFunctionSet::current_sq(double dth, CurrentSide side) const {
    const auto [c0, c1] = current_coeffs(y2_, tau_, alpha_, vi_, vj_, side);
    const double w = dth - current_center(side);
    return trig_ ? c0 - c1 * std::cos(w) : c0 - c1 * (1.0 - 0.5 * w * w);
}

double LineFunctionSet::current_sq_d1(double dth, CurrentSide side) const {
    const auto [c0, c1] = current_coeffs(y2_, tau_, alpha_, vi_, vj_, side);
    (void)c0;
    const double w = dth - current_center(side);
    return c1 * (trig_ ? std::sin(w) : w);
}

double LineFunctionSet::current_sq_d2(double dth, CurrentSide side) const {
    const auto [c0, c1] = current_coeffs(y2_, tau_, alpha_, vi_, vj_, side);
    (void)c0;
    const double w = dth - current_center(side);
    return trig_ ? c1 * std::cos(w) : c1;
}

AngleDomain LineFunctionSet::domain() const {
    constexpr double kHalfPi = 1.5707963267948966;
    const double lc = loss_center();
    const double cc = current_center(CurrentSide::IntoFromI);
    AngleDomain d;
    d.loss_domain = {lc - kHalfPi, lc + kHalfPi};
    d.loss_domain_pos = {lc, lc + kHalfPi};
    d.current_domain = {cc - kHalfPi, cc + kHalfPi};
    d.current_domain_pos = {cc, cc + kHalfPi};
    return d;
}

std::vector<LineFunctionSet> make_line_functions(const Network& network, ApproxTier tier) {
    std::vector<LineFunctionSet> out;
    out.reserve(network.lines.size());
    for (const auto& line : network.lines) {
        const auto derived = derive_line_params(line);
        const double vi = network.buses[network.bus_index(line.from_bus)].voltage_mag;
        const double vj = network.buses[network.bus_index(line.to_bus)].voltage_mag;
        out.emplace_back(line, derived, vi, vj, tier);
    }
    return out;
}

}  // namespace edml
