#include "edml/line_limits.hpp"

#include <algorithm>
#include <cmath>

namespace edml {

namespace {

constexpr double kHalfPi = 1.5707963267948966;
// Slack for limits that sit numerically on the edge of the attainable image.
constexpr double kEdgeTol = 1e-12;

enum class InverseStatus {
    Ok,
    AboveImage,  // limit exceeds the function's range on the domain: never binds
    BelowMin,    // limit is below the function's minimum: unsatisfiable
};

struct HalfWidth {
    InverseStatus status = InverseStatus::Ok;
    double w = 0.0;  // window half-width about the symmetry center
};

/// Inverts I(dth) = c0 - c1*k(dth - center) for the half-width w >= 0 with
/// I(center +- w) = limit, where k is cos (trig) or its quadratic expansion.
HalfWidth invert_symmetric(double c0, double c1, bool trig, double limit) {
    if (c1 <= 0.0) {
        // Degenerate constant function.
        if (limit >= c0 - kEdgeTol) return {InverseStatus::AboveImage, kHalfPi};
        return {InverseStatus::BelowMin, 0.0};
    }
    if (limit < c0 - c1 - kEdgeTol * std::max(1.0, c0)) {
        return {InverseStatus::BelowMin, 0.0};
    }
    if (trig) {
        const double arg = (c0 - limit) / c1;  // cos of the half-width
        if (arg < -kEdgeTol) return {InverseStatus::AboveImage, kHalfPi};
        return {InverseStatus::Ok, std::acos(std::clamp(arg, 0.0, 1.0))};
    }
    const double wsq = 2.0 * std::max(0.0, (limit - (c0 - c1)) / c1);
    const double w = std::sqrt(wsq);
    if (w > kHalfPi * (1.0 + kEdgeTol)) return {InverseStatus::AboveImage, kHalfPi};
    return {InverseStatus::Ok, std::min(w, kHalfPi)};
}

HalfWidth current_half_width(const LineFunctionSet& fs, double current_sq_limit,
                             CurrentSide side) {
    const double center = fs.current_center(side);
    // Reconstruct c0 and c1 from two evaluations on the symmetry axis; this
    // keeps the inversion tied to whatever the function set actually computes.
    const double at_center = fs.current_sq(center, side);          // c0 - c1
    const double curvature = fs.current_sq_d2(center, side);       // c1
    return invert_symmetric(at_center + curvature, curvature, fs.tier() == ApproxTier::Exact,
                            current_sq_limit);
}

}  // namespace

AngleWindow intersect(const AngleWindow& a, const AngleWindow& b) {
    return {std::max(a.lower, b.lower), std::min(a.upper, b.upper)};
}

AngleWindow feasibility_window(const LineFunctionSet& fs) {
    const double psi = fs.loss_center();
    const double phi = fs.psi() - fs.current_center(CurrentSide::IntoFromI);  // effective phi
    AngleWindow w{psi - kHalfPi + std::max(0.0, -phi), psi + kHalfPi - std::max(0.0, phi)};
    if (w.empty()) {
        throw Error(ErrorCode::LimitOutOfRange, "loss and current domains do not overlap");
    }
    return w;
}

AngleWindow window_from_flow_limit(const LineFunctionSet& fs, double flow_limit) {
    if (!(flow_limit >= 0.0)) {
        throw Error(ErrorCode::LimitOutOfRange, "flow limit must be non-negative");
    }
    const double psi = fs.loss_center();
    const double k0 = fs.midline_flow(psi);   // flow at the antisymmetry point
    const double slope = fs.flow_d1(psi);     // -c1; nonzero for b != 0
    const bool trig = fs.tier() == ApproxTier::Exact;

    if (slope == 0.0) {
        if (std::abs(k0) <= flow_limit + kEdgeTol) return {psi - kHalfPi, psi + kHalfPi};
        throw Error(ErrorCode::LimitOutOfRange, "constant flow exceeds the limit");
    }

    // Solve F(psi + u) = v on u in [-pi/2, pi/2] for v = +-flow_limit.
    auto invert = [&](double v) {
        const double target = (v - k0) / slope;  // sin(u) (trig) or u (quad)
        if (trig) {
            if (std::abs(target) > 1.0 + kEdgeTol) {
                throw Error(ErrorCode::LimitOutOfRange,
                            "flow limit outside the attainable range on the monotone domain");
            }
            return std::asin(std::clamp(target, -1.0, 1.0));
        }
        if (std::abs(target) > kHalfPi * (1.0 + kEdgeTol)) {
            throw Error(ErrorCode::LimitOutOfRange,
                        "flow limit outside the attainable range on the monotone domain");
        }
        return std::clamp(target, -kHalfPi, kHalfPi);
    };
    const double ua = invert(-flow_limit);
    const double ub = invert(flow_limit);
    return {psi + std::min(ua, ub), psi + std::max(ua, ub)};
}

AngleWindow window_from_current_limit(const LineFunctionSet& fs, double current_sq_limit,
                                      CurrentSide side) {
    const auto hw = current_half_width(fs, current_sq_limit, side);
    if (hw.status != InverseStatus::Ok) {
        throw Error(ErrorCode::LimitOutOfRange,
                    hw.status == InverseStatus::AboveImage
                        ? "current limit exceeds the attainable range on the convex domain"
                        : "current limit is below the line's minimum current");
    }
    const double c = fs.current_center(side);
    return {c - hw.w, c + hw.w};
}

AngleWindow window_from_current_limit(const LineFunctionSet& fs, double current_sq_limit) {
    return intersect(window_from_current_limit(fs, current_sq_limit, CurrentSide::IntoFromI),
                     window_from_current_limit(fs, current_sq_limit, CurrentSide::IntoFromJ));
}

double mva_rating_to_current_limit(double rating_mva, double base_mva, double v_side) {
    if (!(rating_mva > 0.0) || !(base_mva > 0.0) || !(v_side > 0.0)) {
        throw Error(ErrorCode::LimitOutOfRange,
                    "rating, base and voltage must be positive to derive a current limit");
    }
    const double s = rating_mva / base_mva;
    return s * s / (v_side * v_side);
}

BoundedWindow dispatch_window(const LineFunctionSet& fs, std::optional<double> rating_mva,
                              double base_mva) {
    BoundedWindow out;
    out.window = feasibility_window(fs);
    if (!rating_mva) return out;

    for (const CurrentSide side : {CurrentSide::IntoFromI, CurrentSide::IntoFromJ}) {
        const double v = side == CurrentSide::IntoFromI ? fs.v_from() : fs.v_to();
        const double limit = mva_rating_to_current_limit(*rating_mva, base_mva, v);
        const auto hw = current_half_width(fs, limit, side);
        if (hw.status == InverseStatus::AboveImage) continue;  // rating can never bind
        if (hw.status == InverseStatus::BelowMin) {
            throw Error(ErrorCode::InfeasibleByConstruction,
                        "rating below the line's minimum current");
        }
        const double c = fs.current_center(side);
        if (c - hw.w > out.window.lower) {
            out.window.lower = c - hw.w;
            out.lower_source = WindowSource::CurrentLimit;
        }
        if (c + hw.w < out.window.upper) {
            out.window.upper = c + hw.w;
            out.upper_source = WindowSource::CurrentLimit;
        }
    }
    if (out.window.empty()) {
        throw Error(ErrorCode::InfeasibleByConstruction,
                    "current windows of the two sides do not overlap");
    }
    return out;
}

}  // namespace edml
