#pragma once

#include <vector>

#include "edml/network.hpp"

namespace edml {

/// Approximation tiers for the line power-flow functions, from the exact
/// trigonometric model down to the classical DC simplification. Each tier
/// keeps the same interface; only the evaluated formulas change.
enum class ApproxTier {
    Exact,    ///< full trigonometric model with taps, shifts, |V|
    Taylor,   ///< second-order Taylor expansion of the trigonometric terms
    Nominal,  ///< Taylor with flat voltage profile and nominal transformers
    DC,       ///< lossless susceptance from 1/x, loss recovered as r*(dth/x)^2
};

const char* tier_name(ApproxTier tier);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double v) const { return v >= lo && v <= hi; }
    double width() const { return hi - lo; }
};

/// Angle intervals on which the per-line functions are monotone/convex:
///   loss_domain      : loss is convex, flow monotone (width pi)
///   loss_domain_pos  : loss is increasing (right half)
///   current_domain   : from-side current is convex (width pi)
///   current_domain_pos : from-side current is increasing
/// All four are centered on the tier-effective symmetry axes.
struct AngleDomain {
    Interval loss_domain;
    Interval loss_domain_pos;
    Interval current_domain;
    Interval current_domain_pos;
};

enum class CurrentSide {
    IntoFromI,  ///< squared current entering the line at the from terminal
    IntoFromJ,  ///< squared current entering at the to terminal
};

/// One line's flow/loss/current functions of the angle difference
/// dth = theta_from - theta_to, specialized to an approximation tier.
///
/// The four tiers share two formula families: the trigonometric one (Exact)
/// and the quadratic one (Taylor, Nominal, DC), the latter two differing only
/// in the effective parameters substituted into the quadratic formulas.
class LineFunctionSet {
public:
    LineFunctionSet(const Line& line, const DerivedLineParams& derived, double v_from,
                    double v_to, ApproxTier tier);

    ApproxTier tier() const { return tier_; }

    /// Power flowing from->to through the series element, measured a fraction
    /// d of the element away from the to terminal: d = 1 reads the power fed
    /// in at the from side, d = 0 the power delivered at the to side, and the
    /// difference over the whole element is the series loss. Exact tier only;
    /// other tiers throw TierUnsupported. Requires 0 <= d <= 1.
    double series_flow(double dth, double d) const;

    double loss(double dth) const;
    double loss_d1(double dth) const;
    double loss_d2(double dth) const;

    /// Midline flow, the tier's series flow at d = 1/2.
    double midline_flow(double dth) const;
    double flow_d1(double dth) const;
    double flow_d2(double dth) const;

    double current_sq(double dth, CurrentSide side) const;
    double current_sq_d1(double dth, CurrentSide side) const;
    double current_sq_d2(double dth, CurrentSide side) const;

    /// Symmetry axis of the loss (and antisymmetry axis of the flow about the
    /// midline value): the tier-effective phase shift.
    double loss_center() const { return psi_; }
    /// Symmetry axis of the squared current on the given side.
    double current_center(CurrentSide side) const;

    AngleDomain domain() const;

    // Tier-effective parameters (after any flattening the tier applies).
    double g() const { return g_; }
    double b() const { return b_; }
    double y_mag_sq() const { return y2_; }
    double tau() const { return tau_; }
    double psi() const { return psi_; }
    double alpha() const { return alpha_; }
    double phi() const { return phi_; }
    double v_from() const { return vi_; }
    double v_to() const { return vj_; }

private:
    ApproxTier tier_;
    bool trig_;  // trigonometric family (Exact) vs quadratic family
    double g_, b_, y2_, tau_, psi_, alpha_, phi_, vi_, vj_;
};

/// Builds one LineFunctionSet per network line at the requested tier,
/// in line order. Voltages are taken from the endpoint buses.
std::vector<LineFunctionSet> make_line_functions(const Network& network, ApproxTier tier);

}  // namespace edml
