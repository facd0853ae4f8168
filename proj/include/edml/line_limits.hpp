#pragma once

#include <optional>

#include "edml/line_functions.hpp"

namespace edml {

/// Closed angle-difference interval [lower, upper].
struct AngleWindow {
    double lower = 0.0;
    double upper = 0.0;
    bool contains(double dth) const { return dth >= lower && dth <= upper; }
    bool empty() const { return lower > upper; }
};

AngleWindow intersect(const AngleWindow& a, const AngleWindow& b);

/// Which requirement produced a window edge, recorded per bound so reports
/// can name the binding cause.
enum class WindowSource {
    FeasibilityDomain,  ///< monotonicity/convexity domain of the line functions
    FlowLimit,
    CurrentLimit,
};

struct BoundedWindow {
    AngleWindow window;
    WindowSource lower_source = WindowSource::FeasibilityDomain;
    WindowSource upper_source = WindowSource::FeasibilityDomain;
};

/// Intersection of the loss/flow domain with the from-side current domain:
/// the largest angle interval on which all line functions are simultaneously
/// monotone where needed and convex.
AngleWindow feasibility_window(const LineFunctionSet& fs);

/// Window on which |midline flow| <= flow_limit, obtained by inverting the
/// tier's flow on its monotone domain. Throws LimitOutOfRange when either
/// +-flow_limit falls outside the flow's image over that domain.
AngleWindow window_from_flow_limit(const LineFunctionSet& fs, double flow_limit);

/// Window on which both side currents satisfy I^2 <= current_sq_limit; the
/// per-side windows are intersected. Throws LimitOutOfRange when the limit is
/// outside a side's image over its convexity domain.
AngleWindow window_from_current_limit(const LineFunctionSet& fs, double current_sq_limit);

/// Single-side variant of the above.
AngleWindow window_from_current_limit(const LineFunctionSet& fs, double current_sq_limit,
                                      CurrentSide side);

/// Converts an MVA rating into a squared-current limit in p.u. at a terminal
/// held at voltage v_side: (rating/base)^2 / v_side^2.
double mva_rating_to_current_limit(double rating_mva, double base_mva, double v_side);

/// The window actually imposed on a dispatch variable: feasibility window
/// intersected with per-side current windows when a rating is present.
/// Limits wide enough to never bind inside the feasibility window are
/// dropped rather than treated as errors; sources record what remains.
BoundedWindow dispatch_window(const LineFunctionSet& fs, std::optional<double> rating_mva,
                              double base_mva);

}  // namespace edml
