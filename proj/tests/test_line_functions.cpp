#include <doctest.h>

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

#include "edml/errors.hpp"
#include "edml/line_functions.hpp"
#include "test_support.hpp"

using namespace edml;
using edml::testing::reference_line;
using edml::testing::triangle_network;

namespace {

constexpr std::array<ApproxTier, 4> kAllTiers = {ApproxTier::Exact, ApproxTier::Taylor,
                                                 ApproxTier::Nominal, ApproxTier::DC};

LineFunctionSet make_set(const Line& line, double vi, double vj, ApproxTier tier) {
    return LineFunctionSet(line, derive_line_params(line), vi, vj, tier);
}

/// Reference line, flat voltage, at the given tier.
LineFunctionSet flat_reference(ApproxTier tier) {
    return make_set(reference_line(), 1.0, 1.0, tier);
}

struct RandomLine {
    Line line;
    double vi;
    double vj;
};

RandomLine random_line(std::mt19937& rng) {
    std::uniform_real_distribution<double> r_dist(0.001, 0.05);
    std::uniform_real_distribution<double> x_dist(0.02, 0.3);
    std::uniform_real_distribution<double> sh_dist(0.0, 0.1);
    std::uniform_real_distribution<double> tap_dist(0.9, 1.1);
    std::uniform_real_distribution<double> shift_dist(-0.2, 0.2);
    std::uniform_real_distribution<double> v_dist(0.94, 1.06);
    RandomLine rl;
    rl.line.from_bus = 1;
    rl.line.to_bus = 2;
    rl.line.r = r_dist(rng);
    rl.line.x = x_dist(rng);
    rl.line.shunt_susceptance = sh_dist(rng);
    rl.line.tap_ratio = tap_dist(rng);
    rl.line.phase_shift = shift_dist(rng);
    rl.vi = v_dist(rng);
    rl.vj = v_dist(rng);
    return rl;
}

double central_diff(const std::function<double(double)>& f, double x, double h = 1e-6) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace

TEST_SUITE("line_functions") {

TEST_CASE("tier names") {
    CHECK(std::string(tier_name(ApproxTier::Exact)) == "exact");
    CHECK(std::string(tier_name(ApproxTier::Taylor)) == "taylor");
    CHECK(std::string(tier_name(ApproxTier::Nominal)) == "nominal");
    CHECK(std::string(tier_name(ApproxTier::DC)) == "dc");
}

TEST_CASE("exact tier reproduces the hand-computed reference values") {
    const LineFunctionSet fs = flat_reference(ApproxTier::Exact);
    const double dth = 0.1;

    CHECK(fs.series_flow(dth, 0.5) == doctest::Approx(0.98844966977057577).epsilon(1e-15));
    CHECK(fs.series_flow(dth, 1.0) == doctest::Approx(0.99339604078243144).epsilon(1e-15));
    CHECK(fs.loss(dth) == doctest::Approx(0.0098927420237113543).epsilon(1e-14));
    CHECK(fs.loss_d1(dth) == doctest::Approx(0.19768993395411515).epsilon(1e-14));
    CHECK(fs.midline_flow(dth) == doctest::Approx(0.98844966977057577).epsilon(1e-15));
    CHECK(fs.current_sq(dth, CurrentSide::IntoFromI) ==
          doctest::Approx(0.98927420237113543).epsilon(1e-14));

    // Without charging and with flat voltage both current measurements agree,
    // and the loss equals r times the squared current.
    CHECK(fs.current_sq(dth, CurrentSide::IntoFromJ) ==
          doctest::Approx(fs.current_sq(dth, CurrentSide::IntoFromI)).epsilon(1e-15));
    CHECK(fs.loss(dth) ==
          doctest::Approx(0.01 * fs.current_sq(dth, CurrentSide::IntoFromI)).epsilon(1e-14));
}

TEST_CASE("midline flow is the series flow at the half point") {
    const LineFunctionSet fs = flat_reference(ApproxTier::Exact);
    for (double dth : {-0.5, -0.1, 0.0, 0.05, 0.3, 1.0}) {
        CHECK(fs.series_flow(dth, 0.5) == doctest::Approx(fs.midline_flow(dth)).epsilon(1e-15));
    }
}

TEST_CASE("quadratic tiers at the reference point") {
    CHECK(flat_reference(ApproxTier::Nominal).loss(0.1) ==
          doctest::Approx(0.009900990099009901).epsilon(1e-15));
    CHECK(flat_reference(ApproxTier::DC).loss(0.1) == doctest::Approx(0.01).epsilon(1e-15));
    // DC flow is the classical dth/x.
    CHECK(flat_reference(ApproxTier::DC).midline_flow(0.1) ==
          doctest::Approx(1.0).epsilon(1e-15));
    CHECK(flat_reference(ApproxTier::DC).flow_d1(0.37) == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("taylor equals nominal exactly when the profile is already flat") {
    const LineFunctionSet taylor = flat_reference(ApproxTier::Taylor);
    const LineFunctionSet nominal = flat_reference(ApproxTier::Nominal);
    for (double dth : {-0.3, 0.0, 0.1, 0.25}) {
        CHECK(taylor.loss(dth) == nominal.loss(dth));
        CHECK(taylor.midline_flow(dth) == nominal.midline_flow(dth));
        CHECK(taylor.current_sq(dth, CurrentSide::IntoFromI) ==
              nominal.current_sq(dth, CurrentSide::IntoFromI));
    }
}

TEST_CASE("taylor keeps actual voltages and transformer data, nominal flattens them") {
    Line line = reference_line();
    line.tap_ratio = 0.95;
    line.phase_shift = 0.1;
    line.shunt_susceptance = 0.04;

    const LineFunctionSet taylor = make_set(line, 1.05, 0.97, ApproxTier::Taylor);
    CHECK(taylor.tau() == 0.95);
    CHECK(taylor.psi() == 0.1);
    CHECK(taylor.v_from() == 1.05);
    CHECK(taylor.phi() != 0.0);

    const LineFunctionSet nominal = make_set(line, 1.05, 0.97, ApproxTier::Nominal);
    CHECK(nominal.tau() == 1.0);
    CHECK(nominal.psi() == 0.0);
    CHECK(nominal.alpha() == 1.0);
    CHECK(nominal.phi() == 0.0);
    CHECK(nominal.v_from() == 1.0);
    // Nominal keeps the real series admittance.
    CHECK(nominal.g() == doctest::Approx(0.9900990099009901).epsilon(1e-15));

    CHECK(taylor.loss(0.1 + 0.1) != nominal.loss(0.2));
}

TEST_CASE("dc tier substitutes the reactance-only admittance") {
    const LineFunctionSet dc = flat_reference(ApproxTier::DC);
    CHECK(dc.g() == doctest::Approx(1.0).epsilon(1e-15));        // r/x^2
    CHECK(dc.b() == doctest::Approx(-10.0).epsilon(1e-15));      // -1/x
    CHECK(dc.y_mag_sq() == doctest::Approx(100.0).epsilon(1e-15));  // 1/x^2
}

TEST_CASE("dc tier refuses a zero-reactance line") {
    Line line = reference_line();
    line.x = 0.0;
    try {
        (void)make_set(line, 1.0, 1.0, ApproxTier::DC);
        FAIL_CHECK("expected TierUnsupported");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TierUnsupported);
    }
    // The exact tier handles the same line fine.
    const LineFunctionSet exact = make_set(line, 1.0, 1.0, ApproxTier::Exact);
    CHECK(exact.loss(0.1) > 0.0);
}

TEST_CASE("series flow is exact-only and range-checked") {
    for (ApproxTier tier : {ApproxTier::Taylor, ApproxTier::Nominal, ApproxTier::DC}) {
        const LineFunctionSet fs = flat_reference(tier);
        try {
            (void)fs.series_flow(0.1, 0.5);
            FAIL_CHECK("expected TierUnsupported for ", tier_name(tier));
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::TierUnsupported);
        }
    }
    const LineFunctionSet exact = flat_reference(ApproxTier::Exact);
    CHECK_THROWS_AS((void)exact.series_flow(0.1, -0.01), std::invalid_argument);
    CHECK_THROWS_AS((void)exact.series_flow(0.1, 1.01), std::invalid_argument);
}

TEST_CASE("distributed-loss identities hold along the whole element") {
    std::mt19937 rng(20240601);
    std::uniform_real_distribution<double> dth_dist(-0.6, 0.6);
    std::uniform_real_distribution<double> d_dist(0.0, 1.0);

    for (int trial = 0; trial < 200; ++trial) {
        const RandomLine rl = random_line(rng);
        const LineFunctionSet fs =
            make_set(rl.line, rl.vi, rl.vj, ApproxTier::Exact);
        const double dth = dth_dist(rng);
        const double d = d_dist(rng);
        const double loss = fs.loss(dth);
        const double at_d = fs.series_flow(dth, d);

        // Power fed in at the from terminal = power at d plus the loss of the
        // section between them; power delivered at to = power at d minus the
        // remaining section's loss.
        CHECK(fs.series_flow(dth, 1.0) ==
              doctest::Approx(at_d + (1.0 - d) * loss).epsilon(1e-11));
        CHECK(-fs.series_flow(dth, 0.0) ==
              doctest::Approx(-at_d + d * loss).epsilon(1e-11));
        // End-to-end drop is the loss itself.
        CHECK(fs.series_flow(dth, 1.0) - fs.series_flow(dth, 0.0) ==
              doctest::Approx(loss).epsilon(1e-11));
    }
}

TEST_CASE("loss and current are symmetric about their centers, flow is antisymmetric") {
    std::mt19937 rng(20240602);
    std::uniform_real_distribution<double> w_dist(0.0, 1.2);

    for (ApproxTier tier : kAllTiers) {
        for (int trial = 0; trial < 50; ++trial) {
            const RandomLine rl = random_line(rng);
            const LineFunctionSet fs = make_set(rl.line, rl.vi, rl.vj, tier);
            const double w = w_dist(rng);

            const double lc = fs.loss_center();
            CHECK(fs.loss(lc + w) == doctest::Approx(fs.loss(lc - w)).epsilon(1e-12));
            CHECK(fs.midline_flow(lc + w) + fs.midline_flow(lc - w) ==
                  doctest::Approx(2.0 * fs.midline_flow(lc)).epsilon(1e-12));

            for (CurrentSide side : {CurrentSide::IntoFromI, CurrentSide::IntoFromJ}) {
                const double cc = fs.current_center(side);
                CHECK(fs.current_sq(cc + w, side) ==
                      doctest::Approx(fs.current_sq(cc - w, side)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("current centers sit at psi -/+ phi") {
    Line line = reference_line();
    line.shunt_susceptance = 0.04;
    line.phase_shift = 0.05;
    for (ApproxTier tier : {ApproxTier::Exact, ApproxTier::Taylor}) {
        const LineFunctionSet fs = make_set(line, 1.0, 1.0, tier);
        CHECK(fs.current_center(CurrentSide::IntoFromI) ==
              doctest::Approx(0.05 - 0.0002004007989204756).epsilon(1e-12));
        CHECK(fs.current_center(CurrentSide::IntoFromJ) ==
              doctest::Approx(0.05 + 0.0002004007989204756).epsilon(1e-12));
    }
    for (ApproxTier tier : {ApproxTier::Nominal, ApproxTier::DC}) {
        const LineFunctionSet fs = make_set(line, 1.0, 1.0, tier);
        CHECK(fs.current_center(CurrentSide::IntoFromI) == 0.0);
        CHECK(fs.current_center(CurrentSide::IntoFromJ) == 0.0);
    }
}

TEST_CASE("analytic derivatives agree with central differences") {
    std::mt19937 rng(20240603);
    std::uniform_real_distribution<double> dth_dist(-0.7, 0.7);

    for (ApproxTier tier : kAllTiers) {
        for (int trial = 0; trial < 40; ++trial) {
            const RandomLine rl = random_line(rng);
            const LineFunctionSet fs = make_set(rl.line, rl.vi, rl.vj, tier);
            const double dth = dth_dist(rng);

            CHECK(fs.loss_d1(dth) ==
                  doctest::Approx(central_diff([&](double t) { return fs.loss(t); }, dth))
                      .epsilon(1e-6));
            CHECK(fs.loss_d2(dth) ==
                  doctest::Approx(central_diff([&](double t) { return fs.loss_d1(t); }, dth))
                      .epsilon(1e-6));
            CHECK(fs.flow_d1(dth) ==
                  doctest::Approx(central_diff([&](double t) { return fs.midline_flow(t); }, dth))
                      .epsilon(1e-6));
            CHECK(fs.flow_d2(dth) ==
                  doctest::Approx(central_diff([&](double t) { return fs.flow_d1(t); }, dth))
                      .scale(1.0)
                      .epsilon(1e-6));
            for (CurrentSide side : {CurrentSide::IntoFromI, CurrentSide::IntoFromJ}) {
                CHECK(fs.current_sq_d1(dth, side) ==
                      doctest::Approx(
                          central_diff([&](double t) { return fs.current_sq(t, side); }, dth))
                          .epsilon(1e-6));
                CHECK(fs.current_sq_d2(dth, side) ==
                      doctest::Approx(
                          central_diff([&](double t) { return fs.current_sq_d1(t, side); }, dth))
                          .epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("quadratic-family flow has zero curvature") {
    for (ApproxTier tier : {ApproxTier::Taylor, ApproxTier::Nominal, ApproxTier::DC}) {
        const LineFunctionSet fs = flat_reference(tier);
        CHECK(fs.flow_d2(0.3) == 0.0);
        CHECK(fs.flow_d2(-0.8) == 0.0);
    }
}

TEST_CASE("taylor truncation error scales quartically in loss and cubically in flow") {
    const LineFunctionSet exact = flat_reference(ApproxTier::Exact);
    const LineFunctionSet taylor = flat_reference(ApproxTier::Taylor);

    const double loss_err_1 = std::abs(taylor.loss(0.1) - exact.loss(0.1));
    const double loss_err_2 = std::abs(taylor.loss(0.2) - exact.loss(0.2));
    const double loss_ratio = loss_err_2 / loss_err_1;
    CHECK(loss_ratio == doctest::Approx(15.984008949651289).epsilon(1e-9));
    CHECK(loss_ratio >= 12.0);
    CHECK(loss_ratio <= 20.0);

    const double flow_err_1 = std::abs(taylor.midline_flow(0.1) - exact.midline_flow(0.1));
    const double flow_err_2 = std::abs(taylor.midline_flow(0.2) - exact.midline_flow(0.2));
    const double flow_ratio = flow_err_2 / flow_err_1;
    CHECK(flow_ratio == doctest::Approx(7.9880082829528815).epsilon(1e-9));
    CHECK(flow_ratio >= 6.0);
    CHECK(flow_ratio <= 10.0);
}

TEST_CASE("monotonicity on the declared domains") {
    std::mt19937 rng(20240604);
    for (ApproxTier tier : kAllTiers) {
        for (int trial = 0; trial < 30; ++trial) {
            const RandomLine rl = random_line(rng);
            const LineFunctionSet fs = make_set(rl.line, rl.vi, rl.vj, tier);
            const AngleDomain dom = fs.domain();

            CHECK(dom.loss_domain.width() == doctest::Approx(3.141592653589793).epsilon(1e-15));
            CHECK(dom.loss_domain_pos.lo == fs.loss_center());
            CHECK(dom.current_domain.contains(fs.current_center(CurrentSide::IntoFromI)));

            // Loss increases on the right half-domain, flow increases on the
            // full domain (b < 0), current increases on its right half.
            std::uniform_real_distribution<double> pos(dom.loss_domain_pos.lo + 1e-6,
                                                       dom.loss_domain_pos.hi - 1e-6);
            const double t = pos(rng);
            CHECK(fs.loss_d1(t) > 0.0);
            std::uniform_real_distribution<double> full(dom.loss_domain.lo + 1e-6,
                                                        dom.loss_domain.hi - 1e-6);
            CHECK(fs.flow_d1(full(rng)) > 0.0);
            std::uniform_real_distribution<double> cpos(dom.current_domain_pos.lo + 1e-6,
                                                        dom.current_domain_pos.hi - 1e-6);
            CHECK(fs.current_sq_d1(cpos(rng), CurrentSide::IntoFromI) > 0.0);
        }
    }
}

TEST_CASE("loss is nonnegative everywhere, zero at the center of a balanced line") {
    std::mt19937 rng(20240605);
    std::uniform_real_distribution<double> dth_dist(-1.0, 1.0);
    for (ApproxTier tier : kAllTiers) {
        for (int trial = 0; trial < 50; ++trial) {
            const RandomLine rl = random_line(rng);
            // The center value is g*(vj - vi/tau)^2 >= 0, and the loss only
            // grows away from the center, so it is nonnegative everywhere.
            const LineFunctionSet fs = make_set(rl.line, rl.vi, rl.vj, tier);
            CHECK(fs.loss(dth_dist(rng)) >= -1e-15);
        }
        // Balanced endpoints and a nominal transformer: the minimum is zero.
        const LineFunctionSet flat = flat_reference(tier);
        CHECK(flat.loss(flat.loss_center()) == 0.0);
    }
}

TEST_CASE("make_line_functions follows line order and endpoint voltages") {
    const Network net = triangle_network();
    const auto sets = make_line_functions(net, ApproxTier::Exact);
    REQUIRE(sets.size() == 3);
    CHECK(sets[0].v_from() == 1.02);
    CHECK(sets[0].v_to() == 1.0);
    CHECK(sets[2].v_from() == 1.02);
    CHECK(sets[2].v_to() == 0.98);
    CHECK(sets[2].tau() == 0.98);
    CHECK(sets[2].psi() == 0.02);
}

}  // TEST_SUITE
