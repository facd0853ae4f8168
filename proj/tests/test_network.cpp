#include <doctest.h>

#include <cmath>
#include <functional>
#include <stdexcept>

#include "edml/errors.hpp"
#include "edml/network.hpp"
#include "test_support.hpp"

using namespace edml;
using edml::testing::reference_line;
using edml::testing::triangle_network;
using edml::testing::two_bus_network;

namespace {

void check_error(ErrorCode expected, const std::function<void()>& fn) {
    try {
        fn();
        FAIL_CHECK("expected Error with code ", static_cast<int>(expected));
    } catch (const Error& e) {
        CHECK(e.code() == expected);
    }
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("derived series admittance matches hand-computed values") {
    // r=0.01, x=0.1: y = 1/(r+jx), |y|^2 = 1/(r^2+x^2).
    const DerivedLineParams p = derive_line_params(reference_line());
    CHECK(p.g == doctest::Approx(0.9900990099009901).epsilon(1e-15));
    CHECK(p.b == doctest::Approx(-9.900990099009901).epsilon(1e-15));
    CHECK(p.y_mag_sq == doctest::Approx(99.00990099009901).epsilon(1e-15));
    CHECK(p.alpha == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p.phi == doctest::Approx(0.0));
}

TEST_CASE("charging susceptance produces the documented alpha and phi") {
    Line line = reference_line();
    line.shunt_susceptance = 0.04;  // b_s = 0.02 per side
    const DerivedLineParams p = derive_line_params(line);
    CHECK(p.alpha == doctest::Approx(0.99800002004007996).epsilon(1e-15));
    CHECK(p.phi == doctest::Approx(0.0002004007989204756).epsilon(1e-12));
}

TEST_CASE("alpha/phi do not depend on tap or shift") {
    Line line = reference_line();
    line.shunt_susceptance = 0.04;
    const DerivedLineParams base = derive_line_params(line);
    line.tap_ratio = 0.95;
    line.phase_shift = 0.3;
    const DerivedLineParams tapped = derive_line_params(line);
    CHECK(tapped.alpha == base.alpha);
    CHECK(tapped.phi == base.phi);
    CHECK(tapped.g == base.g);
}

TEST_CASE("zero impedance is rejected") {
    Line line = reference_line();
    line.r = 0.0;
    line.x = 0.0;
    check_error(ErrorCode::ZeroImpedance, [&] { derive_line_params(line); });
}

TEST_CASE("purely reactive and purely resistive lines are allowed") {
    Line reactive = reference_line();
    reactive.r = 0.0;
    const DerivedLineParams pr = derive_line_params(reactive);
    CHECK(pr.g == 0.0);
    CHECK(pr.b == doctest::Approx(-10.0).epsilon(1e-15));

    Line resistive = reference_line();
    resistive.x = 0.0;
    const DerivedLineParams px = derive_line_params(resistive);
    CHECK(px.b == 0.0);
    CHECK(px.g == doctest::Approx(100.0).epsilon(1e-15));
}

TEST_CASE("quadratic cost evaluation") {
    const CostFunction cost = QuadraticCost{2.0, 3.0, 5.0};
    CHECK(cost_value(cost, 0.0) == doctest::Approx(5.0));
    CHECK(cost_value(cost, 2.0) == doctest::Approx(2.0 * 4.0 + 3.0 * 2.0 + 5.0));
    CHECK(cost_is_convex(cost));
    CHECK_FALSE(cost_is_convex(CostFunction{QuadraticCost{-1.0, 0.0, 0.0}}));
}

TEST_CASE("piecewise linear cost evaluation, interpolation, and extrapolation") {
    PiecewiseLinearCost pwl;
    pwl.breakpoints = {0.0, 1.0, 2.0};
    pwl.values = {0.0, 10.0, 30.0};  // slopes 10 then 20
    const CostFunction cost = pwl;
    CHECK(cost_value(cost, 0.0) == doctest::Approx(0.0));
    CHECK(cost_value(cost, 0.5) == doctest::Approx(5.0));
    CHECK(cost_value(cost, 1.0) == doctest::Approx(10.0));
    CHECK(cost_value(cost, 1.5) == doctest::Approx(20.0));
    // Beyond the last breakpoint the final segment extends.
    CHECK(cost_value(cost, 3.0) == doctest::Approx(50.0));
    // Below the first breakpoint the first segment extends.
    CHECK(cost_value(cost, -1.0) == doctest::Approx(-10.0));
    CHECK(cost_is_convex(cost));

    PiecewiseLinearCost concave;
    concave.breakpoints = {0.0, 1.0, 2.0};
    concave.values = {0.0, 20.0, 30.0};  // slopes 20 then 10
    CHECK_FALSE(cost_is_convex(CostFunction{concave}));
}

TEST_CASE("validate accepts the reference networks") {
    CHECK_NOTHROW(validate(two_bus_network()));
    CHECK_NOTHROW(validate(triangle_network()));
}

TEST_CASE("validate rejects structural defects") {
    SUBCASE("duplicate bus ids") {
        Network net = two_bus_network();
        net.buses.push_back({1, 1.0, 0.0});
        check_error(ErrorCode::InvalidNetwork, [&] { validate(net); });
    }
    SUBCASE("self loop") {
        Network net = two_bus_network();
        net.lines[0].to_bus = 1;
        check_error(ErrorCode::InvalidNetwork, [&] { validate(net); });
    }
    SUBCASE("line endpoint not a bus") {
        Network net = two_bus_network();
        net.lines[0].to_bus = 99;
        check_error(ErrorCode::UnknownBus, [&] { validate(net); });
    }
    SUBCASE("generator bus not a bus") {
        Network net = two_bus_network();
        net.generators[0].bus = 99;
        check_error(ErrorCode::UnknownBus, [&] { validate(net); });
    }
    SUBCASE("non-positive tap ratio") {
        Network net = two_bus_network();
        net.lines[0].tap_ratio = 0.0;
        check_error(ErrorCode::InvalidNetwork, [&] { validate(net); });
    }
    SUBCASE("negative resistance") {
        Network net = two_bus_network();
        net.lines[0].r = -0.01;
        check_error(ErrorCode::InvalidNetwork, [&] { validate(net); });
    }
    SUBCASE("zero impedance line") {
        Network net = two_bus_network();
        net.lines[0].r = 0.0;
        net.lines[0].x = 0.0;
        check_error(ErrorCode::ZeroImpedance, [&] { validate(net); });
    }
    SUBCASE("inverted generator box") {
        Network net = two_bus_network();
        net.generators[0].p_min = 2.0;
        net.generators[0].p_max = 1.0;
        check_error(ErrorCode::InvalidNetwork, [&] { validate(net); });
    }
    SUBCASE("non-convex generator cost") {
        Network net = two_bus_network();
        net.generators[0].cost = QuadraticCost{-1.0, 10.0, 0.0};
        check_error(ErrorCode::UnsupportedCost, [&] { validate(net); });
    }
    SUBCASE("non-positive voltage magnitude") {
        Network net = two_bus_network();
        net.buses[0].voltage_mag = 0.0;
        check_error(ErrorCode::InvalidNetwork, [&] { validate(net); });
    }
    SUBCASE("negative rating") {
        Network net = two_bus_network();
        net.lines[0].rating_mva = -10.0;
        check_error(ErrorCode::InvalidNetwork, [&] { validate(net); });
    }
}

TEST_CASE("bus indexing") {
    const Network net = triangle_network();
    CHECK(net.bus_index(1) == 0);
    CHECK(net.bus_index(3) == 2);
    check_error(ErrorCode::UnknownBus, [&] { (void)net.bus_index(42); });
}

TEST_CASE("demand vector follows bus order") {
    const Network net = triangle_network();
    const Eigen::VectorXd d = net.demand_vector();
    REQUIRE(d.size() == 3);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == doctest::Approx(0.3));
    CHECK(d[2] == doctest::Approx(1.2));
}

TEST_CASE("connectivity check") {
    CHECK(check_connected(triangle_network()));

    Network net = triangle_network();
    net.buses.push_back({4, 1.0, 0.0});  // island
    CHECK_FALSE(check_connected(net));

    Network single;
    single.buses = {{7, 1.0, 0.0}};
    CHECK(check_connected(single));
}

TEST_CASE("incidence matrices") {
    const Network net = triangle_network();
    const IncidenceSet inc = build_incidence(net, 1);

    REQUIRE(inc.a.rows() == 3);
    REQUIRE(inc.a.cols() == 3);
    CHECK(inc.reference_bus == 1);
    CHECK(inc.reference_index == 0);

    const Eigen::MatrixXd a = Eigen::MatrixXd(inc.a);
    // Row l has +1 at from(l), -1 at to(l); columns are bus-ordered.
    CHECK(a(0, 0) == 1.0);
    CHECK(a(0, 1) == -1.0);
    CHECK(a(0, 2) == 0.0);
    CHECK(a(1, 1) == 1.0);
    CHECK(a(1, 2) == -1.0);
    CHECK(a(2, 0) == 1.0);
    CHECK(a(2, 2) == -1.0);

    // Row sums of the signed incidence vanish; |A| has row sums of two.
    for (int l = 0; l < 3; ++l) {
        CHECK(a.row(l).sum() == doctest::Approx(0.0));
        CHECK(Eigen::MatrixXd(inc.a_abs).row(l).sum() == doctest::Approx(2.0));
    }

    // The reduced matrix drops the reference column.
    REQUIRE(inc.a_dot.cols() == 2);
    const Eigen::MatrixXd ad = Eigen::MatrixXd(inc.a_dot);
    CHECK(ad(0, 0) == -1.0);  // column of bus 2
    CHECK(ad(2, 1) == -1.0);  // column of bus 3

    // Choosing a different reference shifts which column is removed.
    const IncidenceSet inc3 = build_incidence(net, 3);
    CHECK(inc3.reference_index == 2);
    const Eigen::MatrixXd ad3 = Eigen::MatrixXd(inc3.a_dot);
    CHECK(ad3(0, 0) == 1.0);   // bus 1 column survives
    CHECK(ad3(0, 1) == -1.0);  // bus 2 column survives
}

TEST_CASE("incidence with unknown reference bus throws") {
    check_error(ErrorCode::UnknownBus,
                [&] { (void)build_incidence(triangle_network(), 42); });
}

}  // TEST_SUITE
