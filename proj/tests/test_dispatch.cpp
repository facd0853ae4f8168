#include <doctest.h>

#include <array>
#include <cmath>

#include "edml/dispatch.hpp"
#include "edml/errors.hpp"
#include "test_support.hpp"

using namespace edml;
using edml::testing::triangle_network;
using edml::testing::two_bus_network;

namespace {

constexpr std::array<ApproxTier, 4> kAllTiers = {ApproxTier::Exact, ApproxTier::Taylor,
                                                 ApproxTier::Nominal, ApproxTier::DC};

DispatchSolution solve_with(const Network& net, DispatchOptions opts) {
    const DispatchProblem problem = assemble(net, opts);
    return solve_dispatch(problem);
}

/// Residual of nodal balance T(dth) = P - D at a solution.
double balance_residual(const DispatchProblem& problem, const DispatchSolution& sol) {
    const Eigen::VectorXd t = injections(problem.model, sol.delta_theta);
    return (t - (sol.bus_injection - problem.demand)).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_SUITE("dispatch") {

TEST_CASE("two-bus dc dispatch matches the closed-form optimum") {
    // With loss = dth^2 and flow = 10*dth, the receiving-end balance
    // 0.5*dth^2 - 10*dth + 1 = 0 picks dth, and the price at the load bus is
    // scaled up by the marginal-loss factor (10 + u/...) / (10 - ...).
    DispatchOptions opts;
    opts.tier = ApproxTier::DC;
    const DispatchProblem problem = assemble(two_bus_network(), opts);
    const DispatchSolution sol = solve_dispatch(problem);

    REQUIRE(sol.status == SolveStatus::Converged);
    CHECK(sol.gen_dispatch[0] == doctest::Approx(1.0101012677666932).epsilon(1e-6));
    CHECK(sol.delta_theta[0] == doctest::Approx(0.10050506338833466).epsilon(1e-6));
    CHECK(sol.lmp[0] == doctest::Approx(10.0).epsilon(1e-6));
    CHECK(sol.lmp[1] == doctest::Approx(10.203050891044215).epsilon(1e-6));
    CHECK(sol.objective == doctest::Approx(10.101012677666932).epsilon(1e-6));
    CHECK(sol.theta[0] == 0.0);  // reference pinned
    CHECK(sol.theta[1] == doctest::Approx(-0.10050506338833466).epsilon(1e-6));
    CHECK(balance_residual(problem, sol) <= 1e-7);
    for (bool flag : sol.lmp_degenerate) CHECK_FALSE(flag);
}

TEST_CASE("all tiers solve the reference networks") {
    for (ApproxTier tier : kAllTiers) {
        DispatchOptions opts;
        opts.tier = tier;
        for (const Network& net : {two_bus_network(), triangle_network()}) {
            const DispatchProblem problem = assemble(net, opts);
            const DispatchSolution sol = solve_dispatch(problem);
            REQUIRE(sol.status == SolveStatus::Converged);
            CHECK(balance_residual(problem, sol) <= 1e-6);
            // Marginal losses put the load-bus price above the source price.
            CHECK(sol.lmp.minCoeff() > 0.0);
        }
    }
}

TEST_CASE("exact tier covers the losses from the sending bus") {
    DispatchOptions opts;
    opts.tier = ApproxTier::Exact;
    const DispatchSolution sol = solve_with(two_bus_network(), opts);
    REQUIRE(sol.status == SolveStatus::Converged);
    CHECK(sol.gen_dispatch[0] > 1.0);       // demand plus real losses
    CHECK(sol.lmp[1] > sol.lmp[0]);         // marginal losses raise the load price
    CHECK(sol.lmp[0] == doctest::Approx(10.0).epsilon(1e-6));  // marginal unit
}

TEST_CASE("lmp equals the finite-difference cost sensitivity") {
    DispatchOptions opts;
    opts.tier = ApproxTier::Exact;
    const DispatchProblem problem = assemble(two_bus_network(), opts);
    const DispatchSolution sol = solve_dispatch(problem);
    REQUIRE(sol.status == SolveStatus::Converged);

    const double fd = lmp_finite_difference(problem, sol, 2, 1e-5);
    CHECK(fd == doctest::Approx(sol.lmp[1]).epsilon(1e-5));
    const double fd1 = lmp_finite_difference(problem, sol, 1, 1e-5);
    CHECK(fd1 == doctest::Approx(sol.lmp[0]).epsilon(1e-5));
}

TEST_CASE("relaxed balance agrees with the equality form when prices are positive") {
    for (ApproxTier tier : {ApproxTier::Exact, ApproxTier::DC}) {
        DispatchOptions opts;
        opts.tier = tier;
        const DispatchProblem strict = assemble(two_bus_network(), opts);
        const DispatchSolution a = solve_dispatch(strict);
        const DispatchProblem relaxed = relax_oversatisfaction(strict);
        const DispatchSolution b = solve_dispatch(relaxed);

        REQUIRE(a.status == SolveStatus::Converged);
        REQUIRE(b.status == SolveStatus::Converged);
        CHECK(b.objective == doctest::Approx(a.objective).epsilon(1e-6));
        CHECK((a.gen_dispatch - b.gen_dispatch).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK((a.lmp - b.lmp).cwiseAbs().maxCoeff() <= 1e-5);
        CHECK(b.lmp.minCoeff() >= -1e-8);  // relaxed prices are signed nonnegative
    }
}

TEST_CASE("binding current rating pins the angle to the window edge") {
    // A second, expensive unit at the load bus keeps the case feasible once
    // the line rating cuts the cheap import below the demand.
    Network net = two_bus_network();
    net.lines[0].rating_mva = 80.0;  // unconstrained import needs ~1 p.u.
    Generator local;
    local.bus = 2;
    local.p_min = 0.0;
    local.p_max = 2.0;
    local.cost = QuadraticCost{0.0, 50.0, 0.0};
    net.generators.push_back(local);

    for (ApproxTier tier : kAllTiers) {
        DispatchOptions opts;
        opts.tier = tier;
        const DispatchProblem problem = assemble(net, opts);
        const DispatchSolution sol = solve_dispatch(problem);
        REQUIRE(sol.status == SolveStatus::Converged);

        const AngleWindow w = problem.line_constraints[0].bounds.window;
        CHECK(problem.line_constraints[0].bounds.upper_source == WindowSource::CurrentLimit);
        CHECK(std::abs(sol.delta_theta[0] - w.upper) <= 1e-7);
        CHECK(sol.window_dual_upper[0] > 1e-3);

        // At the pinned angle the squared current sits on the limit.
        const double limit = mva_rating_to_current_limit(80.0, 100.0, 1.0);
        const double i_sq =
            problem.model.lines[0].current_sq(sol.delta_theta[0], CurrentSide::IntoFromI);
        CHECK(i_sq == doctest::Approx(limit).epsilon(1e-7));

        // Congestion separates the prices: the local expensive unit sets the
        // load-bus price while the import stays at the cheap marginal cost.
        CHECK(sol.lmp[0] == doctest::Approx(10.0).epsilon(1e-5));
        CHECK(sol.lmp[1] == doctest::Approx(50.0).epsilon(1e-5));
        CHECK(sol.gen_dispatch[1] > 0.1);  // local unit actually runs
    }
}

TEST_CASE("window mode and explicit-current mode find the same optimum") {
    Network net = two_bus_network();
    net.lines[0].rating_mva = 80.0;
    Generator local;
    local.bus = 2;
    local.p_min = 0.0;
    local.p_max = 2.0;
    local.cost = QuadraticCost{0.0, 50.0, 0.0};
    net.generators.push_back(local);

    for (ApproxTier tier : {ApproxTier::Exact, ApproxTier::Taylor}) {
        DispatchOptions wopts;
        wopts.tier = tier;
        wopts.limit_mode = LimitMode::AngleWindows;
        DispatchOptions eopts = wopts;
        eopts.limit_mode = LimitMode::ExplicitCurrent;

        const DispatchSolution w = solve_with(net, wopts);
        const DispatchSolution e = solve_with(net, eopts);
        REQUIRE(w.status == SolveStatus::Converged);
        REQUIRE(e.status == SolveStatus::Converged);
        CHECK(e.objective == doctest::Approx(w.objective).epsilon(1e-6));
        CHECK((w.gen_dispatch - e.gen_dispatch).cwiseAbs().maxCoeff() <= 1e-5);
        CHECK((w.lmp - e.lmp).cwiseAbs().maxCoeff() <= 1e-4 * w.lmp.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("piecewise linear costs dispatch segment by segment") {
    Network net = two_bus_network();
    PiecewiseLinearCost pwl;
    pwl.breakpoints = {0.0, 1.0, 2.0};
    pwl.values = {0.0, 8.0, 24.0};  // slopes 8 then 16
    net.generators[0].cost = pwl;

    DispatchOptions opts;
    opts.tier = ApproxTier::Exact;
    const DispatchProblem problem = assemble(net, opts);
    REQUIRE(problem.gen_blocks[0].num_vars == 2);
    const DispatchSolution sol = solve_dispatch(problem);
    REQUIRE(sol.status == SolveStatus::Converged);

    // Demand plus losses lands inside the second segment: its slope prices
    // the sending bus.
    CHECK(sol.gen_dispatch[0] > 1.0);
    CHECK(sol.gen_dispatch[0] < 1.1);
    CHECK(sol.lmp[0] == doctest::Approx(16.0).epsilon(1e-5));
    CHECK(sol.objective ==
          doctest::Approx(cost_value(net.generators[0].cost, sol.gen_dispatch[0]))
              .epsilon(1e-8));
}

TEST_CASE("a fixed generator becomes a constant injection with its cost") {
    Network net = two_bus_network();
    Generator fixed;
    fixed.bus = 2;
    fixed.p_min = 0.4;
    fixed.p_max = 0.4;
    fixed.cost = QuadraticCost{0.0, 5.0, 1.0};
    net.generators.push_back(fixed);

    DispatchOptions opts;
    opts.tier = ApproxTier::DC;
    const DispatchProblem problem = assemble(net, opts);
    CHECK(problem.gen_blocks[1].num_vars == 0);
    CHECK(problem.fixed_injection[1] == doctest::Approx(0.4));
    CHECK(problem.cost_constant == doctest::Approx(5.0 * 0.4 + 1.0));

    const DispatchSolution sol = solve_dispatch(problem);
    REQUIRE(sol.status == SolveStatus::Converged);
    CHECK(sol.gen_dispatch[1] == 0.4);

    // Manually shifting the demand reproduces the same marginal dispatch.
    Network reduced = two_bus_network();
    reduced.buses[1].demand = 0.6;
    const DispatchSolution ref = solve_with(reduced, opts);
    CHECK(sol.gen_dispatch[0] == doctest::Approx(ref.gen_dispatch[0]).epsilon(1e-7));
    CHECK(sol.objective == doctest::Approx(ref.objective + 3.0).epsilon(1e-8));
    CHECK(sol.lmp[1] == doctest::Approx(ref.lmp[1]).epsilon(1e-6));
}

TEST_CASE("an exactly-binding capacity is reported as degenerate") {
    // Two strictly convex units so the clamped bound grazes an interior
    // optimum: the capacity is active with a (uniquely) zero multiplier.
    Network net = two_bus_network();
    net.generators[0].cost = QuadraticCost{2.0, 8.0, 0.0};
    Generator peaker;
    peaker.bus = 2;
    peaker.p_min = 0.0;
    peaker.p_max = 2.0;
    peaker.cost = QuadraticCost{1.0, 10.0, 0.0};
    net.generators.push_back(peaker);

    DispatchOptions opts;
    opts.tier = ApproxTier::DC;
    const DispatchSolution base = solve_with(net, opts);
    REQUIRE(base.status == SolveStatus::Converged);
    CHECK_FALSE(base.lmp_degenerate[0]);

    net.generators[0].p_max = base.gen_dispatch[0];
    const DispatchSolution sol = solve_with(net, opts);
    REQUIRE(sol.status == SolveStatus::Converged);
    CHECK(sol.lmp_degenerate[0]);
    CHECK(sol.lmp[0] == doctest::Approx(base.lmp[0]).epsilon(1e-3));
}

TEST_CASE("a capacity pinned by the balance equation still solves") {
    DispatchOptions opts;
    opts.tier = ApproxTier::DC;
    const DispatchSolution base = solve_with(two_bus_network(), opts);
    REQUIRE(base.status == SolveStatus::Converged);

    // With the only unit clamped exactly onto its forced output the feasible
    // set shrinks to a single point and every inequality dual is non-unique;
    // the dispatch itself must still come out right.
    Network net = two_bus_network();
    net.generators[0].p_max = base.gen_dispatch[0];
    const DispatchSolution sol = solve_with(net, opts);
    REQUIRE(sol.status == SolveStatus::Converged);
    CHECK(sol.gen_dispatch[0] == doctest::Approx(base.gen_dispatch[0]).epsilon(1e-7));
    CHECK(sol.objective == doctest::Approx(base.objective).epsilon(1e-7));
}

TEST_CASE("ldf allocation shifts prices relative to half-line") {
    DispatchOptions half;
    half.tier = ApproxTier::Exact;
    DispatchOptions ldf = half;
    ldf.ldf_bus = 1;

    const DispatchSolution a = solve_with(triangle_network(), half);
    const DispatchSolution b = solve_with(triangle_network(), ldf);
    REQUIRE(a.status == SolveStatus::Converged);
    REQUIRE(b.status == SolveStatus::Converged);
    // Same physics, different loss bookkeeping: dispatch stays close while the
    // price vector moves.
    CHECK((a.lmp - b.lmp).cwiseAbs().maxCoeff() > 1e-4);
}

TEST_CASE("reference bus choice does not change the solution") {
    DispatchOptions opts;
    opts.tier = ApproxTier::Exact;
    const ReferenceInvarianceReport rep =
        verify_reference_invariance(triangle_network(), opts, 1, 3);
    CHECK(rep.objective_rel_delta <= 1e-6);
    CHECK(rep.dispatch_delta <= 1e-5);
    CHECK(rep.lmp_delta <= 1e-5);
    CHECK(rep.mapped_angle_residual <= 1e-8);
    CHECK(rep.mapped_balance_residual <= 1e-6);
}

TEST_CASE("warm starts reproduce the optimum") {
    DispatchOptions opts;
    opts.tier = ApproxTier::Exact;
    const DispatchProblem problem = assemble(triangle_network(), opts);
    const DispatchSolution cold = solve_dispatch(problem);
    REQUIRE(cold.status == SolveStatus::Converged);

    DispatchInit warm;
    warm.gen_dispatch = cold.gen_dispatch;
    const int ref = problem.model.incidence.reference_index;
    warm.theta_dot = Eigen::VectorXd(problem.network.num_buses() - 1);
    int k = 0;
    for (int i = 0; i < problem.network.num_buses(); ++i) {
        if (i != ref) warm.theta_dot[k++] = cold.theta[i];
    }
    const DispatchSolution hot = solve_dispatch(problem, &warm);
    REQUIRE(hot.status == SolveStatus::Converged);
    CHECK(hot.objective == doctest::Approx(cold.objective).epsilon(1e-8));
    CHECK((hot.gen_dispatch - cold.gen_dispatch).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("total cost sums the network cost functions") {
    const Network net = triangle_network();
    Eigen::VectorXd pg(2);
    pg << 0.5, 0.25;
    const double expected = (2.0 * 0.25 + 8.0 * 0.5) + (3.0 * 0.0625 + 12.0 * 0.25);
    CHECK(total_cost(net, pg) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("assembly rejects impossible instances") {
    SUBCASE("capacity below demand") {
        Network net = two_bus_network();
        net.buses[1].demand = 10.0;  // capacity is 3
        try {
            (void)assemble(net, DispatchOptions{});
            FAIL_CHECK("expected InfeasibleByConstruction");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InfeasibleByConstruction);
        }
    }
    SUBCASE("disconnected network") {
        Network net = two_bus_network();
        net.buses.push_back({3, 1.0, 0.0});
        try {
            (void)assemble(net, DispatchOptions{});
            FAIL_CHECK("expected Disconnected");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Disconnected);
        }
    }
    SUBCASE("unknown reference bus") {
        DispatchOptions opts;
        opts.reference_bus = 42;
        try {
            (void)assemble(two_bus_network(), opts);
            FAIL_CHECK("expected UnknownBus");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::UnknownBus);
        }
    }
}

}  // TEST_SUITE
