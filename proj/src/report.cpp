#include "edml/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

namespace edml {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string fmt_fixed(double v, int precision) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

const char* source_name(WindowSource s) {
    switch (s) {
        case WindowSource::FeasibilityDomain: return "domain";
        case WindowSource::FlowLimit: return "flow";
        case WindowSource::CurrentLimit: return "current";
    }
    return "unknown";
}

}  // namespace

std::string TierChoice::label() const {
    std::string out = tier_name(tier);
    if (ldf_bus) out += "+ldf(slack=" + std::to_string(*ldf_bus) + ")";
    return out;
}

ComparisonReport compare_tiers(const Network& network, const DispatchOptions& base_options,
                               const std::vector<TierChoice>& variants, int repeat,
                               double dispatch_epsilon_mw, const std::string& case_name) {
    if (variants.empty()) throw std::invalid_argument("compare_tiers needs at least one variant");
    repeat = std::max(1, repeat);

    ComparisonReport report;
    report.case_name = case_name;
    report.dispatch_epsilon_mw = dispatch_epsilon_mw;
    const double base = network.base_mva;

    std::vector<DispatchSolution> solutions;
    solutions.reserve(variants.size());
    std::vector<double> best_time(variants.size(), 0.0);
    for (std::size_t v = 0; v < variants.size(); ++v) {
        DispatchOptions options = base_options;
        options.tier = variants[v].tier;
        options.ldf_bus = variants[v].ldf_bus;
        const DispatchProblem problem = assemble(network, options);
        DispatchSolution sol;
        double best = std::numeric_limits<double>::infinity();
        for (int rep = 0; rep < repeat; ++rep) {
            sol = solve_dispatch(problem);
            best = std::min(best, sol.wall_time_s);
        }
        best_time[v] = best;
        solutions.push_back(std::move(sol));
    }

    const DispatchSolution& baseline = solutions.front();
    const bool baseline_ok = baseline.status == SolveStatus::Converged;
    const double baseline_cost =
        baseline_ok ? total_cost(network, baseline.gen_dispatch) : kNan;

    for (std::size_t v = 0; v < variants.size(); ++v) {
        const DispatchSolution& sol = solutions[v];
        TierReportRow row;
        row.label = variants[v].label();
        row.status = sol.status;
        row.iterations = sol.iterations;
        row.wall_time_s = best_time[v];
        if (sol.status != SolveStatus::Converged) {
            row.objective = row.cost_of_dispatch = row.cost_delta = kNan;
            row.total_dispatch_mw = row.dispatch_delta_l1_mw = row.dispatch_delta_linf_mw = kNan;
            row.lmp_min = row.lmp_mean = row.lmp_max = row.lmp_delta_max_rel = kNan;
            row.max_abs_delta_theta = kNan;
            report.rows.push_back(std::move(row));
            continue;
        }
        row.objective = sol.objective;
        row.cost_of_dispatch = total_cost(network, sol.gen_dispatch);
        row.cost_delta = baseline_ok ? baseline_cost - row.cost_of_dispatch : kNan;
        row.total_dispatch_mw = sol.gen_dispatch.sum() * base;
        for (std::size_t g = 0; g < network.generators.size(); ++g) {
            if (sol.gen_dispatch[g] >
                network.generators[g].p_min + dispatch_epsilon_mw / base) {
                ++row.dispatched_count;
            }
        }
        if (baseline_ok) {
            const Eigen::VectorXd diff = (sol.gen_dispatch - baseline.gen_dispatch) * base;
            row.dispatch_delta_l1_mw = diff.lpNorm<1>();
            row.dispatch_delta_linf_mw = diff.size() ? diff.cwiseAbs().maxCoeff() : 0.0;
            double max_rel = 0.0;
            for (int i = 0; i < sol.lmp.size(); ++i) {
                const double ref = std::abs(baseline.lmp[i]);
                if (ref > 1e-9) max_rel = std::max(max_rel, std::abs(sol.lmp[i] - baseline.lmp[i]) / ref);
            }
            row.lmp_delta_max_rel = max_rel;
        } else {
            row.dispatch_delta_l1_mw = row.dispatch_delta_linf_mw = row.lmp_delta_max_rel = kNan;
        }
        const Eigen::VectorXd lmp_mwh = sol.lmp / base;
        row.lmp_min = lmp_mwh.minCoeff();
        row.lmp_max = lmp_mwh.maxCoeff();
        row.lmp_mean = lmp_mwh.mean();
        row.max_abs_delta_theta =
            sol.delta_theta.size() ? sol.delta_theta.cwiseAbs().maxCoeff() : 0.0;
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string report_to_csv(const ComparisonReport& report) {
    std::ostringstream out;
    out << "label,status,objective,cost_of_dispatch,cost_delta,total_dispatch_mw,"
           "dispatched_count,dispatch_delta_l1_mw,dispatch_delta_linf_mw,"
           "lmp_min,lmp_mean,lmp_max,lmp_delta_max_rel,max_abs_delta_theta,"
           "iterations,wall_time_s\n";
    for (const auto& r : report.rows) {
        out << r.label << ',' << solve_status_name(r.status) << ',' << fmt(r.objective) << ','
            << fmt(r.cost_of_dispatch) << ',' << fmt(r.cost_delta) << ','
            << fmt(r.total_dispatch_mw) << ',' << r.dispatched_count << ','
            << fmt(r.dispatch_delta_l1_mw) << ',' << fmt(r.dispatch_delta_linf_mw) << ','
            << fmt(r.lmp_min) << ',' << fmt(r.lmp_mean) << ',' << fmt(r.lmp_max) << ','
            << fmt(r.lmp_delta_max_rel) << ',' << fmt(r.max_abs_delta_theta) << ','
            << r.iterations << ',' << fmt(r.wall_time_s) << '\n';
    }
    return out.str();
}

std::string report_to_table(const ComparisonReport& report) {
    std::ostringstream out;
    out << "case " << report.case_name << " (dispatch epsilon "
        << fmt(report.dispatch_epsilon_mw) << " MW; deltas vs " <<
        (report.rows.empty() ? std::string("-") : report.rows.front().label) << ")\n\n";
    out << std::left << std::setw(22) << "variant" << std::right << std::setw(12) << "status"
        << std::setw(14) << "cost[$]" << std::setw(12) << "dCost[$]" << std::setw(12) << "sumP[MW]"
        << std::setw(7) << "#disp" << std::setw(12) << "|dP|1[MW]" << std::setw(12) << "|dP|inf"
        << std::setw(11) << "LMPmean" << std::setw(11) << "dLMPrel" << std::setw(11) << "|dth|inf"
        << std::setw(6) << "it" << std::setw(11) << "time[s]" << "\n";
    for (const auto& r : report.rows) {
        out << std::left << std::setw(22) << r.label << std::right << std::setw(12)
            << solve_status_name(r.status) << std::setw(14) << fmt_fixed(r.cost_of_dispatch, 2)
            << std::setw(12) << fmt_fixed(r.cost_delta, 2) << std::setw(12)
            << fmt_fixed(r.total_dispatch_mw, 1) << std::setw(7) << r.dispatched_count
            << std::setw(12) << fmt_fixed(r.dispatch_delta_l1_mw, 2) << std::setw(12)
            << fmt_fixed(r.dispatch_delta_linf_mw, 2) << std::setw(11) << fmt_fixed(r.lmp_mean, 3)
            << std::setw(11) << fmt_fixed(r.lmp_delta_max_rel, 5) << std::setw(11)
            << fmt_fixed(r.max_abs_delta_theta, 5) << std::setw(6) << r.iterations << std::setw(11)
            << fmt_fixed(r.wall_time_s, 4) << "\n";
    }
    return out.str();
}

nlohmann::json report_to_json(const ComparisonReport& report) {
    nlohmann::json doc;
    doc["case"] = report.case_name;
    doc["dispatch_epsilon_mw"] = report.dispatch_epsilon_mw;
    doc["rows"] = nlohmann::json::array();
    for (const auto& r : report.rows) {
        doc["rows"].push_back({{"label", r.label},
                               {"status", solve_status_name(r.status)},
                               {"objective", r.objective},
                               {"cost_of_dispatch", r.cost_of_dispatch},
                               {"cost_delta", r.cost_delta},
                               {"total_dispatch_mw", r.total_dispatch_mw},
                               {"dispatched_count", r.dispatched_count},
                               {"dispatch_delta_l1_mw", r.dispatch_delta_l1_mw},
                               {"dispatch_delta_linf_mw", r.dispatch_delta_linf_mw},
                               {"lmp_min", r.lmp_min},
                               {"lmp_mean", r.lmp_mean},
                               {"lmp_max", r.lmp_max},
                               {"lmp_delta_max_rel", r.lmp_delta_max_rel},
                               {"max_abs_delta_theta", r.max_abs_delta_theta},
                               {"iterations", r.iterations},
                               {"wall_time_s", r.wall_time_s}});
    }
    return doc;
}

// ---------------------------------------------------------------------------
// model self-checks

namespace {

struct CheckContext {
    const Network& network;
    ApproxTier tier;
    std::vector<LineFunctionSet> tier_fs;
    std::vector<LineFunctionSet> exact_fs;
    std::mt19937 rng{12345};

    double sample(const Interval& iv) {
        std::uniform_real_distribution<double> dist(iv.lo, iv.hi);
        return dist(rng);
    }
};

CheckResult check_line_params(CheckContext& ctx) {
    CheckResult res{"line_params", CheckResult::Status::Pass, ""};
    for (std::size_t l = 0; l < ctx.network.lines.size(); ++l) {
        const auto p = derive_line_params(ctx.network.lines[l]);
        const double y2 = p.g * p.g + p.b * p.b;
        if (!(p.g >= 0.0) || std::abs(y2 - p.y_mag_sq) > 1e-9 * std::max(1.0, y2) ||
            !(p.alpha > 0.0) || !std::isfinite(p.phi)) {
            res.status = CheckResult::Status::Fail;
            res.detail = "derived parameters inconsistent on line " + std::to_string(l);
            return res;
        }
    }
    res.detail = std::to_string(ctx.network.lines.size()) + " lines";
    return res;
}

CheckResult check_fnd_identity(CheckContext& ctx) {
    CheckResult res{"fnd_identity", CheckResult::Status::Pass, ""};
    std::uniform_real_distribution<double> dshare(0.0, 1.0);
    double worst = 0.0;
    for (auto& fs : ctx.exact_fs) {
        const AngleWindow w = feasibility_window(fs);
        for (int trial = 0; trial < 16; ++trial) {
            const double dth = ctx.sample({w.lower, w.upper});
            const double d = dshare(ctx.rng);
            const double loss = fs.loss(dth);
            const double scale = std::max({1.0, std::abs(loss), std::abs(fs.series_flow(dth, d))});
            worst = std::max(worst, std::abs(fs.series_flow(dth, 1.0) -
                                             (fs.series_flow(dth, d) + (1.0 - d) * loss)) / scale);
            worst = std::max(worst, std::abs(-fs.series_flow(dth, 0.0) -
                                             (-fs.series_flow(dth, d) + d * loss)) / scale);
            // midline flow is the d = 1/2 series flow
            worst = std::max(worst,
                             std::abs(fs.midline_flow(dth) - fs.series_flow(dth, 0.5)) / scale);
        }
    }
    res.detail = "max residual " + fmt(worst);
    if (worst > 1e-12) res.status = CheckResult::Status::Fail;
    return res;
}

CheckResult check_symmetry(CheckContext& ctx) {
    CheckResult res{"symmetry", CheckResult::Status::Pass, ""};
    double worst = 0.0;
    for (auto& fs : ctx.tier_fs) {
        for (int trial = 0; trial < 16; ++trial) {
            const double u = ctx.sample({0.0, 1.5});
            const double lc = fs.loss_center();
            const double denom = std::max(1.0, std::abs(fs.loss(lc + u)));
            worst = std::max(worst, std::abs(fs.loss(lc + u) - fs.loss(lc - u)) / denom);
            for (const auto side : {CurrentSide::IntoFromI, CurrentSide::IntoFromJ}) {
                const double cc = fs.current_center(side);
                const double cd = std::max(1.0, std::abs(fs.current_sq(cc + u, side)));
                worst = std::max(worst,
                                 std::abs(fs.current_sq(cc + u, side) - fs.current_sq(cc - u, side)) / cd);
            }
        }
    }
    res.detail = "max asymmetry " + fmt(worst);
    if (worst > 1e-12) res.status = CheckResult::Status::Fail;
    return res;
}

CheckResult check_derivatives(CheckContext& ctx) {
    CheckResult res{"derivative_consistency", CheckResult::Status::Pass, ""};
    const double h = 1e-6;
    double worst = 0.0;
    for (auto& fs : ctx.tier_fs) {
        const AngleWindow w = feasibility_window(fs);
        for (int trial = 0; trial < 8; ++trial) {
            const double dth = ctx.sample({w.lower + 2 * h, w.upper - 2 * h});
            auto fd = [&](auto&& f) { return (f(dth + h) - f(dth - h)) / (2.0 * h); };
            auto rel = [](double a, double b) {
                return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
            };
            worst = std::max(worst, rel(fd([&](double t) { return fs.loss(t); }), fs.loss_d1(dth)));
            worst = std::max(worst,
                             rel(fd([&](double t) { return fs.midline_flow(t); }), fs.flow_d1(dth)));
            worst = std::max(worst, rel(fd([&](double t) { return fs.loss_d1(t); }), fs.loss_d2(dth)));
            for (const auto side : {CurrentSide::IntoFromI, CurrentSide::IntoFromJ}) {
                worst = std::max(worst, rel(fd([&](double t) { return fs.current_sq(t, side); }),
                                            fs.current_sq_d1(dth, side)));
            }
        }
    }
    res.detail = "max fd mismatch " + fmt(worst);
    if (worst > 1e-6) res.status = CheckResult::Status::Fail;
    return res;
}

CheckResult check_convexity(CheckContext& ctx) {
    CheckResult res{"loss_convexity", CheckResult::Status::Pass, ""};
    int lossless = 0;
    double min_d2 = std::numeric_limits<double>::infinity();
    for (auto& fs : ctx.tier_fs) {
        if (fs.g() == 0.0) {
            ++lossless;  // loss is identically zero: convex but not strictly
            continue;
        }
        const AngleWindow w = feasibility_window(fs);
        for (int trial = 0; trial < 16; ++trial) {
            const double margin = 1e-9 * std::max(1.0, std::abs(w.lower) + std::abs(w.upper));
            const double dth = ctx.sample({w.lower + margin, w.upper - margin});
            min_d2 = std::min(min_d2, fs.loss_d2(dth));
        }
    }
    if (std::isfinite(min_d2) && min_d2 < 0.0) {
        res.status = CheckResult::Status::Fail;
        res.detail = "negative loss curvature " + fmt(min_d2) + " inside a window";
        return res;
    }
    if (lossless > 0) {
        res.status = CheckResult::Status::Waived;
        res.detail = "strict convexity waived for " + std::to_string(lossless) +
                     " lossless line(s); remaining curvature min " + fmt(min_d2);
    } else {
        res.detail = "curvature min " + fmt(min_d2);
    }
    return res;
}

CheckResult check_injection_jacobian(CheckContext& ctx) {
    CheckResult res{"injection_jacobian", CheckResult::Status::Pass, ""};
    const int ref = ctx.network.slack_bus.value_or(ctx.network.buses.front().id);
    const InjectionModel model = make_injection_model(ctx.network, ctx.tier, ref);
    const int m = model.num_lines();
    Eigen::VectorXd dth(m);
    for (int l = 0; l < m; ++l) {
        const AngleWindow w = feasibility_window(model.lines[l]);
        dth[l] = ctx.sample({0.8 * w.lower, 0.8 * w.upper});
    }
    const Eigen::SparseMatrix<double> jac = injections_jacobian(model, dth);
    const double h = 1e-6;
    double worst = 0.0;
    for (int l = 0; l < m; ++l) {
        Eigen::VectorXd dp = dth, dm = dth;
        dp[l] += h;
        dm[l] -= h;
        const Eigen::VectorXd col_fd = (injections(model, dp) - injections(model, dm)) / (2.0 * h);
        const Eigen::VectorXd col = jac.col(l);
        worst = std::max(worst, (col_fd - col).cwiseAbs().maxCoeff() /
                                    std::max(1.0, col.cwiseAbs().maxCoeff()));
    }
    res.detail = "max fd mismatch " + fmt(worst);
    if (worst > 1e-6) res.status = CheckResult::Status::Fail;
    return res;
}

CheckResult check_total_balance(CheckContext& ctx) {
    CheckResult res{"total_balance", CheckResult::Status::Pass, ""};
    const int ref = ctx.network.slack_bus.value_or(ctx.network.buses.front().id);
    double worst = 0.0;
    for (const auto ldf : {std::optional<int>{}, std::optional<int>{ref}}) {
        const InjectionModel model = make_injection_model(ctx.network, ctx.tier, ref, ldf);
        Eigen::VectorXd dth(model.num_lines());
        for (int l = 0; l < model.num_lines(); ++l) {
            const AngleWindow w = feasibility_window(model.lines[l]);
            dth[l] = ctx.sample({0.8 * w.lower, 0.8 * w.upper});
        }
        const double total_t = injections(model, dth).sum();
        const double total_loss = line_losses(model, dth).sum();
        worst = std::max(worst, std::abs(total_t - total_loss) / std::max(1.0, total_loss));
    }
    res.detail = "max conservation residual " + fmt(worst);
    if (worst > 1e-12) res.status = CheckResult::Status::Fail;
    return res;
}

CheckResult check_reference_invariance(CheckContext& ctx) {
    CheckResult res{"reference_invariance", CheckResult::Status::Pass, ""};
    if (ctx.network.generators.empty()) {
        res.status = CheckResult::Status::Waived;
        res.detail = "no generators; dispatch not defined";
        return res;
    }
    DispatchOptions options;
    options.tier = ctx.tier;
    const int ref_a = ctx.network.buses.front().id;
    const int ref_b = ctx.network.buses.back().id;
    if (ref_a == ref_b) {
        res.status = CheckResult::Status::Waived;
        res.detail = "single-bus network";
        return res;
    }
    try {
        const auto rep = verify_reference_invariance(ctx.network, options, ref_a, ref_b);
        res.detail = "obj rel " + fmt(rep.objective_rel_delta) + ", dispatch " +
                     fmt(rep.dispatch_delta) + ", mapped angle " + fmt(rep.mapped_angle_residual);
        if (rep.objective_rel_delta > 1e-6 || rep.dispatch_delta > 1e-5 ||
            rep.mapped_angle_residual > 1e-8) {
            res.status = CheckResult::Status::Fail;
        }
    } catch (const std::exception& e) {
        res.status = CheckResult::Status::Fail;
        res.detail = e.what();
    }
    return res;
}

}  // namespace

std::vector<CheckResult> run_checks(const Network& network, ApproxTier tier) {
    validate(network);
    CheckContext ctx{network, tier, make_line_functions(network, tier),
                     make_line_functions(network, ApproxTier::Exact)};
    std::vector<CheckResult> results;
    results.push_back(check_line_params(ctx));
    results.push_back(check_fnd_identity(ctx));
    results.push_back(check_symmetry(ctx));
    results.push_back(check_derivatives(ctx));
    results.push_back(check_convexity(ctx));
    results.push_back(check_injection_jacobian(ctx));
    results.push_back(check_total_balance(ctx));
    results.push_back(check_reference_invariance(ctx));
    return results;
}

// ---------------------------------------------------------------------------
// solution serialization

nlohmann::json solution_to_json(const Network& network, const DispatchProblem& problem,
                                const DispatchSolution& solution) {
    const double base = network.base_mva;
    nlohmann::json doc;
    doc["tier"] = tier_name(problem.options.tier);
    doc["status"] = solve_status_name(solution.status);
    doc["objective"] = solution.objective;
    doc["iterations"] = solution.iterations;
    doc["wall_time_s"] = solution.wall_time_s;
    doc["reference_bus"] = problem.reference_bus;
    doc["residuals"] = {{"stationarity", solution.residuals.stationarity},
                        {"feasibility", solution.residuals.feasibility},
                        {"complementarity", solution.residuals.complementarity}};
    if (!solution.message.empty()) doc["message"] = solution.message;

    doc["buses"] = nlohmann::json::array();
    for (int i = 0; i < network.num_buses(); ++i) {
        doc["buses"].push_back({{"id", network.buses[i].id},
                                {"demand_mw", problem.demand[i] * base},
                                {"injection_mw", solution.bus_injection[i] * base},
                                {"theta_rad", solution.theta[i]},
                                {"lmp_usd_per_mwh", solution.lmp[i] / base},
                                {"degenerate", static_cast<bool>(solution.lmp_degenerate[i])}});
    }
    doc["generators"] = nlohmann::json::array();
    for (std::size_t g = 0; g < network.generators.size(); ++g) {
        const auto& gen = network.generators[g];
        doc["generators"].push_back({{"bus", gen.bus},
                                     {"p_mw", solution.gen_dispatch[g] * base},
                                     {"p_min_mw", gen.p_min * base},
                                     {"p_max_mw", gen.p_max * base}});
    }
    doc["lines"] = nlohmann::json::array();
    const Eigen::VectorXd flows = line_flows(problem.model, solution.delta_theta);
    const Eigen::VectorXd losses = line_losses(problem.model, solution.delta_theta);
    for (int l = 0; l < network.num_lines(); ++l) {
        const auto& lc = problem.line_constraints[l];
        const double dth = solution.delta_theta[l];
        const char* binding = "none";
        if (dth - lc.bounds.window.lower < 1e-7) binding = source_name(lc.bounds.lower_source);
        else if (lc.bounds.window.upper - dth < 1e-7) binding = source_name(lc.bounds.upper_source);
        doc["lines"].push_back({{"from", network.lines[l].from_bus},
                                {"to", network.lines[l].to_bus},
                                {"delta_theta", dth},
                                {"flow_mw", flows[l] * base},
                                {"loss_mw", losses[l] * base},
                                {"window", {lc.bounds.window.lower, lc.bounds.window.upper}},
                                {"binding", binding},
                                {"dual_lower", solution.window_dual_lower[l]},
                                {"dual_upper", solution.window_dual_upper[l]}});
    }
    return doc;
}

std::string solution_to_table(const Network& network, const DispatchProblem& problem,
                              const DispatchSolution& solution) {
    const double base = network.base_mva;
    std::ostringstream out;
    out << "status      " << solve_status_name(solution.status) << "\n"
        << "tier        " << tier_name(problem.options.tier) << "\n"
        << "objective   " << fmt_fixed(solution.objective, 4) << " $/h\n"
        << "iterations  " << solution.iterations << "\n"
        << "time        " << fmt_fixed(solution.wall_time_s, 4) << " s\n"
        << "reference   bus " << problem.reference_bus << "\n\n";

    out << std::left << std::setw(8) << "bus" << std::right << std::setw(12) << "demand[MW]"
        << std::setw(12) << "gen[MW]" << std::setw(14) << "LMP[$/MWh]" << std::setw(12)
        << "theta[rad]" << std::setw(6) << "deg" << "\n";
    for (int i = 0; i < network.num_buses(); ++i) {
        out << std::left << std::setw(8) << network.buses[i].id << std::right << std::setw(12)
            << fmt_fixed(problem.demand[i] * base, 2) << std::setw(12)
            << fmt_fixed(solution.bus_injection[i] * base, 2) << std::setw(14)
            << fmt_fixed(solution.lmp[i] / base, 4) << std::setw(12)
            << fmt_fixed(solution.theta[i], 5) << std::setw(6)
            << (solution.lmp_degenerate[i] ? "*" : "") << "\n";
    }

    out << "\n" << std::left << std::setw(14) << "line" << std::right << std::setw(12)
        << "dth[rad]" << std::setw(12) << "flow[MW]" << std::setw(12) << "loss[MW]"
        << std::setw(24) << "window[rad]" << std::setw(10) << "binding" << "\n";
    const Eigen::VectorXd flows = line_flows(problem.model, solution.delta_theta);
    const Eigen::VectorXd losses = line_losses(problem.model, solution.delta_theta);
    for (int l = 0; l < network.num_lines(); ++l) {
        const auto& lc = problem.line_constraints[l];
        const double dth = solution.delta_theta[l];
        const char* binding = "none";
        if (dth - lc.bounds.window.lower < 1e-7) binding = source_name(lc.bounds.lower_source);
        else if (lc.bounds.window.upper - dth < 1e-7) binding = source_name(lc.bounds.upper_source);
        std::ostringstream name;
        name << network.lines[l].from_bus << "-" << network.lines[l].to_bus;
        std::ostringstream window;
        window << "[" << fmt_fixed(lc.bounds.window.lower, 4) << ", "
               << fmt_fixed(lc.bounds.window.upper, 4) << "]";
        out << std::left << std::setw(14) << name.str() << std::right << std::setw(12)
            << fmt_fixed(dth, 5) << std::setw(12) << fmt_fixed(flows[l] * base, 2) << std::setw(12)
            << fmt_fixed(losses[l] * base, 3) << std::setw(24) << window.str() << std::setw(10)
            << binding << "\n";
    }
    return out.str();
}

std::string solution_to_csv(const Network& network, const DispatchProblem& problem,
                            const DispatchSolution& solution) {
    const double base = network.base_mva;
    std::ostringstream out;
    out << "bus,demand_mw,injection_mw,lmp_usd_per_mwh,theta_rad,degenerate\n";
    for (int i = 0; i < network.num_buses(); ++i) {
        out << network.buses[i].id << ',' << fmt(problem.demand[i] * base) << ','
            << fmt(solution.bus_injection[i] * base) << ',' << fmt(solution.lmp[i] / base) << ','
            << fmt(solution.theta[i]) << ',' << (solution.lmp_degenerate[i] ? 1 : 0) << '\n';
    }
    return out.str();
}

}  // namespace edml
