// Command-line front end: solve one case, compare approximation tiers,
// run model self-checks, or convert between case formats.
//
// Exit codes: 0 success, 1 input/usage error, 2 solver failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "edml/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitSolverFailure = 2;

edml::ApproxTier tier_from_name(const std::string& name) {
    if (name == "exact") return edml::ApproxTier::Exact;
    if (name == "taylor") return edml::ApproxTier::Taylor;
    if (name == "nominal") return edml::ApproxTier::Nominal;
    if (name == "dc") return edml::ApproxTier::DC;
    throw CLI::ValidationError("--tier", "unknown tier '" + name + "'");
}

/// Parses the --ldf value: "slack=<bus>" pins losses to that bus.
std::optional<int> parse_ldf(const std::string& value) {
    if (value.empty()) return std::nullopt;
    const std::string prefix = "slack=";
    if (value.rfind(prefix, 0) != 0) {
        throw CLI::ValidationError("--ldf", "expected slack=<bus>, got '" + value + "'");
    }
    return std::stoi(value.substr(prefix.size()));
}

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write output file: " + out_path);
    out << text;
}

edml::SolverOptions solver_options_from_env(double tol) {
    edml::SolverOptions opts;
    opts.tol_kkt = tol;
    const char* level = std::getenv("EDML_LOG");
    opts.log_iterations = level && std::string(level) == "debug";
    return opts;
}

struct CommonArgs {
    std::string case_path;
    std::string tier = "exact";
    std::string ldf;
    std::optional<int> reference;
    double tol = 1e-8;
    std::string out_path;
    std::string format;
    int repeat = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, const char* default_format) {
    cmd->add_option("case", args.case_path, "case file (.m or .json)")->required();
    cmd->add_option("--tier", args.tier, "approximation tier: exact|taylor|nominal|dc")
        ->default_val("exact");
    cmd->add_option("--ldf", args.ldf, "loss allocation: slack=<bus> (default: half-line)");
    int ref = 0;
    cmd->add_option("--reference", ref, "reference (angle) bus id")
        ->each([&args](const std::string& v) { args.reference = std::stoi(v); });
    cmd->add_option("--tol", args.tol, "solver KKT tolerance")->default_val(1e-8);
    cmd->add_option("--out", args.out_path, "write the result to this file instead of stdout");
    cmd->add_option("--format", args.format, "output format: table|csv|json")
        ->default_val(default_format);
    cmd->add_option("--repeat", args.repeat, "re-solve count for timing")->default_val(1);
}

int cmd_solve(const CommonArgs& args, bool relaxed, const std::string& limit_mode) {
    const edml::RawCase raw = edml::load_case(args.case_path);
    const edml::Network network = edml::to_network(raw);

    edml::DispatchOptions options;
    options.tier = tier_from_name(args.tier);
    options.ldf_bus = parse_ldf(args.ldf);
    options.reference_bus = args.reference;
    options.limit_mode = limit_mode == "explicit" ? edml::LimitMode::ExplicitCurrent
                                                  : edml::LimitMode::AngleWindows;
    options.relax_balance = relaxed;
    options.solver = solver_options_from_env(args.tol);

    const edml::DispatchProblem problem = edml::assemble(network, options);
    edml::DispatchSolution solution;
    for (int rep = 0; rep < std::max(1, args.repeat); ++rep) {
        edml::DispatchSolution s = edml::solve_dispatch(problem);
        if (rep == 0 || s.wall_time_s < solution.wall_time_s) solution = std::move(s);
    }

    std::string text;
    if (args.format == "json") {
        auto doc = edml::solution_to_json(network, problem, solution);
        doc["case"] = raw.name;
        text = doc.dump(2) + "\n";
    } else if (args.format == "csv") {
        text = edml::solution_to_csv(network, problem, solution);
    } else {
        text = edml::solution_to_table(network, problem, solution);
    }
    write_output(text, args.out_path);
    return solution.status == edml::SolveStatus::Converged ? kExitOk : kExitSolverFailure;
}

int cmd_compare(const CommonArgs& args, const std::string& tiers_csv) {
    const edml::RawCase raw = edml::load_case(args.case_path);
    const edml::Network network = edml::to_network(raw);

    edml::DispatchOptions options;
    options.reference_bus = args.reference;
    options.solver = solver_options_from_env(args.tol);

    std::vector<edml::TierChoice> variants;
    std::stringstream ss(tiers_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) variants.push_back({tier_from_name(item), std::nullopt});
    }
    if (variants.empty()) throw CLI::ValidationError("--tiers", "no tiers requested");
    // An --ldf value adds the allocated-loss variant of the last tier.
    if (const auto ldf_bus = parse_ldf(args.ldf)) {
        variants.push_back({variants.back().tier, ldf_bus});
    }

    const edml::ComparisonReport report =
        edml::compare_tiers(network, options, variants, args.repeat, 1e-3, raw.name);

    std::string text;
    if (args.format == "json") text = edml::report_to_json(report).dump(2) + "\n";
    else if (args.format == "table") text = edml::report_to_table(report);
    else text = edml::report_to_csv(report);
    write_output(text, args.out_path);

    for (const auto& row : report.rows) {
        if (row.status != edml::SolveStatus::Converged) return kExitSolverFailure;
    }
    return kExitOk;
}

int cmd_check(const CommonArgs& args) {
    const edml::RawCase raw = edml::load_case(args.case_path);
    const edml::Network network = edml::to_network(raw);
    const auto results = edml::run_checks(network, tier_from_name(args.tier));

    std::ostringstream out;
    bool failed = false;
    for (const auto& r : results) {
        const char* tag = r.status == edml::CheckResult::Status::Pass     ? "PASS"
                          : r.status == edml::CheckResult::Status::Waived ? "WAIVED"
                                                                          : "FAIL";
        failed = failed || r.status == edml::CheckResult::Status::Fail;
        out << "[" << tag << "] " << r.name;
        if (!r.detail.empty()) out << " (" << r.detail << ")";
        out << "\n";
    }
    write_output(out.str(), args.out_path);
    return failed ? kExitSolverFailure : kExitOk;
}

int cmd_convert(const std::string& in_path, const std::string& out_path) {
    const edml::RawCase raw = edml::load_case(in_path);
    edml::save_case(raw, out_path);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"economic dispatch with marginal losses"};
    app.require_subcommand(1);

    CommonArgs solve_args;
    bool relaxed = false;
    std::string limit_mode = "windows";
    CLI::App* solve = app.add_subcommand("solve", "solve one dispatch instance");
    add_common(solve, solve_args, "table");
    solve->add_flag("--relaxed", relaxed, "relax balance to allow over-satisfying demand");
    solve->add_option("--limit-mode", limit_mode, "rating handling: windows|explicit")
        ->default_val("windows");

    CommonArgs compare_args;
    std::string tiers = "exact,taylor,nominal,dc";
    CLI::App* compare = app.add_subcommand("compare", "compare approximation tiers");
    add_common(compare, compare_args, "csv");
    compare->add_option("--tiers", tiers, "comma-separated tier list")->default_val(tiers);

    CommonArgs check_args;
    CLI::App* check = app.add_subcommand("check", "run model self-checks on a case");
    add_common(check, check_args, "table");

    std::string convert_in, convert_out;
    CLI::App* convert = app.add_subcommand("convert", "convert a case between .m and .json");
    convert->add_option("input", convert_in, "input case file")->required();
    convert->add_option("output", convert_out, "output case file")->required();

    try {
        app.parse(argc, argv);
        if (solve->parsed()) return cmd_solve(solve_args, relaxed, limit_mode);
        if (compare->parsed()) return cmd_compare(compare_args, tiers);
        if (check->parsed()) return cmd_check(check_args);
        if (convert->parsed()) return cmd_convert(convert_in, convert_out);
        return kExitInputError;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInputError;
    } catch (const edml::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
}
