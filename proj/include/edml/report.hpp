#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "edml/dispatch.hpp"
#include "edml/matpower.hpp"

namespace edml {

///// One dispatch variant to compare: a tier, optionally with losses allocated
/// to a single bus instead of half-line (the LDF column of the comparison).
struct TierChoice {
    ApproxTier tier = ApproxTier::Exact;
    std::optional<int> ldf_bus;
    std::string label() const;
};

/// Comparison row for one approximation against the exact baseline. Deltas
/// use the baseline's cost function and bus order; MW quantities are on the
/// case base.
struct TierReportRow {
    std::string label;
    SolveStatus status = SolveStatus::NumericalFailure;
    double objective = 0.0;            ///< $/h, the variant's own objective
    double cost_of_dispatch = 0.0;     ///< $/h, network cost of this dispatch
    double cost_delta = 0.0;           ///< $/h, baseline cost minus this row's
    double total_dispatch_mw = 0.0;
    int dispatched_count = 0;          ///< generators strictly above p_min
    double dispatch_delta_l1_mw = 0.0;
    double dispatch_delta_linf_mw = 0.0;
    double lmp_min = 0.0, lmp_mean = 0.0, lmp_max = 0.0;  ///< $/MWh
    double lmp_delta_max_rel = 0.0;    ///< max relative LMP deviation
    double max_abs_delta_theta = 0.0;  ///< rad
    int iterations = 0;
    double wall_time_s = 0.0;          ///< best of `repeat` runs
};

struct ComparisonReport {
    std::string case_name;
    double dispatch_epsilon_mw = 0.0;  ///< threshold for dispatched_count
    std::vector<TierReportRow> rows;   ///< baseline first
};

/// Solves the case once per variant (baseline = variants.front()) and tallies
/// the comparison. `repeat` re-solves each variant, keeping the best time.
ComparisonReport compare_tiers(const Network& network, const DispatchOptions& base_options,
                               const std::vector<TierChoice>& variants, int repeat = 1,
                               double dispatch_epsilon_mw = 1e-3,
                               const std::string& case_name = "case");

std::string report_to_csv(const ComparisonReport& report);
std::string report_to_table(const ComparisonReport& report);
nlohmann::json report_to_json(const ComparisonReport& report);

/// Model self-checks runnable on any case: identities, symmetry, derivative
/// consistency, reference invariance, conservation. `Waived` marks checks
/// skipped for structural reasons (e.g. strict loss convexity on a lossless
/// line), with the reason in `detail`.
struct CheckResult {
    enum class Status { Pass, Fail, Waived };
    std::string name;
    Status status = Status::Pass;
    std::string detail;
};

std::vector<CheckResult> run_checks(const Network& network, ApproxTier tier);

/// Full dispatch result serialization for the solve command.
nlohmann::json solution_to_json(const Network& network, const DispatchProblem& problem,
                                const DispatchSolution& solution);
std::string solution_to_table(const Network& network, const DispatchProblem& problem,
                              const DispatchSolution& solution);
std::string solution_to_csv(const Network& network, const DispatchProblem& problem,
                            const DispatchSolution& solution);

}  // namespace edml
