#include "edml/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace edml {

namespace {

constexpr double kFixedTol = 1e-12;

std::vector<GenBlock> make_gen_blocks(const Network& network, Eigen::VectorXd& fixed_injection,
                                      double& cost_constant) {
    std::vector<GenBlock> blocks;
    blocks.reserve(network.generators.size());
    int next_var = 0;
    for (std::size_t gi = 0; gi < network.generators.size(); ++gi) {
        const Generator& gen = network.generators[gi];
        GenBlock block;
        block.gen_index = static_cast<int>(gi);
        const int bus = network.bus_index(gen.bus);
        if (gen.p_max - gen.p_min <= kFixedTol) {
            block.p_base = gen.p_min;
            block.cost_base = cost_value(gen.cost, gen.p_min);
        } else if (const auto* q = std::get_if<QuadraticCost>(&gen.cost)) {
            block.is_quadratic = true;
            block.quad = *q;
            block.first_var = next_var++;
            block.num_vars = 1;
            block.cost_base = q->c0;  // variable part carries c2*p^2 + c1*p
        } else {
            // Piecewise cost: re-breakpoint onto [p_min, p_max] and split into
            // one variable per segment.
            const auto& pwl = std::get<PiecewiseLinearCost>(gen.cost);
            std::set<double> pts{gen.p_min, gen.p_max};
            for (double bp : pwl.breakpoints) {
                if (bp > gen.p_min && bp < gen.p_max) pts.insert(bp);
            }
            block.p_base = gen.p_min;
            block.cost_base = cost_value(gen.cost, gen.p_min);
            block.first_var = next_var;
            double prev = gen.p_min;
            for (double pt : pts) {
                if (pt - prev <= kFixedTol) continue;
                const double slope =
                    (cost_value(gen.cost, pt) - cost_value(gen.cost, prev)) / (pt - prev);
                // Equal-slope neighbours collapse into one segment; in particular
                // the edge segments extend past the outermost breakpoints instead
                // of spawning a duplicate.
                if (!block.seg_slope.empty() &&
                    std::abs(slope - block.seg_slope.back()) <=
                        1e-12 * std::max(1.0, std::abs(slope))) {
                    block.seg_width.back() += pt - prev;
                } else {
                    block.seg_width.push_back(pt - prev);
                    block.seg_slope.push_back(slope);
                }
                prev = pt;
            }
            block.num_vars = static_cast<int>(block.seg_width.size());
            next_var += block.num_vars;
        }
        fixed_injection[bus] += block.p_base;
        cost_constant += block.cost_base;
        blocks.push_back(std::move(block));
    }
    return blocks;
}

Eigen::VectorXd reduced_theta(const Eigen::VectorXd& theta_full, int reference_index) {
    Eigen::VectorXd out(theta_full.size() - 1);
    int k = 0;
    for (int i = 0; i < theta_full.size(); ++i) {
        if (i != reference_index) out[k++] = theta_full[i];
    }
    return out;
}

}  // namespace

DispatchProblem assemble(const Network& network, const DispatchOptions& options) {
    validate(network);
    if (!check_connected(network)) {
        throw Error(ErrorCode::Disconnected, "dispatch requires a connected network");
    }

    DispatchProblem p;
    p.network = network;
    p.options = options;
    p.reference_bus =
        options.reference_bus.value_or(network.slack_bus.value_or(network.buses.front().id));
    p.model = make_injection_model(p.network, options.tier, p.reference_bus, options.ldf_bus);
    p.demand = p.network.demand_vector();
    p.fixed_injection = Eigen::VectorXd::Zero(p.network.num_buses());
    p.gen_blocks = make_gen_blocks(p.network, p.fixed_injection, p.cost_constant);

    double capacity = 0.0;
    for (const auto& gen : p.network.generators) capacity += gen.p_max;
    if (capacity < p.demand.sum() - kFixedTol) {
        throw Error(ErrorCode::InfeasibleByConstruction,
                    "total generation capacity is below total demand");
    }

    const bool fold_ratings = options.limit_mode == LimitMode::AngleWindows;
    p.line_constraints.reserve(p.network.lines.size());
    for (int l = 0; l < p.network.num_lines(); ++l) {
        const Line& line = p.network.lines[l];
        const LineFunctionSet& fs = p.model.lines[l];
        LineConstraint lc;
        lc.bounds = dispatch_window(fs, fold_ratings ? line.rating_mva : std::nullopt,
                                    p.network.base_mva);
        if (!fold_ratings && line.rating_mva) {
            lc.current_sq_limit_ij =
                mva_rating_to_current_limit(*line.rating_mva, p.network.base_mva, fs.v_from());
            lc.current_sq_limit_ji =
                mva_rating_to_current_limit(*line.rating_mva, p.network.base_mva, fs.v_to());
            p.current_rows.emplace_back(l, 0);
            p.current_rows.emplace_back(l, 1);
        }
        p.line_constraints.push_back(std::move(lc));
    }

    const int n = p.network.num_buses();
    const int m = p.network.num_lines();
    for (const auto& block : p.gen_blocks) p.num_gen_vars += block.num_vars;
    p.theta_offset = p.num_gen_vars;
    p.dth_offset = p.theta_offset + (n - 1);
    int next = p.dth_offset + m;
    if (options.relax_balance) {
        p.relax_offset = next;
        next += n;
    }
    if (!p.current_rows.empty()) {
        p.current_slack_offset = next;
        next += static_cast<int>(p.current_rows.size());
    }
    p.num_vars = next;
    p.num_constraints = n + m + static_cast<int>(p.current_rows.size());
    return p;
}

DispatchProblem relax_oversatisfaction(const DispatchProblem& problem) {
    DispatchOptions options = problem.options;
    options.relax_balance = true;
    DispatchProblem relaxed = assemble(problem.network, options);
    relaxed.demand = problem.demand;  // carry any demand perturbations along
    return relaxed;
}

namespace {

CurrentSide row_side(int side) {
    return side == 0 ? CurrentSide::IntoFromI : CurrentSide::IntoFromJ;
}

double row_limit(const DispatchProblem& p, int line, int side) {
    const auto& lc = p.line_constraints[line];
    return side == 0 ? *lc.current_sq_limit_ij : *lc.current_sq_limit_ji;
}

NlpSpec build_spec(const DispatchProblem& p) {
    const int n = p.network.num_buses();
    const int m = p.network.num_lines();
    const int n_cur = static_cast<int>(p.current_rows.size());
    constexpr double inf = std::numeric_limits<double>::infinity();

    NlpSpec spec;
    spec.num_vars = p.num_vars;
    spec.num_constraints = p.num_constraints;
    spec.lower = Eigen::VectorXd::Constant(p.num_vars, -inf);
    spec.upper = Eigen::VectorXd::Constant(p.num_vars, inf);
    for (const auto& block : p.gen_blocks) {
        if (block.num_vars == 0) continue;
        if (block.is_quadratic) {
            const Generator& gen = p.network.generators[block.gen_index];
            spec.lower[block.first_var] = gen.p_min;
            spec.upper[block.first_var] = gen.p_max;
        } else {
            for (int k = 0; k < block.num_vars; ++k) {
                spec.lower[block.first_var + k] = 0.0;
                spec.upper[block.first_var + k] = block.seg_width[k];
            }
        }
    }
    for (int l = 0; l < m; ++l) {
        spec.lower[p.dth_offset + l] = p.line_constraints[l].bounds.window.lower;
        spec.upper[p.dth_offset + l] = p.line_constraints[l].bounds.window.upper;
    }
    if (p.relax_offset >= 0) {
        for (int i = 0; i < n; ++i) spec.lower[p.relax_offset + i] = 0.0;
    }
    if (p.current_slack_offset >= 0) {
        for (int r = 0; r < n_cur; ++r) spec.lower[p.current_slack_offset + r] = 0.0;
    }

    spec.objective = [&p](const Eigen::VectorXd& x) {
        double f = p.cost_constant;
        for (const auto& block : p.gen_blocks) {
            if (block.num_vars == 0) continue;
            if (block.is_quadratic) {
                const double v = x[block.first_var];
                f += (block.quad.c2 * v + block.quad.c1) * v;
            } else {
                for (int k = 0; k < block.num_vars; ++k) {
                    f += block.seg_slope[k] * x[block.first_var + k];
                }
            }
        }
        return f;
    };
    spec.gradient = [&p](const Eigen::VectorXd& x) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(p.num_vars);
        for (const auto& block : p.gen_blocks) {
            if (block.num_vars == 0) continue;
            if (block.is_quadratic) {
                g[block.first_var] = 2.0 * block.quad.c2 * x[block.first_var] + block.quad.c1;
            } else {
                for (int k = 0; k < block.num_vars; ++k) {
                    g[block.first_var + k] = block.seg_slope[k];
                }
            }
        }
        return g;
    };
    spec.objective_hessian = [&p](const Eigen::VectorXd&, SparseTriplets& out) {
        for (const auto& block : p.gen_blocks) {
            if (block.is_quadratic && block.quad.c2 != 0.0) {
                out.emplace_back(block.first_var, block.first_var, 2.0 * block.quad.c2);
            }
        }
    };

    spec.constraints = [&p, n, m, n_cur](const Eigen::VectorXd& x) {
        const Eigen::VectorXd s = x.segment(p.dth_offset, m);
        Eigen::VectorXd c(p.num_constraints);
        Eigen::VectorXd balance = injections(p.model, s) + p.demand - p.fixed_injection;
        for (const auto& block : p.gen_blocks) {
            const int bus = p.network.bus_index(p.network.generators[block.gen_index].bus);
            for (int k = 0; k < block.num_vars; ++k) balance[bus] -= x[block.first_var + k];
        }
        if (p.relax_offset >= 0) balance += x.segment(p.relax_offset, n);
        c.head(n) = balance;
        c.segment(n, m) =
            p.model.incidence.a_dot * x.segment(p.theta_offset, n - 1) - s;
        for (int r = 0; r < n_cur; ++r) {
            const auto [line, side] = p.current_rows[r];
            c[n + m + r] = p.model.lines[line].current_sq(s[line], row_side(side)) +
                           x[p.current_slack_offset + r] - row_limit(p, line, side);
        }
        return c;
    };
    spec.constraint_jacobian = [&p, n, m, n_cur](const Eigen::VectorXd& x, SparseTriplets& out) {
        const Eigen::VectorXd s = x.segment(p.dth_offset, m);
        for (const auto& block : p.gen_blocks) {
            const int bus = p.network.bus_index(p.network.generators[block.gen_index].bus);
            for (int k = 0; k < block.num_vars; ++k) out.emplace_back(bus, block.first_var + k, -1.0);
        }
        if (p.relax_offset >= 0) {
            for (int i = 0; i < n; ++i) out.emplace_back(i, p.relax_offset + i, 1.0);
        }
        const Eigen::SparseMatrix<double> jac = injections_jacobian(p.model, s);
        for (int l = 0; l < jac.outerSize(); ++l) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(jac, l); it; ++it) {
                out.emplace_back(static_cast<int>(it.row()), p.dth_offset + l, it.value());
            }
        }
        const auto& a_dot = p.model.incidence.a_dot;
        for (int k = 0; k < a_dot.outerSize(); ++k) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(a_dot, k); it; ++it) {
                out.emplace_back(n + static_cast<int>(it.row()), p.theta_offset + k, it.value());
            }
        }
        for (int l = 0; l < m; ++l) out.emplace_back(n + l, p.dth_offset + l, -1.0);
        for (int r = 0; r < n_cur; ++r) {
            const auto [line, side] = p.current_rows[r];
            out.emplace_back(n + m + r, p.dth_offset + line,
                             p.model.lines[line].current_sq_d1(s[line], row_side(side)));
            out.emplace_back(n + m + r, p.current_slack_offset + r, 1.0);
        }
    };
    spec.constraint_hessian = [&p, n, m, n_cur](const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                                SparseTriplets& out) {
        const Eigen::VectorXd s = x.segment(p.dth_offset, m);
        Eigen::VectorXd diag = injections_hessian_diag(p.model, s, y.head(n));
        for (int r = 0; r < n_cur; ++r) {
            const auto [line, side] = p.current_rows[r];
            diag[line] += y[n + m + r] * p.model.lines[line].current_sq_d2(s[line], row_side(side));
        }
        for (int l = 0; l < m; ++l) {
            if (diag[l] != 0.0) out.emplace_back(p.dth_offset + l, p.dth_offset + l, diag[l]);
        }
    };
    return spec;
}

Eigen::VectorXd initial_point(const DispatchProblem& p, const DispatchInit* warm) {
    const int n = p.network.num_buses();
    const int m = p.network.num_lines();
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(p.num_vars);

    if (warm && warm->gen_dispatch.size() == static_cast<int>(p.network.generators.size()) &&
        warm->theta_dot.size() == n - 1) {
        for (const auto& block : p.gen_blocks) {
            if (block.num_vars == 0) continue;
            const double target = warm->gen_dispatch[block.gen_index];
            if (block.is_quadratic) {
                x0[block.first_var] = target;
            } else {
                double rest = target - block.p_base;
                for (int k = 0; k < block.num_vars; ++k) {
                    const double q = std::clamp(rest, 0.0, block.seg_width[k]);
                    x0[block.first_var + k] = q;
                    rest -= q;
                }
            }
        }
        x0.segment(p.theta_offset, n - 1) = warm->theta_dot;
        x0.segment(p.dth_offset, m) = p.model.incidence.a_dot * warm->theta_dot;
    } else {
        // Cold start: reference-flat angles with a demand-proportional share
        // projected onto each generator's box.
        double lo_total = 0.0, hi_total = 0.0;
        for (const auto& block : p.gen_blocks) {
            if (block.num_vars == 0) continue;
            if (block.is_quadratic) {
                const Generator& gen = p.network.generators[block.gen_index];
                lo_total += gen.p_min;
                hi_total += gen.p_max;
            } else {
                for (double w : block.seg_width) hi_total += w;
            }
        }
        const double want = p.demand.sum() - p.fixed_injection.sum();
        const double ratio =
            hi_total > lo_total ? std::clamp((want - lo_total) / (hi_total - lo_total), 0.0, 1.0)
                                : 0.0;
        for (const auto& block : p.gen_blocks) {
            if (block.num_vars == 0) continue;
            if (block.is_quadratic) {
                const Generator& gen = p.network.generators[block.gen_index];
                x0[block.first_var] = gen.p_min + ratio * (gen.p_max - gen.p_min);
            } else {
                for (int k = 0; k < block.num_vars; ++k) {
                    x0[block.first_var + k] = ratio * block.seg_width[k];
                }
            }
        }
    }

    // Clamp angle differences into their windows (the solver pushes strictly
    // inside afterwards).
    for (int l = 0; l < m; ++l) {
        const auto& w = p.line_constraints[l].bounds.window;
        x0[p.dth_offset + l] = std::clamp(x0[p.dth_offset + l], w.lower, w.upper);
    }
    if (p.relax_offset >= 0) {
        // start the over-satisfaction slacks at zero; interior push lifts them
    }
    if (p.current_slack_offset >= 0) {
        const Eigen::VectorXd s = x0.segment(p.dth_offset, m);
        for (std::size_t r = 0; r < p.current_rows.size(); ++r) {
            const auto [line, side] = p.current_rows[r];
            const double residual =
                row_limit(p, line, static_cast<int>(side)) -
                p.model.lines[line].current_sq(s[line], row_side(static_cast<int>(side)));
            x0[p.current_slack_offset + static_cast<int>(r)] = std::max(residual, 0.0);
        }
    }
    return x0;
}

}  // namespace

DispatchSolution solve_dispatch(const DispatchProblem& problem, const DispatchInit* warm) {
    const int n = problem.network.num_buses();
    const int m = problem.network.num_lines();
    const NlpSpec spec = build_spec(problem);
    const Eigen::VectorXd x0 = initial_point(problem, warm);
    const NlpResult nlp = solve_nlp(spec, x0, problem.options.solver);

    DispatchSolution sol;
    sol.status = nlp.status;
    sol.objective = nlp.objective;
    sol.residuals = nlp.residuals;
    sol.iterations = nlp.iterations;
    sol.wall_time_s = nlp.wall_time_s;
    sol.message = nlp.message;

    sol.gen_dispatch.resize(problem.network.generators.size());
    for (const auto& block : problem.gen_blocks) {
        double pg = block.p_base;
        for (int k = 0; k < block.num_vars; ++k) pg += nlp.x[block.first_var + k];
        sol.gen_dispatch[block.gen_index] = pg;
    }
    sol.bus_injection = problem.fixed_injection;
    for (const auto& block : problem.gen_blocks) {
        const int bus = problem.network.bus_index(
            problem.network.generators[block.gen_index].bus);
        for (int k = 0; k < block.num_vars; ++k) sol.bus_injection[bus] += nlp.x[block.first_var + k];
    }

    const int ref_index = problem.model.incidence.reference_index;
    sol.theta = Eigen::VectorXd::Zero(n);
    int k = 0;
    for (int i = 0; i < n; ++i) {
        if (i != ref_index) sol.theta[i] = nlp.x[problem.theta_offset + k++];
    }
    sol.delta_theta = nlp.x.segment(problem.dth_offset, m);
    sol.lmp = nlp.eq_duals.head(n);
    sol.window_dual_lower = nlp.lower_duals.segment(problem.dth_offset, m);
    sol.window_dual_upper = nlp.upper_duals.segment(problem.dth_offset, m);

    // Strict-complementarity heuristic: a bus price is marked degenerate when
    // some incident box constraint has both its slack and its multiplier near
    // zero, the classic sign of a binding-constraint tie.
    sol.lmp_degenerate.assign(n, false);
    // At KKT tolerance tol, a degenerate pair splits complementarity roughly
    // as sqrt(mu_final) on each side, so the cutoffs scale with sqrt(tol); the
    // factor of ten absorbs the curvature-dependent constant in the split.
    const double eps_slack = 10.0 * std::sqrt(problem.options.solver.tol_kkt);
    const double eps_dual =
        eps_slack * std::max(1.0, sol.lmp.size() ? sol.lmp.cwiseAbs().maxCoeff() : 1.0);
    auto check_var = [&](int var, auto mark) {
        const double lo = spec.lower[var], up = spec.upper[var];
        const double v = nlp.x[var];
        if (std::isfinite(lo) && v - lo < eps_slack && nlp.lower_duals[var] < eps_dual) mark();
        if (std::isfinite(up) && up - v < eps_slack && nlp.upper_duals[var] < eps_dual) mark();
    };
    for (const auto& block : problem.gen_blocks) {
        const int bus = problem.network.bus_index(
            problem.network.generators[block.gen_index].bus);
        for (int kv = 0; kv < block.num_vars; ++kv) {
            check_var(block.first_var + kv, [&] { sol.lmp_degenerate[bus] = true; });
        }
    }
    for (int l = 0; l < m; ++l) {
        const auto [from, to] = problem.model.endpoints[l];
        check_var(problem.dth_offset + l, [&] {
            sol.lmp_degenerate[from] = true;
            sol.lmp_degenerate[to] = true;
        });
    }
    return sol;
}

double total_cost(const Network& network, const Eigen::VectorXd& gen_dispatch) {
    if (gen_dispatch.size() != static_cast<int>(network.generators.size())) {
        throw Error(ErrorCode::DimensionMismatch, "one dispatch value per generator expected");
    }
    double total = 0.0;
    for (std::size_t g = 0; g < network.generators.size(); ++g) {
        total += cost_value(network.generators[g].cost, gen_dispatch[g]);
    }
    return total;
}

double lmp_finite_difference(const DispatchProblem& problem, const DispatchSolution& solution,
                             int bus_id, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    const int bus = problem.network.bus_index(bus_id);
    const int ref_index = problem.model.incidence.reference_index;
    DispatchInit warm{solution.gen_dispatch, reduced_theta(solution.theta, ref_index)};

    auto perturbed_cost = [&](double delta) {
        DispatchProblem q = problem;
        q.demand[bus] += delta;
        const DispatchSolution s = solve_dispatch(q, &warm);
        if (s.status != SolveStatus::Converged) {
            throw std::runtime_error("perturbed dispatch did not converge: " + s.message);
        }
        return s.objective;
    };
    return (perturbed_cost(step) - perturbed_cost(-step)) / (2.0 * step);
}

ReferenceInvarianceReport verify_reference_invariance(const Network& network,
                                                      const DispatchOptions& options,
                                                      int reference_a, int reference_b) {
    DispatchOptions oa = options;
    oa.reference_bus = reference_a;
    DispatchOptions ob = options;
    ob.reference_bus = reference_b;
    const DispatchProblem pa = assemble(network, oa);
    const DispatchProblem pb = assemble(network, ob);
    const DispatchSolution sa = solve_dispatch(pa);
    const DispatchSolution sb = solve_dispatch(pb);
    if (sa.status != SolveStatus::Converged || sb.status != SolveStatus::Converged) {
        throw std::runtime_error("reference-invariance check requires both solves to converge");
    }

    ReferenceInvarianceReport rep;
    rep.objective_rel_delta =
        std::abs(sa.objective - sb.objective) / std::max(1.0, std::abs(sa.objective));
    rep.dispatch_delta = (sa.bus_injection - sb.bus_injection).cwiseAbs().maxCoeff();
    rep.lmp_delta = (sa.lmp - sb.lmp).cwiseAbs().maxCoeff();

    // Map run a's angles to reference b by shifting; differences are invariant.
    const int idx_b = network.bus_index(reference_b);
    const Eigen::VectorXd theta_mapped = sa.theta.array() - sa.theta[idx_b];
    const Eigen::VectorXd dth_mapped = pb.model.incidence.a * theta_mapped;
    rep.mapped_angle_residual = (dth_mapped - sa.delta_theta).cwiseAbs().maxCoeff();
    const Eigen::VectorXd balance =
        injections(pb.model, dth_mapped) - (sa.bus_injection - pa.demand);
    rep.mapped_balance_residual = balance.cwiseAbs().maxCoeff();
    return rep;
}

}  // namespace edml
