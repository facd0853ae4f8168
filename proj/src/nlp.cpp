#include "edml/nlp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include <Eigen/SparseCholesky>

namespace edml {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Interior push margins and primal-dual safeguards (standard values).
constexpr double kPushRel = 1e-2;        // kappa_1: margin relative to bound size
constexpr double kPushWidth = 1e-2;      // kappa_2: margin relative to interval width
constexpr double kSigmaMax = 1e10;       // kappa_Sigma: bound-dual clamp factor
constexpr double kMuLinear = 10.0;       // kappa_eps: barrier-phase tolerance factor
constexpr double kResidualSmax = 100.0;  // s_max in the scaled KKT error

// Inertia-correction schedule.
constexpr double kRegMin = 1e-20;
constexpr double kRegInit = 1e-4;
constexpr double kRegMax = 1e40;
constexpr double kRegGrowFirst = 100.0;
constexpr double kRegGrow = 8.0;
constexpr double kRegShrink = 1.0 / 3.0;
constexpr double kRegConstraint = 1e-8;  // kappa_c for dual regularization

// The KKT matrix is factored without pivoting, which is only stable once the
// matrix is quasidefinite. A static +/- epsilon on the two diagonal blocks
// guarantees that; iterative refinement against the unshifted matrix then
// removes the perturbation from the step again.
constexpr double kStaticReg = 1e-8;
constexpr int kMaxRefine = 10;
constexpr double kRefineTarget = 1e-10;  // stop refining below this
constexpr double kRefineAccept = 1e-7;   // escalate regularization above this

struct Workspace {
    int n = 0;
    int me = 0;
    std::vector<int> finite_lower;
    std::vector<int> finite_upper;
};

double safe_inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

const char* solve_status_name(SolveStatus status) {
    switch (status) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::MaxIterations: return "max_iterations";
        case SolveStatus::SingularKkt: return "singular_kkt";
        case SolveStatus::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
}

double KktResiduals::max() const {
    return std::max({stationarity, feasibility, complementarity});
}

NlpResult solve_nlp(const NlpSpec& spec, const Eigen::VectorXd& x0, const SolverOptions& options) {
    const auto t_start = std::chrono::steady_clock::now();

    const int n = spec.num_vars;
    const int me = spec.num_constraints;
    if (n <= 0) throw Error(ErrorCode::DimensionMismatch, "num_vars must be positive");
    if (me < 0) throw Error(ErrorCode::DimensionMismatch, "num_constraints must be non-negative");
    if (spec.lower.size() != n || spec.upper.size() != n || x0.size() != n) {
        throw Error(ErrorCode::DimensionMismatch, "bounds and x0 must have num_vars entries");
    }
    if (!spec.objective || !spec.gradient) {
        throw std::invalid_argument("objective and gradient callbacks are required");
    }
    if (me > 0 && (!spec.constraints || !spec.constraint_jacobian)) {
        throw std::invalid_argument("constraint callbacks are required when num_constraints > 0");
    }

    Workspace ws;
    ws.n = n;
    ws.me = me;
    for (int i = 0; i < n; ++i) {
        const double l = spec.lower[i];
        const double u = spec.upper[i];
        if (std::isnan(l) || std::isnan(u) || l > u) {
            throw Error(ErrorCode::DimensionMismatch, "invalid bounds at variable " + std::to_string(i));
        }
        if (l == u) {
            throw std::invalid_argument(
                "fixed variables are not supported; eliminate variable " + std::to_string(i));
        }
        if (l > -kInf) ws.finite_lower.push_back(i);
        if (u < kInf) ws.finite_upper.push_back(i);
    }
    const int nb = static_cast<int>(ws.finite_lower.size() + ws.finite_upper.size());

    auto log = [&](const std::string& s) {
        if (!options.log_iterations) return;
        if (options.log_sink) options.log_sink(s);
        else std::cerr << s << "\n";
    };

    NlpResult result;
    result.constraint_scales = Eigen::VectorXd::Ones(me);

    // --- gradient-based scaling fixed at x0 -------------------------------
    Eigen::VectorXd x = x0;
    for (int i = 0; i < n; ++i) {
        const double l = spec.lower[i];
        const double u = spec.upper[i];
        if (l > -kInf && u < kInf) {
            const double pl = std::min(kPushRel * std::max(1.0, std::abs(l)), kPushWidth * (u - l));
            const double pu = std::min(kPushRel * std::max(1.0, std::abs(u)), kPushWidth * (u - l));
            x[i] = std::clamp(x[i], l + pl, u - pu);
        } else if (l > -kInf) {
            x[i] = std::max(x[i], l + kPushRel * std::max(1.0, std::abs(l)));
        } else if (u < kInf) {
            x[i] = std::min(x[i], u - kPushRel * std::max(1.0, std::abs(u)));
        }
    }

    const Eigen::VectorXd g0 = spec.gradient(x);
    if (!all_finite(g0)) {
        result.status = SolveStatus::NumericalFailure;
        result.message = "gradient not finite at the initial point";
        result.x = x;
        return result;
    }
    const double s_f = 1.0 / std::max(1.0, safe_inf_norm(g0));
    Eigen::VectorXd s_c = Eigen::VectorXd::Ones(me);
    if (me > 0) {
        SparseTriplets jt;
        spec.constraint_jacobian(x, jt);
        Eigen::VectorXd row_norm = Eigen::VectorXd::Zero(me);
        for (const auto& t : jt) {
            row_norm[t.row()] = std::max(row_norm[t.row()], std::abs(t.value()));
        }
        for (int k = 0; k < me; ++k) s_c[k] = 1.0 / std::max(1.0, row_norm[k]);
    }
    result.objective_scale = s_f;
    result.constraint_scales = s_c;

    // Scaled evaluators.
    auto eval_f = [&](const Eigen::VectorXd& xx) { return s_f * spec.objective(xx); };
    auto eval_g = [&](const Eigen::VectorXd& xx) -> Eigen::VectorXd { return s_f * spec.gradient(xx); };
    auto eval_c = [&](const Eigen::VectorXd& xx) -> Eigen::VectorXd {
        if (me == 0) return Eigen::VectorXd(0);
        return s_c.cwiseProduct(spec.constraints(xx));
    };

    // --- primal-dual state -----------------------------------------------
    Eigen::VectorXd y = Eigen::VectorXd::Zero(me);
    Eigen::VectorXd zl = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd zu = Eigen::VectorXd::Zero(n);
    for (int i : ws.finite_lower) zl[i] = 1.0;
    for (int i : ws.finite_upper) zu[i] = 1.0;

    double mu = options.mu_init;
    const double mu_min = options.tol_kkt / 20.0;
    double nu = 1.0;          // merit penalty, non-decreasing
    double delta_last = 0.0;  // last successful primal regularization

    Eigen::VectorXd c = eval_c(x);
    Eigen::VectorXd g = eval_g(x);

    auto slack_l = [&](const Eigen::VectorXd& xx, int i) { return xx[i] - spec.lower[i]; };
    auto slack_u = [&](const Eigen::VectorXd& xx, int i) { return spec.upper[i] - xx[i]; };

    // Scaled KKT error with the dual/complementarity denominators of the
    // standard primal-dual termination test.
    auto kkt_error = [&](double mu_target) -> KktResiduals {
        Eigen::VectorXd rd = g - zl + zu;
        if (me > 0) {
            SparseTriplets jt;
            spec.constraint_jacobian(x, jt);
            for (const auto& t : jt) rd[t.col()] += s_c[t.row()] * t.value() * y[t.row()];
        }
        double comp = 0.0;
        for (int i : ws.finite_lower) comp = std::max(comp, std::abs(slack_l(x, i) * zl[i] - mu_target));
        for (int i : ws.finite_upper) comp = std::max(comp, std::abs(slack_u(x, i) * zu[i] - mu_target));
        const double dual_mass = y.lpNorm<1>() + zl.lpNorm<1>() + zu.lpNorm<1>();
        const double denom = std::max(1, me + nb);
        const double s_d = std::max(kResidualSmax, dual_mass / denom) / kResidualSmax;
        const double s_comp = std::max(kResidualSmax, (zl.lpNorm<1>() + zu.lpNorm<1>()) / std::max(1, nb)) /
                              kResidualSmax;
        KktResiduals r;
        r.stationarity = safe_inf_norm(rd) / s_d;
        r.feasibility = safe_inf_norm(c);
        r.complementarity = nb > 0 ? comp / s_comp : 0.0;
        return r;
    };

    // Barrier objective and its gradient contribution.
    auto barrier_value = [&](const Eigen::VectorXd& xx, double f_val) {
        double bv = f_val;
        for (int i : ws.finite_lower) {
            const double s = slack_l(xx, i);
            if (s <= 0.0) return std::numeric_limits<double>::quiet_NaN();
            bv -= mu * std::log(s);
        }
        for (int i : ws.finite_upper) {
            const double s = slack_u(xx, i);
            if (s <= 0.0) return std::numeric_limits<double>::quiet_NaN();
            bv -= mu * std::log(s);
        }
        return bv;
    };
    auto merit = [&](const Eigen::VectorXd& xx, double f_val, const Eigen::VectorXd& c_val) {
        return barrier_value(xx, f_val) + nu * (me > 0 ? c_val.lpNorm<1>() : 0.0);
    };

    int iter = 0;
    std::string failure_message;
    SolveStatus status = SolveStatus::MaxIterations;

    for (iter = 0; iter < options.max_iter; ++iter) {
        if (!all_finite(x) || !all_finite(c) || !all_finite(g)) {
            status = SolveStatus::NumericalFailure;
            failure_message = "non-finite iterate";
            break;
        }

        const KktResiduals err0 = kkt_error(0.0);
        result.residuals = err0;
        if (err0.max() <= options.tol_kkt) {
            status = SolveStatus::Converged;
            break;
        }
        // Monotone barrier reduction once the barrier subproblem is solved.
        while (mu > mu_min && kkt_error(mu).max() <= kMuLinear * mu) {
            mu = std::max(mu_min, options.mu_shrink * mu);
        }

        // --- assemble the primal-dual KKT system --------------------------
        // [ W + Sigma + dx*I   J^T ] [dx]   [ -(grad B + J^T y) ]
        // [ J                 -dc*I ] [dy] = [ -c               ]
        Eigen::VectorXd y_orig(me);
        for (int k = 0; k < me; ++k) y_orig[k] = y[k] * s_c[k] / s_f;

        SparseTriplets base;
        if (spec.objective_hessian) {
            SparseTriplets ht;
            spec.objective_hessian(x, ht);
            for (const auto& t : ht) base.emplace_back(t.row(), t.col(), s_f * t.value());
        }
        if (me > 0 && spec.constraint_hessian) {
            SparseTriplets ht;
            spec.constraint_hessian(x, y_orig, ht);
            for (const auto& t : ht) base.emplace_back(t.row(), t.col(), s_f * t.value());
        }
        Eigen::VectorXd sigma = Eigen::VectorXd::Zero(n);
        for (int i : ws.finite_lower) sigma[i] += zl[i] / slack_l(x, i);
        for (int i : ws.finite_upper) sigma[i] += zu[i] / slack_u(x, i);
        for (int i = 0; i < n; ++i) base.emplace_back(i, i, sigma[i]);

        SparseTriplets jt;
        if (me > 0) spec.constraint_jacobian(x, jt);
        for (const auto& t : jt) base.emplace_back(n + t.row(), t.col(), s_c[t.row()] * t.value());

        // Barrier gradient (dual variables eliminated).
        Eigen::VectorXd grad_barrier = g;
        for (int i : ws.finite_lower) grad_barrier[i] -= mu / slack_l(x, i);
        for (int i : ws.finite_upper) grad_barrier[i] += mu / slack_u(x, i);

        Eigen::VectorXd r_aug = grad_barrier;
        for (const auto& t : jt) r_aug[t.col()] += s_c[t.row()] * t.value() * y[t.row()];

        Eigen::VectorXd rhs(n + me);
        rhs.head(n) = -r_aug;
        rhs.tail(me) = -c;

        // --- inertia-corrected factorization ------------------------------
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;
        double delta_x = 0.0;
        double delta_c = 0.0;
        Eigen::VectorXd step(n + me);
        bool factored = false;
        int tries = 0;
        while (tries++ < 60) {
            SparseTriplets trips = base;
            for (int i = 0; i < n; ++i) trips.emplace_back(i, i, delta_x + kStaticReg);
            for (int k = 0; k < me; ++k) trips.emplace_back(n + k, n + k, -(delta_c + kStaticReg));
            Eigen::SparseMatrix<double> kkt(n + me, n + me);
            kkt.setFromTriplets(trips.begin(), trips.end());
            ldlt.compute(kkt);

            bool singular = ldlt.info() != Eigen::Success;
            int n_pos = 0, n_neg = 0;
            if (!singular) {
                const auto& d = ldlt.vectorD();
                for (int i = 0; i < d.size(); ++i) {
                    const double di = d[i];
                    if (!std::isfinite(di) || di == 0.0) {
                        singular = true;
                        break;
                    }
                    (di > 0.0 ? n_pos : n_neg)++;
                }
            }
            const bool bad_inertia = !singular && (n_pos != n || n_neg != me);

            if (!singular && !bad_inertia) {
                // Solve against the intended (delta-corrected but unshifted)
                // matrix; refinement removes the static epsilon. Failure to
                // refine means the unshifted matrix is effectively singular,
                // which escalates the regularization like a singular factor.
                SparseTriplets target = base;
                if (delta_x != 0.0) {
                    for (int i = 0; i < n; ++i) target.emplace_back(i, i, delta_x);
                }
                if (delta_c != 0.0) {
                    for (int k = 0; k < me; ++k) target.emplace_back(n + k, n + k, -delta_c);
                }
                Eigen::SparseMatrix<double> kkt_target(n + me, n + me);
                kkt_target.setFromTriplets(target.begin(), target.end());
                const double rhs_norm = std::max(rhs.norm(), 1e-300);
                step = ldlt.solve(rhs);
                double rel = std::numeric_limits<double>::infinity();
                for (int r = 0; r <= kMaxRefine && all_finite(step); ++r) {
                    const Eigen::VectorXd resid =
                        rhs - kkt_target.selfadjointView<Eigen::Lower>() * step;
                    rel = resid.norm() / rhs_norm;
                    if (rel <= kRefineTarget || r == kMaxRefine) break;
                    step += ldlt.solve(resid);
                }
                if (all_finite(step) && rel <= kRefineAccept) {
                    factored = true;
                    break;
                }
                singular = true;
            }

            if (singular && delta_c == 0.0) {
                delta_c = kRegConstraint * std::pow(std::max(mu, 1e-20), 0.25);
            }
            if (delta_x == 0.0) {
                delta_x = delta_last == 0.0 ? kRegInit : std::max(kRegMin, kRegShrink * delta_last);
            } else {
                delta_x *= delta_last == 0.0 ? kRegGrowFirst : kRegGrow;
            }
            if (delta_x > kRegMax) break;
        }
        if (!factored) {
            status = SolveStatus::SingularKkt;
            failure_message = "inertia correction exhausted";
            break;
        }
        if (delta_x > 0.0) delta_last = delta_x;
        const Eigen::VectorXd dx = step.head(n);
        const Eigen::VectorXd dy = step.tail(me);

        Eigen::VectorXd dzl = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd dzu = Eigen::VectorXd::Zero(n);
        for (int i : ws.finite_lower) {
            const double s = slack_l(x, i);
            dzl[i] = mu / s - zl[i] - zl[i] / s * dx[i];
        }
        for (int i : ws.finite_upper) {
            const double s = slack_u(x, i);
            dzu[i] = mu / s - zu[i] + zu[i] / s * dx[i];
        }

        // --- fraction to the boundary -------------------------------------
        const double tau = options.boundary_frac;
        double alpha_max = 1.0;
        for (int i : ws.finite_lower) {
            if (dx[i] < 0.0) alpha_max = std::min(alpha_max, -tau * slack_l(x, i) / dx[i]);
        }
        for (int i : ws.finite_upper) {
            if (dx[i] > 0.0) alpha_max = std::min(alpha_max, tau * slack_u(x, i) / dx[i]);
        }
        double alpha_z = 1.0;
        for (int i : ws.finite_lower) {
            if (dzl[i] < 0.0) alpha_z = std::min(alpha_z, -tau * zl[i] / dzl[i]);
        }
        for (int i : ws.finite_upper) {
            if (dzu[i] < 0.0) alpha_z = std::min(alpha_z, -tau * zu[i] / dzu[i]);
        }

        // --- merit line search ---------------------------------------------
        // dx' W dx recovered from the solved system avoids forming W again:
        // (W + Sigma + dx I) dx = -r_aug - J^T dy.
        Eigen::VectorXd wdx = -r_aug;
        for (const auto& t : jt) wdx[t.col()] -= s_c[t.row()] * t.value() * dy[t.row()];
        const double quad = dx.dot(wdx);
        const double sigma_quad = quad > 0.0 ? 0.5 * quad : 0.0;

        Eigen::VectorXd dB = grad_barrier;
        const double dir_deriv_barrier = dB.dot(dx);
        const double c_norm = me > 0 ? c.lpNorm<1>() : 0.0;
        if (c_norm > 1e-14) {
            const double nu_trial = (dir_deriv_barrier + sigma_quad) / (0.9 * c_norm);
            if (nu_trial > nu) nu = 1.05 * nu_trial;
        }
        const double f_cur = eval_f(x);
        const double phi0 = merit(x, f_cur, c);
        const double dphi = dir_deriv_barrier - nu * c_norm;

        // Near the optimum the search direction is dominated by the dual
        // correction; the merit change along it sits below the rounding noise
        // of phi, so the Armijo test gets an absolute noise allowance. Without
        // it the multipliers freeze one rounding error short of tolerance.
        const double merit_noise =
            100.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(phi0));
        double alpha = alpha_max;
        bool accepted = false;
        Eigen::VectorXd x_new, c_new;
        double f_new = 0.0;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + alpha * dx;
            f_new = eval_f(x_new);
            c_new = eval_c(x_new);
            const double phi_new = merit(x_new, f_new, c_new);
            const bool sufficient =
                dphi < 0.0 ? phi_new <= phi0 + 1e-4 * alpha * dphi + merit_noise
                           : phi_new <= phi0 + 1e-12 * (1.0 + std::abs(phi0));
            if (std::isfinite(phi_new) && sufficient) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            status = SolveStatus::NumericalFailure;
            failure_message = "line search failed at iteration " + std::to_string(iter);
            break;
        }

        x = x_new;
        c = c_new;
        g = eval_g(x);
        // All duals advance with the dual step length. Tying y to the primal
        // alpha deadlocks on degenerate corners: the merit function can pin the
        // primal step near zero while the bound duals keep moving, and the
        // equality duals must follow them to keep stationarity attainable.
        y += alpha_z * dy;
        zl += alpha_z * dzl;
        zu += alpha_z * dzu;

        // Primal-dual safeguard: keep bound duals within a factor of the
        // barrier center so Sigma stays consistent with mu.
        for (int i : ws.finite_lower) {
            const double s = slack_l(x, i);
            zl[i] = std::clamp(zl[i], mu / (kSigmaMax * s), kSigmaMax * mu / s);
        }
        for (int i : ws.finite_upper) {
            const double s = slack_u(x, i);
            zu[i] = std::clamp(zu[i], mu / (kSigmaMax * s), kSigmaMax * mu / s);
        }

        if (options.log_iterations) {
            std::ostringstream os;
            os << "iter=" << iter << " mu=" << mu << " stat=" << err0.stationarity
               << " feas=" << err0.feasibility << " comp=" << err0.complementarity
               << " alpha=" << alpha << " alpha_z=" << alpha_z << " reg=" << delta_x;
            log(os.str());
        }
    }

    if (status == SolveStatus::MaxIterations) {
        result.residuals = kkt_error(0.0);
        failure_message = "iteration limit reached";
    } else if (status == SolveStatus::Converged) {
        // residuals already stored at the test point
    } else {
        result.residuals = kkt_error(0.0);
    }

    result.status = status;
    result.x = x;
    result.eq_duals.resize(me);
    for (int k = 0; k < me; ++k) result.eq_duals[k] = y[k] * s_c[k] / s_f;
    result.lower_duals = zl / s_f;
    result.upper_duals = zu / s_f;
    result.objective = spec.objective(x);
    result.iterations = iter;
    result.message = failure_message;
    result.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

}  // namespace edml
