#include "hd/deviations.hpp"

#include "hd/norms.hpp"
#include "hd/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace hd {

namespace {
const PhysicalParams& unit_params() {
    static const PhysicalParams p{1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0};
    return p;
}
} // namespace

double dot_V(const State& a, const State& b) {
    return dot(a, b) + dirichlet_form(a, b, unit_params());
}
double norm_V(const State& a) { return std::sqrt(dot_V(a, a)); }
State riesz_V(const State& a) { return a + apply_A(a, unit_params()); }

// ---- linearized flow ---------------------------------------------------------

State LinearizedFlow::endpoint(const ControlPath& h) const {
    const int n = cfg.n_steps();
    const double dt = cfg.dt_actual();
    const auto& g = base->states.front().grid();
    State du(g);
    for (int s = 0; s < n; ++s) {
        const double t = s * dt;
        const State us = base->at_step(s);
        State drift(g);
        if (cfg.terms.advection) drift = apply_B(du, us) + apply_B(us, du);
        if (cfg.terms.pressure) drift = drift + apply_Apr(du, *params);
        if (cfg.terms.coriolis) drift = drift + apply_E(du, *params);
        State rhs = du - dt * drift;
        if (jac_control) {
            const Vec hv = jac_control->at(t);
            if (!hv.isZero(0.0)) {
                State jac(g);
                for (int k = 0; k < noise->modes(); ++k)
                    if (hv(k) != 0.0) axpy(hv(k), noise->mode_jacobian(k, us, du), jac);
                axpy(dt, jac, rhs);
            }
        }
        const Vec hv = h.at(t);
        if (!hv.isZero(0.0)) axpy(dt, sigma_apply(*noise, us, hv), rhs);
        du = solve_A_implicit(rhs, *params, dt, 1.0);
    }
    return du;
}

Mat LinearizedFlow::adjoint(const State& w, int cells) const {
    const int n = cfg.n_steps();
    const double dt = cfg.dt_actual();
    const auto& g = base->states.front().grid();
    const int m = noise->modes();
    Mat grad = Mat::Zero(m, cells);
    State lam = w;
    for (int s = n - 1; s >= 0; --s) {
        const double t = s * dt;
        const State us = base->at_step(s);
        const State mu = solve_A_implicit(lam, *params, dt, 1.0);
        const int cell = std::min(static_cast<int>(t / cfg.t_end * cells), cells - 1);
        grad.col(cell) += dt * sigma_adjoint(*noise, us, mu);

        State adj(g);
        if (cfg.terms.advection) {
            AdvectionContext ctx(us.v);
            adj = adjB_advect(ctx, mu) + adjB_transport(us, mu);
        }
        if (cfg.terms.pressure) adj = adj + adj_Apr(mu, *params);
        if (cfg.terms.coriolis) adj = adj + adj_E(mu, *params);
        lam = mu - dt * adj;
        if (jac_control) {
            const Vec hv = jac_control->at(t);
            if (!hv.isZero(0.0)) axpy(dt, noise->jacobian_adjoint(us, hv, mu), lam);
        }
    }
    return grad;
}

// ---- quadratic subproblem ----------------------------------------------------

namespace {

double cdot(const Mat& a, const Mat& b, double cell_dt) {
    return cell_dt * a.cwiseProduct(b).sum();
}

// CG on (I + rho K* G K) h = rhs in the dt-weighted control space
struct CgResult {
    Mat h;
    int iters = 0;
    bool converged = false;
};

CgResult solve_penalized_normal(const LinearizedFlow& flow, const State& target_w,
                                double rho, int cells, double tol, int max_iter) {
    const int m = flow.noise->modes();
    const double cell_dt = flow.cfg.t_end / cells;
    auto apply_N = [&](const Mat& x) {
        ControlPath cp(flow.cfg.t_end, m, cells);
        cp.coeffs = x;
        const State e = flow.endpoint(cp);
        const Mat back = flow.adjoint(riesz_V(e), cells) / cell_dt;
        return Mat(x + rho * back);
    };
    // rhs = rho K^sharp G target
    const Mat rhs = rho * flow.adjoint(riesz_V(target_w), cells) / cell_dt;

    CgResult res;
    res.h = Mat::Zero(m, cells);
    Mat r = rhs;
    Mat p = r;
    double rs = cdot(r, r, cell_dt);
    const double rs0 = rs;
    if (rs0 == 0.0) {
        res.converged = true;
        return res;
    }
    for (int it = 0; it < max_iter; ++it) {
        const Mat np = apply_N(p);
        const double alpha = rs / cdot(p, np, cell_dt);
        res.h += alpha * p;
        r -= alpha * np;
        const double rs_new = cdot(r, r, cell_dt);
        res.iters = it + 1;
        if (rs_new <= tol * tol * rs0) {
            res.converged = true;
            break;
        }
        p = r + (rs_new / rs) * p;
        rs = rs_new;
    }
    return res;
}

} // namespace

// ---- MDP minimization ----------------------------------------------------------

RateReport minimize_rate_mdp(const RateProblem& prob, const Trajectory& u0_traj,
                             const PhysicalParams& p, const NoiseModel& noise,
                             const IntegratorConfig& cfg) {
    LinearizedFlow flow{&u0_traj, &p, &noise, cfg, nullptr};
    flow.cfg.store_stride = 0;
    flow.cfg.diag = DiagLevel::light;

    const CgResult cg = solve_penalized_normal(flow, prob.target, prob.penalty_rho,
                                               prob.control_cells, prob.cg_tol,
                                               prob.cg_max_iter);
    RateReport rep;
    rep.h_star = ControlPath(cfg.t_end, noise.modes(), prob.control_cells);
    rep.h_star.coeffs = cg.h;
    rep.action = rep.h_star.action();
    const State e = flow.endpoint(rep.h_star);
    rep.endpoint_residual = norm_V(e - prob.target);
    rep.iterations = cg.iters;
    rep.converged = cg.converged && rep.endpoint_residual <= prob.endpoint_tol;
    rep.objective_history = {rep.action + 0.5 * prob.penalty_rho * rep.endpoint_residual *
                                              rep.endpoint_residual};
    return rep;
}

// ---- LDP minimization ----------------------------------------------------------

namespace {

struct LdpEval {
    Trajectory traj;
    double objective = 0.0;
    double action = 0.0;
    double residual = 0.0;    // hinge distance for balls, plain distance otherwise
};

LdpEval evaluate_ldp(const RateProblem& prob, const State& u0, const PhysicalParams& p,
                     const Forcing& f, const NoiseModel& noise, const IntegratorConfig& cfg,
                     const ControlPath& h) {
    IntegratorConfig c = cfg;
    c.store_stride = 1;      // linearization needs the whole trajectory
    c.diag = DiagLevel::light;
    LdpEval ev;
    ev.traj = solve_skeleton_ldp(u0, h, p, f, noise, c);
    ev.action = h.action();
    const State diff = ev.traj.final_state() - prob.target;
    const double dist = norm_V(diff);
    ev.residual = prob.radius > 0.0 ? std::max(0.0, dist - prob.radius) : dist;
    ev.objective = ev.action + 0.5 * prob.penalty_rho * ev.residual * ev.residual;
    if (ev.traj.blew_up) ev.objective = std::numeric_limits<double>::infinity();
    return ev;
}

} // namespace

double ldp_objective(const RateProblem& prob, const State& u0, const PhysicalParams& p,
                     const Forcing& f, const NoiseModel& noise, const IntegratorConfig& cfg,
                     const ControlPath& h) {
    return evaluate_ldp(prob, u0, p, f, noise, cfg, h).objective;
}

Mat ldp_gradient(const RateProblem& prob, const State& u0, const PhysicalParams& p,
                 const Forcing& f, const NoiseModel& noise, const IntegratorConfig& cfg,
                 const ControlPath& h) {
    LdpEval ev = evaluate_ldp(prob, u0, p, f, noise, cfg, h);
    const double cell_dt = h.cell_dt();
    LinearizedFlow flow{&ev.traj, &p, &noise, cfg, &h};
    flow.cfg.store_stride = 0;
    flow.cfg.diag = DiagLevel::light;

    const State diff = ev.traj.final_state() - prob.target;
    const double dist = norm_V(diff);
    Mat grad = h.coeffs;   // action part, already the dt-weighted Riesz form
    if (prob.radius > 0.0) {
        if (dist > prob.radius && dist > 0.0) {
            const double hinge = dist - prob.radius;
            const State q = (1.0 / dist) * riesz_V(diff);
            grad += (prob.penalty_rho * hinge) * (flow.adjoint(q, h.cells()) / cell_dt);
        }
    } else {
        grad += prob.penalty_rho * (flow.adjoint(riesz_V(diff), h.cells()) / cell_dt);
    }
    return grad;
}

RateReport minimize_rate_ldp(const RateProblem& prob, const State& u0,
                             const PhysicalParams& p, const Forcing& f,
                             const NoiseModel& noise, const IntegratorConfig& cfg) {
    const int m = noise.modes();
    ControlPath h(cfg.t_end, m, prob.control_cells);
    LdpEval cur = evaluate_ldp(prob, u0, p, f, noise, cfg, h);

    RateReport rep;
    rep.objective_history.push_back(cur.objective);
    const double cell_dt = h.cell_dt();

    for (int outer = 0; outer < prob.gn_max_iter; ++outer) {
        LinearizedFlow flow{&cur.traj, &p, &noise, cfg, &h};
        flow.cfg.store_stride = 0;
        flow.cfg.diag = DiagLevel::light;

        Mat dh;
        if (prob.radius > 0.0) {
            // scalar hinge observation; the Gauss-Newton step has a closed form
            const State diff = cur.traj.final_state() - prob.target;
            const double dist = norm_V(diff);
            if (dist <= prob.radius || dist == 0.0) {
                dh = -h.coeffs;   // inside the ball: pure action descent
            } else {
                const State q = (1.0 / dist) * riesz_V(diff);
                const Mat u = flow.adjoint(q, prob.control_cells) / cell_dt;
                const double r0 = dist - prob.radius;
                const double uh = cdot(u, h.coeffs, cell_dt);
                const double uu = cdot(u, u, cell_dt);
                const double s = -(uh + prob.penalty_rho * r0 * uu) /
                                 (1.0 + prob.penalty_rho * uu);
                dh = -(h.coeffs + prob.penalty_rho * (r0 + s) * u);
            }
        } else {
            // linear-quadratic subproblem around the current trajectory:
            // min 1/2|h+dh|^2 + rho/2 |r + K dh|^2_V
            const State diff = cur.traj.final_state() - prob.target;
            auto apply_N = [&](const Mat& x) {
                ControlPath cp(cfg.t_end, m, prob.control_cells);
                cp.coeffs = x;
                const State e = flow.endpoint(cp);
                return Mat(x + prob.penalty_rho * (flow.adjoint(riesz_V(e),
                                                                prob.control_cells) /
                                                   cell_dt));
            };
            const Mat rhs = -(h.coeffs + prob.penalty_rho *
                                             (flow.adjoint(riesz_V(diff),
                                                           prob.control_cells) /
                                              cell_dt));
            Mat x = Mat::Zero(m, prob.control_cells);
            Mat r = rhs;
            Mat pd = r;
            double rs = cdot(r, r, cell_dt);
            const double rs0 = rs;
            for (int it = 0; it < prob.cg_max_iter && rs > prob.cg_tol * prob.cg_tol * rs0;
                 ++it) {
                const Mat np = apply_N(pd);
                const double alpha = rs / cdot(pd, np, cell_dt);
                x += alpha * pd;
                r -= alpha * np;
                const double rs_new = cdot(r, r, cell_dt);
                pd = r + (rs_new / rs) * pd;
                rs = rs_new;
            }
            dh = x;
        }

        // backtracking line search; a non-descending step halves until it
        // descends or the retry budget is exhausted
        double step = 1.0;
        bool accepted = false;
        for (int ls = 0; ls <= prob.line_search_retries; ++ls) {
            ControlPath trial = h;
            trial.coeffs = h.coeffs + step * dh;
            LdpEval ev = evaluate_ldp(prob, u0, p, f, noise, cfg, trial);
            if (ev.objective < cur.objective) {
                h = trial;
                cur = std::move(ev);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        rep.iterations = outer + 1;
        rep.objective_history.push_back(cur.objective);
        if (!accepted) break;
        const double rel_drop =
            std::abs(rep.objective_history[rep.objective_history.size() - 2] -
                     cur.objective) /
            std::max(1e-300, cur.objective);
        if (rel_drop < 1e-12) break;
    }

    rep.h_star = h;
    rep.action = h.action();
    rep.endpoint_residual = cur.residual;
    rep.converged = cur.residual <= prob.endpoint_tol;
    return rep;
}

// ---- Monte Carlo scaling -------------------------------------------------------

namespace {

struct Wilson {
    double lo = 0.0, hi = 0.0, center = 0.0;
};

Wilson wilson_interval(long hits, long n, double z = 1.959963984540054) {
    Wilson w;
    if (n <= 0) return w;
    const double phat = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    w.center = (phat + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    w.lo = std::max(0.0, w.center - half);
    w.hi = std::min(1.0, w.center + half);
    return w;
}

} // namespace

InterceptFit fit_eps_log_intercept(const std::vector<double>& eps,
                                   const std::vector<double>& y,
                                   const std::vector<double>& sigma_y) {
    InterceptFit out;
    const int n = static_cast<int>(eps.size());
    if (n < 3) return out;
    Mat X(n, 3);
    Vec yy(n), w(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = eps[i];
        X(i, 2) = eps[i] * std::log(eps[i]);
        yy(i) = y[i];
        w(i) = sigma_y[i] > 0.0 ? 1.0 / (sigma_y[i] * sigma_y[i]) : 1.0;
    }
    const Mat Xw = w.asDiagonal() * X;
    const Mat A = X.transpose() * Xw;
    const Eigen::LDLT<Mat> ldlt(A);
    if (ldlt.info() != Eigen::Success) return out;
    const Vec beta = ldlt.solve(X.transpose() * (w.asDiagonal() * yy));
    // variance of the intercept through the weighted normal equations
    const Mat cov = ldlt.solve(Mat::Identity(3, 3));
    out.intercept = beta(0);
    out.sigma = std::sqrt(std::max(0.0, cov(0, 0)));
    out.ok = true;
    return out;
}

McTable mc_ldp_scaling(const State& u0, const PhysicalParams& p, const Forcing& f,
                       const NoiseModel& noise, const IntegratorConfig& cfg_base,
                       const McEvent& event, const std::vector<double>& eps_list,
                       long n_paths, std::uint64_t seed, unsigned workers,
                       double i_upper) {
    McTable table;
    std::vector<double> fit_eps, fit_y, fit_sigma;
    for (std::size_t ei = 0; ei < eps_list.size(); ++ei) {
        const double eps = eps_list[ei];
        IntegratorConfig cfg = cfg_base;
        cfg.eps = eps;
        cfg.store_stride = 0;
        cfg.diag = DiagLevel::light;

        std::vector<std::uint8_t> hit(n_paths, 0), blown(n_paths, 0);
        parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t path) {
            WienerStream stream{seed, (ei << 32) + path, noise.modes()};
            Trajectory tr = solve_stochastic(u0, p, f, noise, stream, cfg);
            if (tr.blew_up) {
                blown[path] = 1;
                return;
            }
            const double dist = norm_V(tr.final_state() - event.center);
            hit[path] = dist <= event.delta ? 1 : 0;
        }, workers);

        McRow row;
        row.eps = eps;
        row.n = n_paths;
        for (long i = 0; i < n_paths; ++i) {
            row.hits += hit[i];
            row.blowups += blown[i];
        }
        row.p_hat = static_cast<double>(row.hits) / n_paths;
        const Wilson w = wilson_interval(row.hits, n_paths);
        row.p_lo = w.lo;
        row.p_hi = w.hi;
        row.eps_log_p = row.hits > 0 ? eps * std::log(row.p_hat)
                                     : -std::numeric_limits<double>::infinity();
        row.ci_lo = w.lo > 0.0 ? eps * std::log(w.lo)
                               : -std::numeric_limits<double>::infinity();
        row.ci_hi = w.hi > 0.0 ? eps * std::log(w.hi)
                               : -std::numeric_limits<double>::infinity();
        row.i_upper = i_upper;
        table.rows.push_back(row);

        if (row.hits > 0) {
            fit_eps.push_back(eps);
            fit_y.push_back(row.eps_log_p);
            const double slog =
                std::sqrt((1.0 - row.p_hat) / (row.p_hat * static_cast<double>(n_paths)));
            fit_sigma.push_back(eps * slog);
        }
    }
    const InterceptFit fit = fit_eps_log_intercept(fit_eps, fit_y, fit_sigma);
    table.intercept = fit.intercept;
    table.intercept_sigma = fit.sigma;
    table.extrapolated = fit.ok;
    return table;
}

// ---- CLT study -----------------------------------------------------------------

CltTable clt_rate_study(const State& u0, const PhysicalParams& p, const Forcing& f,
                        const NoiseModel& noise, const IntegratorConfig& cfg_base,
                        const std::vector<double>& eps_list, int n_paths,
                        std::uint64_t seed, unsigned workers) {
    IntegratorConfig det_cfg = cfg_base;
    det_cfg.eps = 0.0;
    det_cfg.store_stride = 1;
    det_cfg.diag = DiagLevel::light;
    const Trajectory u0_traj = solve_deterministic(u0, p, f, det_cfg);

    CltTable table;
    for (std::size_t ei = 0; ei < eps_list.size(); ++ei) {
        const double eps = eps_list[ei];
        IntegratorConfig cfg = cfg_base;
        cfg.eps = eps;
        cfg.lambda_rule = LambdaRule::clt;
        cfg.store_stride = 1;
        cfg.diag = DiagLevel::light;

        std::vector<double> errs(n_paths, std::numeric_limits<double>::quiet_NaN());
        std::vector<std::uint8_t> blown(n_paths, 0);
        parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t path) {
            WienerStream stream{seed, (ei << 32) + path, noise.modes()};
            Trajectory r = solve_deviation(u0, p, f, noise, stream, cfg, u0_traj,
                                           DeviationMethod::differenced);
            Trajectory uh = solve_clt_limit(u0_traj, p, noise, stream, cfg);
            if (r.blew_up || uh.blew_up) {
                blown[path] = 1;
                return;
            }
            double sup_v = 0.0;
            double int_da = 0.0;
            for (std::size_t i = 0; i < r.states.size(); ++i) {
                const State y = r.states[i] - uh.states[i];
                sup_v = std::max(sup_v, norm_V(y));
                const State ay = apply_A(y, p);
                const double w = (i == 0 || i + 1 == r.states.size()) ? 0.5 : 1.0;
                int_da += w * r.dt * dot(ay, ay);
            }
            errs[path] = sup_v + std::sqrt(int_da);
        }, workers);

        CltRow row;
        row.eps = eps;
        std::vector<double> ok;
        for (int i = 0; i < n_paths; ++i) {
            if (blown[i]) {
                ++row.blowups;
            } else {
                ok.push_back(errs[i]);
            }
        }
        row.n_ok = static_cast<long>(ok.size());
        if (!ok.empty()) {
            std::sort(ok.begin(), ok.end());
            row.median_err = ok[ok.size() / 2];
        }
        table.rows.push_back(row);
    }

    // least-squares slope in log-log coordinates
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& r : table.rows) {
        if (r.median_err > 0.0) {
            const double x = std::log(r.eps);
            const double y = std::log(r.median_err);
            sx += x; sy += y; sxx += x * x; sxy += x * y;
            ++n;
        }
    }
    if (n >= 2) table.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return table;
}

} // namespace hd
