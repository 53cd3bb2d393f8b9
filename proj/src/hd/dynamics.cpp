#include "hd/dynamics.hpp"

#include "hd/norms.hpp"

#include <cmath>
#include <stdexcept>

namespace hd {

double IntegratorConfig::lambda() const {
    switch (lambda_rule) {
        case LambdaRule::ldp: return 1.0 / std::sqrt(eps);
        case LambdaRule::clt: return 1.0;
        case LambdaRule::power: return std::pow(eps, -lambda_power);
    }
    return 1.0;
}

void IntegratorConfig::validate() const {
    if (!(dt > 0.0) || !(t_end > 0.0))
        throw std::invalid_argument("integrator: dt and t_end must be positive");
    if (eps < 0.0) throw std::invalid_argument("integrator: eps must be >= 0");
    if (lambda_rule == LambdaRule::power &&
        !(lambda_power > 0.0 && lambda_power < 0.5))
        throw std::invalid_argument(
            "integrator: lambda_power must lie in (0, 1/2) for the MDP regime");
}

State Trajectory::at_step(int n) const {
    const double t = n * dt;
    if (stride >= 1 && n % stride == 0) {
        const std::size_t idx = static_cast<std::size_t>(n / stride);
        if (idx < states.size()) return states[idx];
    }
    return at_time(t);
}

State Trajectory::at_time(double t) const {
    if (times.empty()) throw std::runtime_error("trajectory: empty");
    if (t <= times.front()) return states.front();
    if (t >= times.back()) return states.back();
    std::size_t hi = 1;
    while (hi < times.size() && times[hi] < t) ++hi;
    const double t0 = times[hi - 1], t1 = times[hi];
    const double a = (t - t0) / (t1 - t0);
    return (1.0 - a) * states[hi - 1] + a * states[hi];
}

namespace {

// One evaluation of every monitored functional; cumulative pieces are folded
// in by the caller.
StepDiag measure(const State& u, const PhysicalParams& p, double t, DiagLevel level,
                 double pexp) {
    StepDiag d;
    d.t = t;
    d.l2_sq = dot(u, u);
    if (level == DiagLevel::light) {
        d.h1_sq = d.l2_sq;   // stand-in so the blow-up check stays cheap
        return d;
    }
    d.h1_sq = d.l2_sq + sq_grad3(u);
    d.div_res = divergence_residual(u.v);

    const State au = apply_A(u, p);
    d.a_l2_sq = dot(au, au);
    const double l6 = norm_lp(u, 6.0);
    d.l6_p6 = std::pow(l6, 6.0);

    // integrand pieces (instantaneous values; integration happens outside)
    d.int_w = d.l2_sq * d.l2_sq + d.h1_sq + d.l2_sq * d.l2_sq * d.h1_sq;

    const VectorField2 vt = baroclinic(u.v);
    const double vt6 = norm_lp(vt, 6.0);
    const Mat vmag2 = vt.c1.v.cwiseAbs2() + vt.c2.v.cwiseAbs2();
    const Mat g3 = ddx(vt.c1).v.cwiseAbs2() + ddy(vt.c1).v.cwiseAbs2() +
                   ddz(vt.c1).v.cwiseAbs2() + ddx(vt.c2).v.cwiseAbs2() +
                   ddy(vt.c2).v.cwiseAbs2() + ddz(vt.c2).v.cwiseAbs2();
    const double mixed =
        u.grid()->qh * ((vmag2.cwiseProduct(vmag2).cwiseProduct(g3)) * u.grid()->wz).sum();
    d.int_6 = std::pow(vt6, 6.0) + mixed;

    const double vbar_h1 = norm_h1_surface(vertical_mean(u.v));
    d.int_grad = std::pow(vbar_h1, 4.0);

    const State dzu{{ddz(u.v.c1), ddz(u.v.c2)}, ddz(u.T)};
    const double dz_l2 = dot(dzu, dzu);
    const double dz_h1 = dz_l2 + sq_grad3(dzu);
    d.int_z = dz_l2 * dz_h1;
    d.sup_dz_h1 = std::sqrt(dz_h1);

    const ScalarField dzT = ddz(u.T);
    const double dzT_l2 = dot(dzT, dzT);
    const double dzT_h1 = dzT_l2 + sq_grad3(dzT);
    d.sup_T = dzT_l2 * dzT_l2;
    d.int_T = dzT_l2 * dzT_h1;

    const double h2_sq = d.l2_sq + sq_grad3(u) + sq_h2_semi(u);
    const double h1 = std::sqrt(d.h1_sq);
    d.sup_p = std::pow(h1, pexp);
    d.int_p = std::pow(h1, pexp - 2.0) * h2_sq;
    d.sup_linf = norm_lp(u, std::numeric_limits<double>::infinity());
    const double dz_h2 = dz_h1 + sq_h2_semi(dzu);
    d.int_h2 = h2_sq + dz_h2;
    return d;
}

struct DiagAccum {
    StepDiag last;
    bool first = true;

    // trapezoid-free accumulation: left-endpoint rule matching the scheme order
    void push(std::vector<StepDiag>& out, StepDiag d, double dt) {
        if (!first) {
            d.int_w = last.int_w + dt * d.int_w;
            d.int_6 = last.int_6 + dt * d.int_6;
            d.int_grad = last.int_grad + dt * d.int_grad;
            d.int_z = last.int_z + dt * d.int_z;
            d.int_T = last.int_T + dt * d.int_T;
            d.int_p = last.int_p + dt * d.int_p;
            d.int_h2 = last.int_h2 + dt * d.int_h2;
            d.sup_T = std::max(d.sup_T, last.sup_T);
            d.sup_p = std::max(d.sup_p, last.sup_p);
            d.sup_linf = std::max(d.sup_linf, last.sup_linf);
            d.sup_dz_h1 = std::max(d.sup_dz_h1, last.sup_dz_h1);
        } else {
            d.int_w = d.int_6 = d.int_grad = d.int_z = d.int_T = d.int_p = d.int_h2 = 0.0;
            first = false;
        }
        last = d;
        out.push_back(d);
    }
};

bool bad(const StepDiag& d, double threshold) {
    return !std::isfinite(d.l2_sq) || !std::isfinite(d.h1_sq) || d.l2_sq > threshold ||
           d.h1_sq > threshold;
}

// Shared integrator loop. `drift` returns the explicit tendency at step n
// (everything except A); `noise_term` returns the stochastic/control
// increment contribution, already scaled, or an empty optional.
template <class Drift, class NoiseTerm>
Trajectory integrate(const State& u0, const PhysicalParams& p, const IntegratorConfig& cfg,
                     Drift&& drift, NoiseTerm&& noise_term) {
    cfg.validate();
    p.validate();
    const int n = cfg.n_steps();
    const double dt = cfg.dt_actual();
    const int stride = cfg.store_stride;

    Trajectory tr;
    tr.dt = dt;
    tr.stride = stride >= 1 ? stride : n;
    tr.times.push_back(0.0);
    tr.states.push_back(u0);

    DiagAccum acc;
    State u = u0;
    acc.push(tr.diag, measure(u, p, 0.0, cfg.diag, cfg.stopping_p), dt);
    if (bad(tr.diag.back(), cfg.blowup_threshold)) {
        tr.blew_up = true;
        tr.blowup_step = 0;
        tr.blowup_reason = "non-finite or oversized initial state";
        return tr;
    }

    for (int s = 0; s < n; ++s) {
        const double t = s * dt;
        State rhs = u - dt * drift(u, s, t);
        State xi = noise_term(u, s, t);
        if (xi.grid()) axpy(1.0, xi, rhs);
        u = solve_A_implicit(rhs, p, dt, 1.0);

        const double tn = (s + 1) * dt;
        StepDiag d = measure(u, p, tn, cfg.diag, cfg.stopping_p);
        acc.push(tr.diag, d, dt);
        const bool store = (stride >= 1 && ((s + 1) % stride == 0)) || s + 1 == n;
        if (store && !(tr.times.back() == tn)) {
            tr.times.push_back(tn);
            tr.states.push_back(u);
        }
        if (bad(tr.diag.back(), cfg.blowup_threshold)) {
            tr.blew_up = true;
            tr.blowup_step = s + 1;
            tr.blowup_reason = "diagnostic exceeded threshold or non-finite at t=" +
                               std::to_string(tn);
            if (tr.times.back() != tn) {
                tr.times.push_back(tn);
                tr.states.push_back(u);
            }
            break;
        }
    }
    return tr;
}

State empty_state() { return State(); }

} // namespace

Trajectory solve_deterministic(const State& u0, const PhysicalParams& p, const Forcing& f,
                               const IntegratorConfig& cfg) {
    auto drift = [&](const State& u, int, double t) {
        State out(u.grid());
        if (cfg.terms.advection) out = apply_B(u);
        if (cfg.terms.pressure) out = out + apply_Apr(u, p);
        if (cfg.terms.coriolis) out = out + apply_E(u, p);
        if (cfg.terms.forcing && f.enabled()) out = out + f.eval(u.grid(), t);
        return out;
    };
    auto no_noise = [](const State&, int, double) { return empty_state(); };
    return integrate(u0, p, cfg, drift, no_noise);
}

Trajectory solve_stochastic(const State& u0, const PhysicalParams& p, const Forcing& f,
                            const NoiseModel& noise, const WienerStream& stream,
                            const IntegratorConfig& cfg) {
    auto drift = [&](const State& u, int, double t) {
        State out(u.grid());
        if (cfg.terms.advection) out = apply_B(u);
        if (cfg.terms.pressure) out = out + apply_Apr(u, p);
        if (cfg.terms.coriolis) out = out + apply_E(u, p);
        if (cfg.terms.forcing && f.enabled()) out = out + f.eval(u.grid(), t);
        return out;
    };
    const double sqrt_eps = std::sqrt(cfg.eps);
    const double dt = cfg.dt_actual();
    auto noise_term = [&](const State& u, int s, double) {
        if (cfg.eps == 0.0) return empty_state();
        const Vec dw = stream.increment(static_cast<std::uint64_t>(s), dt);
        return State(sqrt_eps * sigma_apply(noise, u, dw));
    };
    return integrate(u0, p, cfg, drift, noise_term);
}

Trajectory solve_skeleton_ldp(const State& u0, const ControlPath& h, const PhysicalParams& p,
                              const Forcing& f, const NoiseModel& noise,
                              const IntegratorConfig& cfg) {
    if (h.t_end < cfg.t_end - 1e-12)
        throw std::invalid_argument("skeleton: control path does not cover the horizon");
    auto drift = [&](const State& u, int, double t) {
        State out(u.grid());
        if (cfg.terms.advection) out = apply_B(u);
        if (cfg.terms.pressure) out = out + apply_Apr(u, p);
        if (cfg.terms.coriolis) out = out + apply_E(u, p);
        if (cfg.terms.forcing && f.enabled()) out = out + f.eval(u.grid(), t);
        return out;
    };
    const double dt = cfg.dt_actual();
    auto control = [&](const State& u, int, double t) {
        const Vec hv = h.at(t);
        if (hv.isZero(0.0)) return empty_state();
        return State(dt * sigma_apply(noise, u, hv));
    };
    return integrate(u0, p, cfg, drift, control);
}

namespace {

State linearized_drift(const State& r, const State& u0, const PhysicalParams& p,
                       const TermToggles& tg) {
    State out(r.grid());
    if (tg.advection) out = apply_B(r, u0) + apply_B(u0, r);
    if (tg.pressure) out = out + apply_Apr(r, p);
    if (tg.coriolis) out = out + apply_E(r, p);
    return out;
}

} // namespace

Trajectory solve_skeleton_mdp(const ControlPath& h, const Trajectory& u0_traj,
                              const PhysicalParams& p, const NoiseModel& noise,
                              const IntegratorConfig& cfg) {
    if (u0_traj.t_end() < cfg.t_end - 1e-12)
        throw std::invalid_argument("skeleton-mdp: base trajectory does not cover the horizon");
    const auto& g = u0_traj.states.front().grid();
    auto drift = [&](const State& r, int s, double) {
        return linearized_drift(r, u0_traj.at_step(s), p, cfg.terms);
    };
    const double dt = cfg.dt_actual();
    auto control = [&](const State&, int s, double t) {
        const Vec hv = h.at(t);
        if (hv.isZero(0.0)) return empty_state();
        return State(dt * sigma_apply(noise, u0_traj.at_step(s), hv));
    };
    return integrate(State(g), p, cfg, drift, control);
}

Trajectory solve_clt_limit(const Trajectory& u0_traj, const PhysicalParams& p,
                           const NoiseModel& noise, const WienerStream& stream,
                           const IntegratorConfig& cfg) {
    if (u0_traj.t_end() < cfg.t_end - 1e-12)
        throw std::invalid_argument("clt: base trajectory does not cover the horizon");
    const auto& g = u0_traj.states.front().grid();
    auto drift = [&](const State& r, int s, double) {
        return linearized_drift(r, u0_traj.at_step(s), p, cfg.terms);
    };
    const double dt = cfg.dt_actual();
    auto noise_term = [&](const State&, int s, double) {
        const Vec dw = stream.increment(static_cast<std::uint64_t>(s), dt);
        return State(sigma_apply(noise, u0_traj.at_step(s), dw));
    };
    return integrate(State(g), p, cfg, drift, noise_term);
}

Trajectory solve_deviation(const State& u0, const PhysicalParams& p, const Forcing& f,
                           const NoiseModel& noise, const WienerStream& stream,
                           const IntegratorConfig& cfg, const Trajectory& u0_traj,
                           DeviationMethod method) {
    cfg.validate();
    if (!(cfg.eps > 0.0)) throw std::invalid_argument("deviation: eps must be positive");
    const double lam = cfg.lambda();
    const double scale = std::sqrt(cfg.eps) * lam;

    if (method == DeviationMethod::differenced) {
        Trajectory ue = solve_stochastic(u0, p, f, noise, stream, cfg);
        Trajectory tr;
        tr.dt = ue.dt;
        tr.stride = ue.stride;
        tr.blew_up = ue.blew_up;
        tr.blowup_step = ue.blowup_step;
        tr.blowup_reason = ue.blowup_reason;
        DiagAccum acc;
        for (std::size_t i = 0; i < ue.states.size(); ++i) {
            const double t = ue.times[i];
            State r = (1.0 / scale) * (ue.states[i] - u0_traj.at_time(t));
            tr.times.push_back(t);
            tr.states.push_back(std::move(r));
        }
        // diagnostics recomputed on the stored R samples
        for (std::size_t i = 0; i < tr.states.size(); ++i) {
            const double step_dt = i == 0 ? 0.0 : tr.times[i] - tr.times[i - 1];
            acc.push(tr.diag, measure(tr.states[i], p, tr.times[i], cfg.diag, cfg.stopping_p),
                     step_dt);
        }
        return tr;
    }

    // direct integration of the R^eps equation with the same Wiener path
    const double dt = cfg.dt_actual();
    auto drift = [&](const State& r, int s, double) {
        const State u0s = u0_traj.at_step(s);
        State out(r.grid());
        if (cfg.terms.advection)
            out = apply_B(r, u0s + scale * r) + apply_B(u0s, r);
        if (cfg.terms.pressure) out = out + apply_Apr(r, p);
        if (cfg.terms.coriolis) out = out + apply_E(r, p);
        return out;
    };
    auto noise_term = [&](const State& r, int s, double) {
        const Vec dw = stream.increment(static_cast<std::uint64_t>(s), dt);
        const State arg = u0_traj.at_step(s) + scale * r;
        return State((1.0 / lam) * sigma_apply(noise, arg, dw));
    };
    return integrate(State(u0.grid()), p, cfg, drift, noise_term);
}

} // namespace hd
