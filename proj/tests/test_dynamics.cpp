#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hd/dynamics.hpp"
#include "hd/norms.hpp"
#include "hd/verify.hpp"

#include <cmath>
#include <numbers>

using namespace hd;

namespace {

GridPtr grid8() { return Grid::make(2.0 * std::numbers::pi, 1.0, 8, 8, 5); }

PhysicalParams basic_params() {
    PhysicalParams p;
    p.mu_v = 0.4;
    p.nu_v = 0.3;
    p.mu_T = 0.5;
    p.nu_T = 0.2;
    return p;
}

SpectralNoiseModel additive_model(const GridPtr& g, int m = 2, double amp = 0.6) {
    SpectralNoiseParams np;
    np.m = m;
    np.a = {amp};
    np.b = {0.0};
    np.c = {0.0};
    return {g, np};
}

IntegratorConfig cfg_basic(double dt, double t) {
    IntegratorConfig c;
    c.dt = dt;
    c.t_end = t;
    c.diag = DiagLevel::full;
    return c;
}

} // namespace

TEST_CASE("rest state is invariant") {
    auto g = grid8();
    const PhysicalParams p = basic_params();
    Forcing f;
    const Trajectory tr = solve_deterministic(State(g), p, f, cfg_basic(1e-2, 0.2));
    CHECK_FALSE(tr.blew_up);
    CHECK(norm_l2(tr.final_state()) == 0.0);
}

TEST_CASE("single thermal mode decays at the exact heat rate") {
    auto g = grid8();
    PhysicalParams p = basic_params();
    p.alpha = 0.0;
    Forcing f;
    State u0(g);
    u0.T = mode_field(g, 1, 0);   // z-constant horizontal mode, rate = mu_T k^2
    const double kappa = p.mu_T * 1.0;
    const double t = 0.5;
    const double exact = std::exp(-kappa * t);

    auto run = [&](double dt) {
        IntegratorConfig c = cfg_basic(dt, t);
        c.terms.advection = false;   // linear regime
        const Trajectory tr = solve_deterministic(u0, p, f, c);
        return dot(tr.final_state().T, u0.T) / dot(u0.T, u0.T);
    };
    const double a1 = run(1e-2);
    const double a2 = run(5e-3);
    const double extrap = 2.0 * a2 - a1;   // first-order Richardson
    CHECK(std::abs(extrap - exact) / exact < 1e-2);
    // nonlinear terms are inert for a pure thermal mode with beta_T_g = 0
    IntegratorConfig c = cfg_basic(5e-3, t);
    const Trajectory full = solve_deterministic(u0, p, f, c);
    const double afull = dot(full.final_state().T, u0.T) / dot(u0.T, u0.T);
    CHECK(afull == doctest::Approx(a2).epsilon(1e-12));
}

TEST_CASE("manufactured solution: forced equilibrium is held to scheme order") {
    // steady forcing F = A Ueq makes Ueq a fixed point of the continuum system
    // (B(Ueq) = 0 for a z-constant divergence-free single mode paired with a
    // temperature mode advected along its own level sets is not generally zero,
    // so check the full residual decay instead: start at Ueq and verify the
    // drift over one unit of time shrinks at O(dt))
    auto g = grid8();
    PhysicalParams p = basic_params();
    p.f_cor = 0.7;
    p.beta_T_g = 0.5;
    State ueq(g);
    const ScalarField psi = mode_field(g, 1, 1, 0.4);
    ueq.v.c1 = -1.0 * ddy(psi);
    ueq.v.c2 = ddx(psi);
    ueq.T = mode_field(g, 1, 0, 0.2);
    ueq = project_H(band_limit(ueq));

    Forcing f;
    f.base = apply_A(ueq, p) + apply_B(ueq) + apply_Apr(ueq, p) + apply_E(ueq, p);
    f.omega = 0.0;
    // F enters with a minus sign in the drift convention: dU + [.. - F] = 0
    f.base = -1.0 * f.base;

    auto drift_err = [&](double dt) {
        IntegratorConfig c = cfg_basic(dt, 0.25);
        const Trajectory tr = solve_deterministic(ueq, p, f, c);
        return norm_l2(tr.final_state() - ueq) / norm_l2(ueq);
    };
    const double e1 = drift_err(8e-3);
    const double e2 = drift_err(4e-3);
    CHECK(e1 < 0.05);
    CHECK(e2 < 0.6 * e1);   // first order in dt
}

TEST_CASE("noise-free stochastic run reproduces the deterministic one bit-exactly") {
    auto g = grid8();
    const PhysicalParams p = basic_params();
    Forcing f;
    const State u0 = project_H(synth_state(g, 3, 0, 3, 2));
    IntegratorConfig c = cfg_basic(1e-2, 0.2);
    const SpectralNoiseModel model = additive_model(g);
    WienerStream stream{5, 0, model.modes()};
    c.eps = 0.0;
    const Trajectory a = solve_deterministic(u0, p, f, c);
    const Trajectory b = solve_stochastic(u0, p, f, model, stream, c);
    CHECK((a.final_state().T.v - b.final_state().T.v).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.final_state().v.c1.v - b.final_state().v.c1.v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("same stream gives the same trajectory; energies differ across streams") {
    auto g = grid8();
    const PhysicalParams p = basic_params();
    Forcing f;
    const State u0 = project_H(synth_state(g, 3, 1, 3, 2));
    IntegratorConfig c = cfg_basic(1e-2, 0.2);
    c.eps = 0.01;
    const SpectralNoiseModel model = additive_model(g);
    WienerStream s1{5, 1, model.modes()};
    const Trajectory a = solve_stochastic(u0, p, f, model, s1, c);
    const Trajectory b = solve_stochastic(u0, p, f, model, s1, c);
    CHECK((a.final_state().T.v - b.final_state().T.v).cwiseAbs().maxCoeff() == 0.0);
    WienerStream s2{5, 2, model.modes()};
    const Trajectory d = solve_stochastic(u0, p, f, model, s2, c);
    CHECK(norm_l2(d.final_state() - a.final_state()) > 0.0);
}

TEST_CASE("OU reduction: endpoint variance matches the closed form") {
    // B, F disabled; additive single-mode temperature noise driving a
    // z-constant horizontal mode: the mode coefficient is an exact OU process
    auto g = grid8();
    PhysicalParams p = basic_params();
    p.alpha = 0.0;
    Forcing f;
    SpectralNoiseParams np;
    np.m = 1;
    np.a = {1.0};
    np.b = {0.0};
    np.c = {0.0};
    SpectralNoiseModel raw(g, np);
    // replace the shaped mode with a clean single-mode profile via the linear model
    State profile(g);
    profile.T = mode_field(g, 1, 0);
    const double pn = norm_l2(profile);
    profile = (1.0 / pn) * profile;
    LinearNoiseModel model(g, 0.0, profile);   // sigma(U) = profile, additive

    const double kappa = p.mu_T;   // rate of mode (1,0), z-constant
    const double eps = 0.04, t = 1.0, dt = 2e-3;
    IntegratorConfig c = cfg_basic(dt, t);
    c.terms.advection = false;
    c.terms.pressure = false;
    c.terms.coriolis = false;
    c.eps = eps;
    c.store_stride = 0;
    c.diag = DiagLevel::light;

    const int n_paths = 4000;
    double sum = 0.0, sum2 = 0.0;
    for (int path = 0; path < n_paths; ++path) {
        WienerStream stream{77, static_cast<std::uint64_t>(path), 1};
        const Trajectory tr = solve_stochastic(State(g), p, f, model, stream, c);
        const double x = dot(tr.final_state(), profile);   // profile has unit norm
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n_paths;
    const double var = sum2 / n_paths - mean * mean;
    const double exact = eps / (2.0 * kappa) * (1.0 - std::exp(-2.0 * kappa * t));
    const double sigma_mc = exact * std::sqrt(2.0 / n_paths);
    CHECK(std::abs(var - exact) <= 3.0 * sigma_mc + 0.01 * exact);
}

TEST_CASE("skeleton with h = 0 equals the deterministic trajectory") {
    auto g = grid8();
    const PhysicalParams p = basic_params();
    Forcing f;
    const State u0 = project_H(synth_state(g, 9, 0, 3, 2));
    IntegratorConfig c = cfg_basic(1e-2, 0.2);
    const SpectralNoiseModel model = additive_model(g);
    ControlPath h(c.t_end, model.modes(), 8);
    const Trajectory a = solve_skeleton_ldp(u0, h, p, f, model, c);
    const Trajectory b = solve_deterministic(u0, p, f, c);
    CHECK(norm_l2(a.final_state() - b.final_state()) == 0.0);
}

TEST_CASE("skeleton with additive noise and linear dynamics matches Duhamel") {
    auto g = grid8();
    PhysicalParams p = basic_params();
    p.alpha = 0.0;
    Forcing f;
    State profile(g);
    profile.T = mode_field(g, 1, 0);
    profile = (1.0 / norm_l2(profile)) * profile;
    LinearNoiseModel model(g, 0.0, profile);

    const double kappa = p.mu_T;
    const double t = 0.5, hval = 1.3;
    IntegratorConfig c = cfg_basic(1e-3, t);
    c.terms.advection = false;
    c.terms.pressure = false;
    c.terms.coriolis = false;
    ControlPath h(t, 1, 10);
    h.coeffs.setConstant(hval);

    const Trajectory tr = solve_skeleton_ldp(State(g), h, p, f, model, c);
    const double coef = dot(tr.final_state(), profile);
    const double duhamel = hval / kappa * (1.0 - std::exp(-kappa * t));
    CHECK(std::abs(coef - duhamel) < 5e-3 * std::abs(duhamel));

    // doubling h doubles U_h - U0 for the linear dynamics
    ControlPath h2 = h;
    h2.coeffs *= 2.0;
    const Trajectory tr2 = solve_skeleton_ldp(State(g), h2, p, f, model, c);
    CHECK(norm_l2(tr2.final_state() - 2.0 * tr.final_state()) <=
          1e-10 * norm_l2(tr.final_state()));
}

TEST_CASE("MDP skeleton: zero control stays at zero; solution map is linear") {
    auto g = grid8();
    PhysicalParams p = basic_params();
    p.f_cor = 0.8;
    p.beta_T_g = 0.4;
    Forcing f;
    const State u0 = project_H(synth_state(g, 21, 0, 3, 2));
    IntegratorConfig c = cfg_basic(5e-3, 0.3);
    IntegratorConfig det = c;
    det.store_stride = 1;
    const Trajectory base = solve_deterministic(u0, p, f, det);

    SpectralNoiseParams np;
    np.m = 2;
    np.a = {0.5};
    np.b = {0.25};
    np.c = {0.1};
    const SpectralNoiseModel model(g, np);

    ControlPath zero(c.t_end, 2, 6);
    const Trajectory r0 = solve_skeleton_mdp(zero, base, p, model, c);
    CHECK(norm_l2(r0.final_state()) == 0.0);

    ControlPath h1(c.t_end, 2, 6), h2(c.t_end, 2, 6);
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 6; ++j) {
            h1.coeffs(k, j) = std::sin(1.0 + k + j);
            h2.coeffs(k, j) = std::cos(0.5 + 2.0 * k - j);
        }
    const Trajectory r1 = solve_skeleton_mdp(h1, base, p, model, c);
    const Trajectory r2 = solve_skeleton_mdp(h2, base, p, model, c);

    ControlPath ha = h1;
    ha.coeffs *= 2.5;
    const Trajectory ra = solve_skeleton_mdp(ha, base, p, model, c);
    CHECK(norm_l2(ra.final_state() - 2.5 * r1.final_state()) <=
          1e-10 * norm_l2(r1.final_state()));

    ControlPath hs = h1;
    hs.coeffs += h2.coeffs;
    const Trajectory rs = solve_skeleton_mdp(hs, base, p, model, c);
    CHECK(norm_l2(rs.final_state() - (r1.final_state() + r2.final_state())) <=
          1e-10 * (norm_l2(r1.final_state()) + norm_l2(r2.final_state())));
}

TEST_CASE("CLT limit and deviations vanish for sigma = 0") {
    auto g = grid8();
    const PhysicalParams p = basic_params();
    Forcing f;
    const State u0 = project_H(synth_state(g, 31, 0, 3, 2));
    IntegratorConfig c = cfg_basic(1e-2, 0.2);
    c.store_stride = 1;
    const Trajectory base = solve_deterministic(u0, p, f, c);
    LinearNoiseModel model(g, 0.0);   // sigma == 0
    WienerStream stream{3, 0, 1};
    IntegratorConfig cc = c;
    cc.eps = 1e-2;
    cc.lambda_rule = LambdaRule::clt;
    const Trajectory uhat = solve_clt_limit(base, p, model, stream, cc);
    CHECK(norm_l2(uhat.final_state()) == 0.0);
    const Trajectory rdev =
        solve_deviation(u0, p, f, model, stream, cc, base, DeviationMethod::differenced);
    CHECK(norm_l2(rdev.final_state()) == 0.0);
}

TEST_CASE("differenced and direct deviation integrations agree") {
    auto g = grid8();
    PhysicalParams p = basic_params();
    p.f_cor = 0.6;
    p.beta_T_g = 0.3;
    Forcing f;
    const State u0 = project_H(synth_state(g, 41, 0, 3, 2));
    IntegratorConfig c = cfg_basic(5e-3, 0.25);
    c.store_stride = 1;
    const Trajectory base = solve_deterministic(u0, p, f, c);

    SpectralNoiseParams np;
    np.m = 2;
    np.a = {0.4};
    np.b = {0.2};
    np.c = {0.1};
    const SpectralNoiseModel model(g, np);
    IntegratorConfig cd = c;
    cd.eps = 1e-3;
    cd.lambda_rule = LambdaRule::power;
    cd.lambda_power = 0.25;
    WienerStream stream{51, 0, 2};

    const Trajectory rd =
        solve_deviation(u0, p, f, model, stream, cd, base, DeviationMethod::differenced);
    const Trajectory ri =
        solve_deviation(u0, p, f, model, stream, cd, base, DeviationMethod::direct);
    const double gap = norm_l2(rd.final_state() - ri.final_state()) /
                       std::max(1e-12, norm_l2(rd.final_state()));
    CHECK(gap <= 5.0 * cd.dt);
}

TEST_CASE("paired deviations approach the CLT limit as eps decreases") {
    auto g = grid8();
    PhysicalParams p = basic_params();
    p.beta_T_g = 0.3;
    Forcing f;
    const State u0 = project_H(synth_state(g, 61, 0, 3, 2));
    IntegratorConfig c = cfg_basic(5e-3, 0.25);
    c.store_stride = 1;
    const Trajectory base = solve_deterministic(u0, p, f, c);

    SpectralNoiseParams np;
    np.m = 2;
    np.a = {0.4};
    np.b = {0.25};
    np.c = {0.0};
    const SpectralNoiseModel model(g, np);

    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        IntegratorConfig cd = c;
        cd.eps = eps;
        cd.lambda_rule = LambdaRule::clt;
        WienerStream stream{71, 9, 2};
        const Trajectory r = solve_deviation(u0, p, f, model, stream, cd, base,
                                             DeviationMethod::differenced);
        const Trajectory uh = solve_clt_limit(base, p, model, stream, cd);
        double sup = 0.0;
        for (std::size_t i = 0; i < r.states.size(); ++i)
            sup = std::max(sup, norm_h1(r.states[i] - uh.states[i]));
        CHECK(sup < prev);
        prev = sup;
    }
}

TEST_CASE("energy dissipates without noise and forcing; divergence is preserved") {
    auto g = grid8();
    PhysicalParams p = basic_params();
    p.f_cor = 0.0;
    p.beta_T_g = 0.0;
    p.alpha = 0.0;
    Forcing f;
    const State u0 = project_H(synth_state(g, 81, 0, 3, 2));
    IntegratorConfig c = cfg_basic(2e-3, 0.3);
    const Trajectory tr = solve_deterministic(u0, p, f, c);
    REQUIRE_FALSE(tr.blew_up);
    for (std::size_t i = 1; i < tr.diag.size(); ++i) {
        CHECK(tr.diag[i].l2_sq <= tr.diag[i - 1].l2_sq * (1.0 + 1e-12));
        CHECK(tr.diag[i].div_res <= 1e-9);
    }
}

TEST_CASE("stopping-time integrands are nondecreasing along trajectories") {
    auto g = grid8();
    PhysicalParams p = basic_params();
    p.f_cor = 0.5;
    p.beta_T_g = 0.4;
    Forcing f;
    const State u0 = project_H(synth_state(g, 91, 0, 3, 2));
    IntegratorConfig c = cfg_basic(5e-3, 0.2);
    const SpectralNoiseModel model = additive_model(g);
    WienerStream stream{99, 0, model.modes()};
    IntegratorConfig cs = c;
    cs.eps = 0.05;
    const Trajectory tr = solve_stochastic(u0, p, f, model, stream, cs);
    REQUIRE_FALSE(tr.blew_up);
    for (std::size_t i = 1; i < tr.diag.size(); ++i) {
        CHECK(tr.diag[i].int_w >= tr.diag[i - 1].int_w);
        CHECK(tr.diag[i].int_6 >= tr.diag[i - 1].int_6);
        CHECK(tr.diag[i].int_grad >= tr.diag[i - 1].int_grad);
        CHECK(tr.diag[i].int_z >= tr.diag[i - 1].int_z);
        CHECK(tr.diag[i].int_T >= tr.diag[i - 1].int_T);
        CHECK(tr.diag[i].int_p >= tr.diag[i - 1].int_p);
        CHECK(tr.diag[i].int_h2 >= tr.diag[i - 1].int_h2);
        CHECK(tr.diag[i].sup_T >= tr.diag[i - 1].sup_T);
        CHECK(tr.diag[i].sup_p >= tr.diag[i - 1].sup_p);
    }
}

TEST_CASE("blow-up is flagged, not silently stored") {
    auto g = grid8();
    PhysicalParams p = basic_params();
    Forcing f;
    State u0 = project_H(synth_state(g, 101, 0, 3, 2));
    u0 = 1e3 * u0;
    IntegratorConfig c = cfg_basic(0.5, 5.0);   // wildly unstable for advection
    c.blowup_threshold = 1e8;
    const Trajectory tr = solve_deterministic(u0, p, f, c);
    CHECK(tr.blew_up);
    CHECK(tr.blowup_step >= 0);
    for (const auto& d : tr.diag)
        if (std::isfinite(d.l2_sq)) CHECK(d.l2_sq >= 0.0);
}
