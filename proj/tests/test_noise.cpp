#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hd/noise.hpp"
#include "hd/norms.hpp"
#include "hd/verify.hpp"

#include <cmath>
#include <numbers>

using namespace hd;

namespace {
GridPtr grid() { return Grid::make(2.0 * std::numbers::pi, 1.0, 8, 8, 5); }

SpectralNoiseModel full_model(const GridPtr& g, int m = 4) {
    SpectralNoiseParams np;
    np.m = m;
    np.a = {0.5};
    np.b = {0.3};
    np.c = {0.2};
    return {g, np};
}
} // namespace

TEST_CASE("wiener increments: determinism and independence contracts") {
    WienerStream s{42, 7, 3};
    const auto a = wiener_increments(s, 0.01, 50);
    const auto b = wiener_increments(s, 0.01, 50);
    for (int i = 0; i < 50; ++i) CHECK((a[i] - b[i]).cwiseAbs().maxCoeff() == 0.0);

    WienerStream s2{42, 8, 3};
    const auto c = wiener_increments(s2, 0.01, 1);
    CHECK((a[0] - c[0]).cwiseAbs().maxCoeff() > 0.0);
    CHECK_THROWS_AS(s.increment(0, 0.0), std::invalid_argument);
}

TEST_CASE("wiener increments: CLT mean bound and variance") {
    const int n = 100000;
    const double dt = 1.0;
    WienerStream s{1234, 0, 2};
    Vec mean = Vec::Zero(2), var = Vec::Zero(2);
    for (int i = 0; i < n; ++i) {
        const Vec w = s.increment(i, dt);
        mean += w;
        var += w.cwiseAbs2();
    }
    mean /= n;
    var /= n;
    for (int k = 0; k < 2; ++k) {
        CHECK(std::abs(mean(k)) <= 4.0 * std::sqrt(dt / n));
        CHECK(var(k) == doctest::Approx(dt).epsilon(0.05));
    }
}

TEST_CASE("sigma_apply: linear in xi, zero for zero xi, unit vectors") {
    auto g = grid();
    const SpectralNoiseModel model = full_model(g);
    const State u = project_H(synth_state(g, 3, 0, 3, 2));
    Vec zero = Vec::Zero(4);
    CHECK(norm_l2(sigma_apply(model, u, zero)) == 0.0);

    Vec e1 = Vec::Zero(4);
    e1(0) = 1.0;
    CHECK(norm_l2(sigma_apply(model, u, e1) - model.mode(0, u)) == 0.0);

    Vec x1(4), x2(4);
    x1 << 1.0, -0.5, 2.0, 0.3;
    x2 << 0.2, 1.5, -1.0, 0.7;
    const State lin = sigma_apply(model, u, Vec(2.0 * x1 + 3.0 * x2)) -
                      (2.0 * sigma_apply(model, u, x1) + 3.0 * sigma_apply(model, u, x2));
    CHECK(norm_l2(lin) <= 1e-12 * norm_l2(sigma_apply(model, u, x1)));
}

TEST_CASE("additive model ignores the state") {
    auto g = grid();
    SpectralNoiseParams np;
    np.m = 3;
    np.a = {1.0};
    np.b = {0.0};
    np.c = {0.0};
    const SpectralNoiseModel model(g, np);
    CHECK(model.additive());
    const State u1 = synth_state(g, 5, 1, 3, 2);
    const State u2 = synth_state(g, 5, 2, 3, 2);
    Vec xi(3);
    xi << 1.0, 2.0, 3.0;
    CHECK(norm_l2(sigma_apply(model, u1, xi) - sigma_apply(model, u2, xi)) == 0.0);
}

TEST_CASE("mode jacobian matches finite differences and its adjoint is exact") {
    auto g = grid();
    const SpectralNoiseModel model = full_model(g);
    const State u = project_H(synth_state(g, 7, 0, 3, 2));
    const State du = synth_state(g, 7, 1, 3, 2);
    const double h = 1e-6;
    for (int k = 0; k < model.modes(); ++k) {
        const State fd = (1.0 / (2.0 * h)) *
                         (model.mode(k, u + h * du) - model.mode(k, u + (-h) * du));
        const State jac = model.mode_jacobian(k, u, du);
        CHECK(norm_l2(fd - jac) <= 1e-6 * std::max(1.0, norm_l2(jac)));
    }
    Vec w(4);
    w << 0.3, -0.2, 0.5, 0.1;
    const State x = synth_state(g, 7, 2, 3, 2);
    State jac_sum(g);
    for (int k = 0; k < 4; ++k) axpy(w(k), model.mode_jacobian(k, u, du), jac_sum);
    const double fwd = dot(jac_sum, x);
    const double adj = dot(du, model.jacobian_adjoint(u, w, x));
    CHECK(std::abs(fwd - adj) <= 1e-11 * norm_l2(du) * norm_l2(x));
}

TEST_CASE("estimate_constants: additive model fits all etas to zero") {
    auto g = grid();
    SpectralNoiseParams np;
    np.m = 2;
    np.a = {0.7};
    np.b = {0.0};
    np.c = {0.0};
    const SpectralNoiseModel model(g, np);
    PhysicalParams p;
    std::vector<State> samples;
    for (int i = 0; i < 10; ++i)
        samples.push_back(project_H(synth_state(g, 11, i, 3, 2)));
    NoiseBudget budget;
    budget.C = 10.0;
    budget.eta0 = budget.eta1 = budget.eta2 = budget.eta3 = budget.gamma = 0.0;
    const ConstantsReport rep = estimate_constants(model, p, samples, budget);
    CHECK(rep.bnd_H.eta_needed <= 1e-12);
    CHECK(rep.bnd_V.eta_needed <= 1e-12);
    CHECK(rep.vb.eta_needed <= 1e-12);
    CHECK(rep.vz.eta_needed <= 1e-12);
    CHECK(rep.lip_V.eta_needed <= 1e-12);
    CHECK(rep.all_pass);
    CHECK_THROWS_AS(estimate_constants(model, p, {samples[0]}, budget),
                    std::invalid_argument);
}

TEST_CASE("estimate_constants: linear model recovers its Lipschitz constant") {
    auto g = grid();
    const double c = 1.7;
    const LinearNoiseModel model(g, c);
    PhysicalParams p;
    std::vector<State> samples;
    for (int i = 0; i < 6; ++i) samples.push_back(synth_state(g, 13, i, 3, 2));
    // include a near-constant pair so the H1/L2 gap closes and the bound is tight
    State flat(g);
    flat.v.c1.v.setConstant(1.0);
    flat.T.v.setConstant(0.5);
    samples.push_back(flat);
    samples.push_back(1.5 * flat);

    // oracle: max over consecutive pairs of c^2 |dU|^2 / ||dU||^2
    double oracle = 0.0;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const State d = samples[i] - samples[i + 1];
        oracle = std::max(oracle, c * c * dot(d, d) / (dot(d, d) + sq_grad3(d)));
    }
    NoiseBudget budget;
    budget.C = 2.0 * c * c;
    const ConstantsReport rep = estimate_constants(model, p, samples, budget);
    CHECK(rep.lip_H.c_needed == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(rep.lip_H.c_needed == doctest::Approx(c * c).epsilon(1e-9));
}

TEST_CASE("estimate_constants: no gradient dependence means eta3 = 0 suffices") {
    auto g = grid();
    SpectralNoiseParams np;
    np.m = 2;
    np.a = {0.5};
    np.b = {0.4};
    np.c = {0.0};   // no gradient term
    const SpectralNoiseModel model(g, np);
    PhysicalParams p;
    std::vector<State> samples;
    for (int i = 0; i < 8; ++i)
        samples.push_back(project_H(synth_state(g, 17, i, 3, 2)));
    NoiseBudget budget;
    budget.C = 50.0;
    budget.eta3 = 0.0;
    const ConstantsReport rep = estimate_constants(model, p, samples, budget);
    CHECK(rep.vz.eta_needed <= 1e-12);
    CHECK(rep.vz.pass);
}

TEST_CASE("shipped gradient-dependent model passes its declared budget") {
    auto g = Grid::make(2.0 * std::numbers::pi, 1.0, 16, 16, 9);
    SpectralNoiseParams np;
    np.m = 8;
    np.a = {0.5};
    np.b = {0.2};
    np.c = {0.15};
    const SpectralNoiseModel model(g, np);
    PhysicalParams p;
    std::vector<State> samples;
    for (int i = 0; i < 100; ++i)
        samples.push_back(project_H(synth_state(g, 19, i, 4, 3)));
    NoiseBudget budget;
    budget.C = 60.0;
    budget.eta0 = 0.3;
    budget.eta1 = 0.3;
    budget.eta2 = 1.0;
    budget.eta3 = 0.3;
    budget.gamma = 0.3;
    const ConstantsReport rep = estimate_constants(model, p, samples, budget);
    CHECK(rep.all_pass);
}

TEST_CASE("control path: action closed forms and quadratic homogeneity") {
    ControlPath zero(1.0, 2, 8);
    CHECK(action(zero) == 0.0);

    ControlPath c(2.0, 1, 16);
    c.coeffs.setConstant(1.5);
    CHECK(action(c) == doctest::Approx(0.5 * 1.5 * 1.5 * 2.0).epsilon(1e-14));

    ControlPath r(1.0, 3, 10);
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 10; ++j) r.coeffs(k, j) = std::sin(1.0 + k + j);
    ControlPath r2 = r;
    r2.coeffs *= 2.0;
    CHECK(action(r2) == doctest::Approx(4.0 * action(r)).epsilon(1e-14));
}
