#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hd/norms.hpp"
#include "hd/operators.hpp"
#include "hd/verify.hpp"

#include <cmath>
#include <numbers>

using namespace hd;

namespace {
GridPtr grid() { return Grid::make(2.0 * std::numbers::pi, 1.0, 16, 16, 9); }

PhysicalParams params() {
    PhysicalParams p;
    p.mu_v = 0.7;
    p.nu_v = 0.3;
    p.mu_T = 0.5;
    p.nu_T = 0.2;
    p.f_cor = 1.3;
    p.beta_T_g = 0.8;
    p.alpha = 0.4;
    return p;
}

State rand_state(const GridPtr& g, int s) { return synth_state(g, 97, s, 4, 3); }
} // namespace

TEST_CASE("projection: barotropically divergence-free input is unchanged") {
    auto g = grid();
    // v = grad^perp psi, z-constant
    const ScalarField psi = mode_field(g, 2, 1, 0.3);
    VectorField2 v{-1.0 * ddy(psi), ddx(psi)};
    const VectorField2 pv = project_velocity(v);
    CHECK(norm_l2(pv - v) < 1e-12 * norm_l2(v));
}

TEST_CASE("projection kills z-constant gradients") {
    auto g = grid();
    const ScalarField phi = mode_field(g, 1, 2, 0.9);
    VectorField2 v{ddx(phi), ddy(phi)};
    const VectorField2 pv = project_velocity(v);
    const HVector2 bar = vertical_mean(pv);
    CHECK(std::sqrt(dot_h(bar, bar)) < 1e-12 * norm_l2(v));
}

TEST_CASE("projection: idempotent, self-adjoint, residual below tolerance") {
    auto g = grid();
    for (int s = 0; s < 50; ++s) {
        const State u = rand_state(g, 3 * s);
        const State us = rand_state(g, 3 * s + 1);
        const State pu = project_H(u);
        CHECK(divergence_residual(pu.v) <= 1e-10 * std::max(1.0, norm_h1(u.v)));
        CHECK(norm_l2(project_H(pu) - pu) <= 1e-12 * std::max(1.0, norm_l2(pu)));
        const double sym = std::abs(dot(pu, us) - dot(u, project_H(us)));
        CHECK(sym <= 1e-11 * norm_l2(u) * norm_l2(us));
    }
}

TEST_CASE("vertical velocity: zero for z-constant divergence-free v") {
    auto g = grid();
    const ScalarField psi = mode_field(g, 1, 1);
    const VectorField2 v{-1.0 * ddy(psi), ddx(psi)};
    CHECK(norm_l2(vertical_velocity(v)) < 1e-12);
    VectorField2 zero(g);
    CHECK(norm_l2(vertical_velocity(zero)) == 0.0);
}

TEST_CASE("vertical velocity against a symbolic antiderivative") {
    // v = (sin(2 pi x / L) g(z), 0) with g(z) = z + h/2:
    // w = (2 pi / L) cos(2 pi x / L) * [z^2/2 + h z / 2 + h^2 / 2 - h^2/8 ... ]
    const double L = 2.0 * std::numbers::pi, h = 1.0;
    auto g = Grid::make(L, h, 16, 16, 33);
    VectorField2 v(g);
    for (int k = 0; k < g->Nz; ++k) {
        const double gz = g->z(k) + 0.5 * h;
        v.c1.v.col(k) = mode_field(g, 1, 0, -0.5 * std::numbers::pi).v.col(0) * gz;
        // cos(x - pi/2) = sin(x)
    }
    const ScalarField w = vertical_velocity(v);
    double worst = 0.0;
    for (int k = 0; k < g->Nz; ++k) {
        const double z = g->z(k);
        const double integral = 0.5 * (z * z - h * h) + 0.5 * h * (z + h);
        for (int i = 0; i < g->Nx; ++i) {
            const double x = L * i / g->Nx;
            const double expect = -(2.0 * std::numbers::pi / L) * std::cos(x) * integral;
            worst = std::max(worst, std::abs(w(i, 0, k) - expect));
        }
    }
    // trapezoid of a quadratic: second-order accurate
    CHECK(worst < 5.0 / (32.0 * 32.0));
}

TEST_CASE("A: constants in the kernel when alpha = 0") {
    auto g = grid();
    PhysicalParams p = params();
    p.alpha = 0.0;
    State u(g);
    u.v.c1.v.setConstant(2.0);
    u.T.v.setConstant(-1.0);
    CHECK(norm_l2(apply_A(u, p)) < 1e-11);
}

TEST_CASE("A: positive semidefinite, symmetric, energy identity") {
    auto g = grid();
    const PhysicalParams p = params();
    for (int s = 0; s < 100; ++s) {
        const State u = rand_state(g, 2 * s);
        const State au = apply_A(u, p);
        const double quad = dot(au, u);
        CHECK(quad >= -1e-10 * dot(u, u));
        const double form = dirichlet_form(u, u, p);
        CHECK(std::abs(quad - form) <= 1e-10 * std::max(1.0, std::abs(quad)));
        if (s < 20) {
            const State w = rand_state(g, 2 * s + 1);
            CHECK(std::abs(dot(au, w) - dot(u, apply_A(w, p))) <=
                  1e-10 * norm_l2(au) * norm_l2(w));
        }
    }
}

TEST_CASE("implicit solve: dt = 0 is the identity; residual vanishes") {
    auto g = grid();
    const PhysicalParams p = params();
    const State u = rand_state(g, 7);
    const State same = solve_A_implicit(u, p, 0.0, 1.0);
    CHECK(norm_l2(same - u) == 0.0);
    const State w = solve_A_implicit(u, p, 0.05, 1.0);
    const State res = w + 0.05 * apply_A(w, p) - u;
    CHECK(norm_l2(res) <= 1e-12 * norm_l2(u));
    CHECK_THROWS_AS(solve_A_implicit(u, p, -0.1, 1.0), std::invalid_argument);
}

TEST_CASE("b: cancellation and antisymmetry at machine precision") {
    auto g = grid();
    for (int s = 0; s < 100; ++s) {
        const State u = project_H(rand_state(g, 3 * s));
        const State us = project_H(rand_state(g, 3 * s + 1));
        const State ub = project_H(rand_state(g, 3 * s + 2));
        const double scale = norm_h1(u) * norm_h1(us) * norm_h1(us);
        CHECK(std::abs(trilinear_b(u, us, us)) <= 1e-8 * scale);
        const double scale2 = norm_h1(u) * norm_h1(us) * norm_h1(ub);
        CHECK(std::abs(trilinear_b(u, us, ub) + trilinear_b(u, ub, us)) <= 1e-8 * scale2);
    }
}

TEST_CASE("b: velocity-free advecting state contributes nothing") {
    auto g = grid();
    State u(g);
    u.T = synth_field(g, 13, 1, 1, 4, 3);   // temperature only
    const State us = project_H(rand_state(g, 5));
    const State ub = project_H(rand_state(g, 6));
    CHECK(std::abs(trilinear_b(u, us, ub)) < 1e-13);
    CHECK(norm_l2(apply_B(u, us)) < 1e-13);
}

TEST_CASE("B output lives in the projected space and pairs with b") {
    auto g = grid();
    const State u = project_H(rand_state(g, 31));
    const State us = project_H(rand_state(g, 32));
    const State ub = project_H(rand_state(g, 33));
    const State bu = apply_B(u, us);
    CHECK(divergence_residual(bu.v) <= 1e-10 * std::max(1.0, norm_h1(bu.v)));
    CHECK(std::abs(dot(bu, ub) - trilinear_b(u, us, ub)) <=
          1e-10 * std::max(1.0, std::abs(trilinear_b(u, us, ub))));
}

TEST_CASE("discrete b estimates: ratios bounded across samples") {
    auto g = grid();
    const RatioStats r25 = check_b_estimate(BCase::b25, 50, 1234, g);
    CHECK(r25.violations == 0);
    CHECK(r25.max_ratio < 10.0);   // order-one constant on this domain
}

TEST_CASE("A_pr: zero for constant temperature, linear in T, exact adjoint") {
    auto g = grid();
    const PhysicalParams p = params();
    State u(g);
    u.T.v.setConstant(3.0);
    CHECK(norm_l2(apply_Apr(u, p)) < 1e-11);

    const State a = rand_state(g, 41);
    const State b = rand_state(g, 42);
    const State sum = apply_Apr(a + b, p);
    const State parts = apply_Apr(a, p) + apply_Apr(b, p);
    CHECK(norm_l2(sum - parts) <= 1e-11 * std::max(1.0, norm_l2(sum)));

    const double fwd = dot(apply_Apr(a, p), b);
    const double adj = dot(a, adj_Apr(b, p));
    CHECK(std::abs(fwd - adj) <= 1e-11 * norm_l2(a) * norm_l2(b));
}

TEST_CASE("E: (EU,U) = 0 and vanishes when f_cor = 0") {
    auto g = grid();
    PhysicalParams p = params();
    for (int s = 0; s < 100; ++s) {
        const State u = project_H(rand_state(g, s));
        CHECK(std::abs(dot(apply_E(u, p), u)) <= 1e-10 * dot(u, u));
    }
    p.f_cor = 0.0;
    CHECK(norm_l2(apply_E(rand_state(g, 3), p)) == 0.0);
}

TEST_CASE("F is Lipschitz in the H1 norm (diagnostic bound)") {
    auto g = grid();
    const PhysicalParams p = params();
    Forcing f;
    double worst = 0.0;
    for (int s = 0; s < 30; ++s) {
        const State a = rand_state(g, 2 * s);
        const State b = rand_state(g, 2 * s + 1);
        const double num = norm_l2(apply_F(a, p, f, 0.0) - apply_F(b, p, f, 0.0));
        worst = std::max(worst, num / norm_h1(a - b));
    }
    CHECK(worst < 10.0);
}

TEST_CASE("barotropic split reconstructs exactly; J1, J2 vanish for z-constant v") {
    auto g = grid();
    const State u = project_H(rand_state(g, 51));
    const BarotropicSplit sp = split_barotropic(u.v);
    const VectorField2 rec = extend_z(sp.vbar) + sp.vtilde;
    CHECK(norm_l2(rec - u.v) <= 1e-13 * norm_l2(u.v));

    VectorField2 zc(g);
    zc.c1 = mode_field(g, 1, 0);
    zc.c2 = mode_field(g, 0, 1);
    const HVector2 j1 = interaction_j1(zc, zc);
    CHECK(std::sqrt(dot_h(j1, j1)) < 1e-12);
    CHECK(norm_l2(interaction_j2(zc, zc)) < 1e-10);
}

TEST_CASE("J2 is barotropic-free and satisfies the split identity") {
    auto g = grid();
    for (int s = 0; s < 20; ++s) {
        const State u = project_H(rand_state(g, 2 * s));
        const State v = project_H(rand_state(g, 2 * s + 1));
        const VectorField2 j2 = interaction_j2(u.v, v.v);
        CHECK(norm_l2(vertical_mean(j2)) <= 1e-10 * std::max(1.0, norm_l2(j2)));
    }
    // J2 = B2(u, v~) + (u~.grad) vbar - A3 J1 up to vertical quadrature error
    const State u = project_H(rand_state(g, 101));
    const State v = project_H(rand_state(g, 102));
    const VectorField2 j2 = interaction_j2(u.v, v.v);
    AdvectionContext ctx(u.v);
    const VectorField2 vt = dealias(baroclinic(v.v));
    const VectorField2 ut = dealias(baroclinic(u.v));
    const VectorField2 vb = dealias(barotropic(v.v));
    VectorField2 ref{advect(ctx, vt.c1), advect(ctx, vt.c2)};
    ref.c1 = ref.c1 + ut.c1 * ddx(vb.c1) + ut.c2 * ddy(vb.c1);
    ref.c2 = ref.c2 + ut.c1 * ddx(vb.c2) + ut.c2 * ddy(vb.c2);
    const HVector2 j1 = interaction_j1(u.v, v.v);
    ref.c1 = ref.c1 - extend_z(j1.c1);
    ref.c2 = ref.c2 - extend_z(j1.c2);
    CHECK(norm_l2(ref - j2) <= 0.05 * norm_l2(j2));
}

TEST_CASE("barotropic consistency: A2 of the advection matches the J1 form") {
    // manufactured check: the A2-average of the full advective tendency equals
    // the barotropic advection (vbar.grad)vbar + J1 to discretization order
    auto g = Grid::make(2.0 * std::numbers::pi, 1.0, 16, 16, 17);
    const State u = project_H(synth_state(g, 611, 0, 4, 2));
    AdvectionContext ctx(u.v);
    const VectorField2 vt = dealias(u.v);
    const VectorField2 full{advect(ctx, vt.c1), advect(ctx, vt.c2)};
    const HVector2 a2full = vertical_mean(full);

    const HVector2 vbar = vertical_mean(dealias(u.v));
    const HVector2 j1 = interaction_j1(u.v, u.v);
    const Vec d1 = a2full.c1.v - vbar.c1.v.cwiseProduct(ddx(vbar.c1).v) -
                   vbar.c2.v.cwiseProduct(ddy(vbar.c1).v) - j1.c1.v;
    const Vec d2 = a2full.c2.v - vbar.c1.v.cwiseProduct(ddx(vbar.c2).v) -
                   vbar.c2.v.cwiseProduct(ddy(vbar.c2).v) - j1.c2.v;
    const double scale = std::sqrt(dot_h(a2full, a2full));
    const double diff = std::sqrt(g->qh * (d1.squaredNorm() + d2.squaredNorm()));
    CHECK(diff <= 0.05 * scale);
}

TEST_CASE("advection adjoints are exact") {
    auto g = grid();
    const State u = project_H(rand_state(g, 71));
    const State r = project_H(rand_state(g, 72));
    const State x = project_H(rand_state(g, 73));
    const double scale = norm_h1(u) * norm_h1(r) * norm_h1(x);

    AdvectionContext ctx(u.v);
    CHECK(std::abs(dot(apply_B(u, r), x) - dot(r, adjB_advect(ctx, x))) <= 1e-10 * scale);
    CHECK(std::abs(dot(apply_B(r, u), x) - dot(r, adjB_transport(u, x))) <= 1e-10 * scale);

    const PhysicalParams p = params();
    CHECK(std::abs(dot(apply_E(r, p), x) - dot(r, adj_E(x, p))) <=
          1e-11 * norm_l2(r) * norm_l2(x));
}
