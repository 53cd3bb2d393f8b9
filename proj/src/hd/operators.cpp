#include "hd/operators.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace hd {

void PhysicalParams::validate() const {
    if (!(mu_v > 0.0 && nu_v > 0.0 && mu_T > 0.0 && nu_T > 0.0))
        throw std::invalid_argument("params: viscosities and diffusivities must be positive");
    if (alpha < 0.0) throw std::invalid_argument("params: alpha must be >= 0");
}

State Forcing::eval(const GridPtr& g, double t) const {
    if (!enabled()) return State(g);
    return std::cos(omega * t) * base;
}

// ---- projection ------------------------------------------------------------

VectorField2 project_velocity(const VectorField2& v) {
    const auto& g = v.grid();
    const HVector2 vb = vertical_mean(v);
    CMat s1 = g->to_spec(Mat(vb.c1.v));
    CMat s2 = g->to_spec(Mat(vb.c2.v));
    CVec div_hat = s1.col(0).cwiseProduct(g->dx_mult) + s2.col(0).cwiseProduct(g->dy_mult);
    CVec phi_hat = CVec::Zero(g->hsize());
    for (int r = 0; r < g->hsize(); ++r)
        if (g->lap_mult(r) != 0.0) phi_hat(r) = div_hat(r) / g->lap_mult(r);
    CMat gx = phi_hat.cwiseProduct(g->dx_mult);
    CMat gy = phi_hat.cwiseProduct(g->dy_mult);
    const Vec px = g->to_phys(gx).col(0);
    const Vec py = g->to_phys(gy).col(0);
    VectorField2 out = v;
    out.c1.v.colwise() -= px;
    out.c2.v.colwise() -= py;
    return out;
}

State project_H(const State& u) { return {project_velocity(u.v), u.T}; }

double divergence_residual(const VectorField2& v) {
    const HVector2 vb = vertical_mean(v);
    const HField d = div_h(vb);
    return std::sqrt(d.grid->qh * d.v.squaredNorm());
}

// ---- vertical velocity -----------------------------------------------------

ScalarField vertical_velocity(const VectorField2& v) {
    const ScalarField d = div_h(v);
    return {v.grid(), Mat(-(d.v * v.grid()->Ccum.transpose()))};
}

// ---- viscous operator ------------------------------------------------------

namespace {

Mat apply_component_A(const ScalarField& f, double mu, double nu, const Mat& Lz) {
    CMat s = f.grid->to_spec(f.v);
    s.array().colwise() *= (-mu * f.grid->lap_mult.array()).cast<Cplx>();
    Mat horiz = f.grid->to_phys(s);   // -mu * lap f
    return horiz + nu * (f.v * Lz.transpose());
}

// Thomas solve of (a I + c Lz) x = rhs for every horizontal mode row;
// Lz is tridiagonal by construction.
void tridiag_solve(CMat& rhs, const Vec& a, double c, const Mat& Lz) {
    const int Nz = static_cast<int>(Lz.rows());
    const long H = rhs.rows();
    Vec diag(Nz), sub(Nz), sup(Nz);
    for (int k = 0; k < Nz; ++k) {
        diag(k) = c * Lz(k, k);
        sub(k) = (k > 0) ? c * Lz(k, k - 1) : 0.0;
        sup(k) = (k < Nz - 1) ? c * Lz(k, k + 1) : 0.0;
    }
    Vec cp(Nz);
    CVec x(Nz);
    for (long r = 0; r < H; ++r) {
        const double ar = a(r);
        double piv = diag(0) + ar;
        cp(0) = sup(0) / piv;
        x(0) = rhs(r, 0) / piv;
        for (int k = 1; k < Nz; ++k) {
            piv = diag(k) + ar - sub(k) * cp(k - 1);
            cp(k) = sup(k) / piv;
            x(k) = (rhs(r, k) - sub(k) * x(k - 1)) / piv;
        }
        for (int k = Nz - 2; k >= 0; --k) x(k) -= cp(k) * x(k + 1);
        rhs.row(r) = x.transpose();
    }
}

ScalarField solve_component_implicit(const ScalarField& f, double mu, double nu,
                                     const Mat& Lz, double dtw) {
    const auto& g = f.grid;
    CMat s = g->to_spec(f.v);
    Vec a = 1.0 + dtw * mu * (-g->lap_mult.array());
    tridiag_solve(s, a, dtw * nu, Lz);
    return {g, g->to_phys(s)};
}

} // namespace

State apply_A(const State& u, const PhysicalParams& p) {
    const auto& g = u.grid();
    const Mat LzT = g->lz_robin(p.alpha);
    State out(g);
    out.v.c1.v = apply_component_A(u.v.c1, p.mu_v, p.nu_v, g->Lz_neumann);
    out.v.c2.v = apply_component_A(u.v.c2, p.mu_v, p.nu_v, g->Lz_neumann);
    out.T.v = apply_component_A(u.T, p.mu_T, p.nu_T, LzT);
    return out;
}

State solve_A_implicit(const State& u, const PhysicalParams& p, double dt, double weight) {
    const double dtw = dt * weight;
    if (dtw < 0.0) throw std::invalid_argument("solve_A_implicit: dt*weight must be >= 0");
    if (dtw == 0.0) return u;
    const auto& g = u.grid();
    State out(g);
    out.v.c1 = solve_component_implicit(u.v.c1, p.mu_v, p.nu_v, g->Lz_neumann, dtw);
    out.v.c2 = solve_component_implicit(u.v.c2, p.mu_v, p.nu_v, g->Lz_neumann, dtw);
    out.T = solve_component_implicit(u.T, p.mu_T, p.nu_T, g->lz_robin(p.alpha), dtw);
    return out;
}

namespace {

// staggered-difference Dirichlet form matching the ghost-point closures
double dirichlet_component(const ScalarField& a, const ScalarField& b, double mu,
                           double nu, double alpha_eff) {
    const auto& g = a.grid;
    double horiz = dot(ddx(a), ddx(b)) + dot(ddy(a), ddy(b));
    double vert = 0.0;
    for (int k = 0; k + 1 < g->Nz; ++k) {
        const Vec da = a.v.col(k + 1) - a.v.col(k);
        const Vec db = b.v.col(k + 1) - b.v.col(k);
        vert += da.dot(db) / g->dz;
    }
    vert *= g->qh;
    double bnd = 0.0;
    if (alpha_eff != 0.0)
        bnd = alpha_eff * g->qh * a.v.col(g->Nz - 1).dot(b.v.col(g->Nz - 1));
    return mu * horiz + nu * (vert + bnd);
}

} // namespace

double dirichlet_form(const State& a, const State& b, const PhysicalParams& p) {
    return dirichlet_component(a.v.c1, b.v.c1, p.mu_v, p.nu_v, 0.0) +
           dirichlet_component(a.v.c2, b.v.c2, p.mu_v, p.nu_v, 0.0) +
           dirichlet_component(a.T, b.T, p.mu_T, p.nu_T, p.alpha);
}

// ---- advection -------------------------------------------------------------

AdvectionContext::AdvectionContext(const VectorField2& v) : vt(dealias(v)) {
    d = div_h(vt);
    w = ScalarField{v.grid(), Mat(-(d.v * v.grid()->Ccum.transpose()))};
}

namespace {

// skew-symmetrized vertical transport: consistent with w d_z f and exactly
// energy-compatible with the horizontal divergence under the trapezoid rule
Mat vertical_transport(const Grid& g, const Mat& w, const Mat& d, const Mat& f) {
    const Mat dzf = f * g.Dz.transpose();
    const Mat fw = (f.array().rowwise() * g.wz.transpose().array()).matrix();
    const Mat y = ((w.cwiseProduct(fw) * g.Dz).array().rowwise() /
                   g.wz.transpose().array()).matrix();
    return 0.5 * (w.cwiseProduct(dzf) - y) + 0.5 * d.cwiseProduct(f);
}

} // namespace

ScalarField advect(const AdvectionContext& ctx, const ScalarField& f) {
    const auto& g = f.grid;
    const ScalarField ft = dealias(f);
    Mat out = ctx.vt.c1.v.cwiseProduct(ddx(ft).v) + ctx.vt.c2.v.cwiseProduct(ddy(ft).v);
    out += vertical_transport(*g, ctx.w.v, ctx.d.v, ft.v);
    return {g, std::move(out)};
}

double trilinear_b(const State& u, const State& us, const State& ub) {
    AdvectionContext ctx(u.v);
    const State tb = dealias(ub);
    return dot(advect(ctx, us.v.c1), tb.v.c1) + dot(advect(ctx, us.v.c2), tb.v.c2) +
           dot(advect(ctx, us.T), tb.T);
}

State apply_B(const State& u, const State& us) {
    AdvectionContext ctx(u.v);
    VectorField2 adv{dealias(advect(ctx, us.v.c1)), dealias(advect(ctx, us.v.c2))};
    ScalarField advT = dealias(advect(ctx, us.T));
    return {project_velocity(adv), std::move(advT)};
}

State adjB_advect(const AdvectionContext& ctx, const State& x) {
    const State px = project_H(x);
    State out(x.grid());
    out.v.c1 = -1.0 * dealias(advect(ctx, px.v.c1));
    out.v.c2 = -1.0 * dealias(advect(ctx, px.v.c2));
    out.T = -1.0 * dealias(advect(ctx, px.T));
    return out;
}

State adjB_transport(const State& ubar, const State& x) {
    const auto& g = x.grid();
    const State ut = dealias(ubar);
    const State px = dealias(project_H(x));

    // horizontal: sum_j x_j grad u_j
    Mat a1 = px.v.c1.v.cwiseProduct(ddx(ut.v.c1).v) + px.v.c2.v.cwiseProduct(ddx(ut.v.c2).v) +
             px.T.v.cwiseProduct(ddx(ut.T).v);
    Mat a2 = px.v.c1.v.cwiseProduct(ddy(ut.v.c1).v) + px.v.c2.v.cwiseProduct(ddy(ut.v.c2).v) +
             px.T.v.cwiseProduct(ddy(ut.T).v);

    // vertical: pairing against the skew transport, pulled back through the
    // cumulative trapezoid onto the divergence of the advecting field
    Mat psi1 = Mat::Zero(g->hsize(), g->Nz);
    Mat psi2 = Mat::Zero(g->hsize(), g->Nz);
    auto accumulate = [&](const Mat& s, const Mat& xc) {
        const Mat dzs = s * g->Dz.transpose();
        const Mat dzx = xc * g->Dz.transpose();
        psi1 += 0.5 * (dzs.cwiseProduct(xc) - dzx.cwiseProduct(s));
        psi2 += 0.5 * s.cwiseProduct(xc);
    };
    accumulate(ut.v.c1.v, px.v.c1.v);
    accumulate(ut.v.c2.v, px.v.c2.v);
    accumulate(ut.T.v, px.T.v);
    const Mat gz = psi2 - psi1 * g->Ccum_star.transpose();
    const ScalarField gzf{g, gz};
    a1 -= ddx(gzf).v;
    a2 -= ddy(gzf).v;

    State out(g);
    out.v.c1 = dealias(ScalarField{g, std::move(a1)});
    out.v.c2 = dealias(ScalarField{g, std::move(a2)});
    return out;
}

// ---- pressure coupling, Coriolis, forcing ----------------------------------

State apply_Apr(const State& u, const PhysicalParams& p) {
    const auto& g = u.grid();
    const Mat xi = u.T.v * g->Ktop.transpose();   // int_z^0 T dz'
    const ScalarField xif{g, xi};
    VectorField2 vel{-p.beta_T_g * ddx(xif), -p.beta_T_g * ddy(xif)};
    return {project_velocity(vel), ScalarField(g)};
}

State adj_Apr(const State& x, const PhysicalParams& p) {
    const auto& g = x.grid();
    const State px = project_H(x);
    const ScalarField d = div_h(px.v);
    State out(g);
    out.T.v = p.beta_T_g * (d.v * g->Ktop_star.transpose());
    return out;
}

State apply_E(const State& u, const PhysicalParams& p) {
    const auto& g = u.grid();
    if (p.f_cor == 0.0) return State(g);
    VectorField2 rot{-p.f_cor * u.v.c2, p.f_cor * u.v.c1};
    return {project_velocity(rot), ScalarField(g)};
}

State adj_E(const State& x, const PhysicalParams& p) {
    const auto& g = x.grid();
    if (p.f_cor == 0.0) return State(g);
    const VectorField2 pv = project_velocity(x.v);
    return {{p.f_cor * pv.c2, -1.0 * (p.f_cor * pv.c1)}, ScalarField(g)};
}

State apply_F(const State& u, const PhysicalParams& p, const Forcing& f, double t) {
    State out = apply_Apr(u, p) + apply_E(u, p);
    if (f.enabled()) out = out + f.eval(u.grid(), t);
    return out;
}

// ---- barotropic / baroclinic -----------------------------------------------

BarotropicSplit split_barotropic(const VectorField2& v) {
    BarotropicSplit s;
    s.vbar = vertical_mean(v);
    s.vtilde = baroclinic(v);
    return s;
}

HVector2 interaction_j1(const VectorField2& u, const VectorField2& v) {
    const VectorField2 ut = dealias(baroclinic(u));
    const VectorField2 vt = dealias(baroclinic(v));
    const ScalarField du = div_h(ut);
    const ScalarField f1 = ut.c1 * ddx(vt.c1) + ut.c2 * ddy(vt.c1) + du * vt.c1;
    const ScalarField f2 = ut.c1 * ddx(vt.c2) + ut.c2 * ddy(vt.c2) + du * vt.c2;
    return {vertical_mean(f1), vertical_mean(f2)};
}

VectorField2 interaction_j2(const VectorField2& u, const VectorField2& v) {
    AdvectionContext ctx(u);
    const VectorField2 vt = dealias(v);
    VectorField2 adv{advect(ctx, vt.c1), advect(ctx, vt.c2)};
    return baroclinic(adv);
}

} // namespace hd
