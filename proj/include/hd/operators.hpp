#pragma once

#include "hd/field.hpp"

namespace hd {

struct PhysicalParams {
    double mu_v = 1.0;     // horizontal viscosity
    double nu_v = 1.0;     // vertical viscosity
    double mu_T = 1.0;     // horizontal diffusivity
    double nu_T = 1.0;     // vertical diffusivity
    double f_cor = 0.0;    // Coriolis parameter
    double beta_T_g = 0.0; // thermal expansion x gravity
    double alpha = 0.0;    // Robin coefficient on the surface, >= 0

    void validate() const;
};

// Time-dependent deterministic source; evaluated as cos(omega t) * base.
// The base profile is projected at construction so F_U lands in H.
struct Forcing {
    State base;      // empty grid pointer means "no forcing"
    double omega = 0.0;

    bool enabled() const { return static_cast<bool>(base.grid()); }
    State eval(const GridPtr& g, double t) const;
};

// ---- hydrostatic Helmholtz-Leray projection -------------------------------

// Removes the gradient part of the barotropic mode so that
// div \int_-h^0 v dz = 0; temperature is untouched. Idempotent and
// self-adjoint under the quadrature inner product.
VectorField2 project_velocity(const VectorField2& v);
State project_H(const State& u);

// residual of the divergence-free constraint, |div A2 v|_L2(M0)
double divergence_residual(const VectorField2& v);

// ---- vertical velocity -----------------------------------------------------

// w(v)(x,y,z) = -int_{-h}^z div v dz' via cumulative trapezoid; w(-h) = 0
// exactly by construction.
ScalarField vertical_velocity(const VectorField2& v);

// ---- viscous operator A ----------------------------------------------------

// A U = (-mu_v lap - nu_v d_zz) v, (-mu_T lap - nu_T d_zz) T with Neumann
// vertical closures for v, Neumann at the bottom and Robin d_z T + alpha T = 0
// at the surface for T.
State apply_A(const State& u, const PhysicalParams& p);

// (I + dt*weight*A)^-1 via per-horizontal-mode tridiagonal solves
State solve_A_implicit(const State& u, const PhysicalParams& p, double dt, double weight);

// quadrature Dirichlet form a1(v,v#) + a2(T,T#); equals (AU, U#) exactly
double dirichlet_form(const State& a, const State& b, const PhysicalParams& p);

// ---- advection -------------------------------------------------------------

// Precomputed advecting-flow data. All product inputs are 2/3-truncated and
// the vertical transport uses a skew form, so b(U,f,f) = 0 holds at machine
// precision rather than to discretization order.
struct AdvectionContext {
    VectorField2 vt;    // truncated advecting velocity
    ScalarField w;      // vertical velocity of vt
    ScalarField d;      // horizontal divergence of vt

    explicit AdvectionContext(const VectorField2& v);
};

// (v.grad) f + w d_z f in the skew discretization, input truncated internally
ScalarField advect(const AdvectionContext& ctx, const ScalarField& f);

// trilinear form b(U, U#, Ub) by quadrature
double trilinear_b(const State& u, const State& us, const State& ub);

// B(U, U#) = P_H (advection of U# by U); apply_B(u) = B(u,u)
State apply_B(const State& u, const State& us);
inline State apply_B(const State& u) { return apply_B(u, u); }

// W-adjoint of R -> B(ubar, R); exact through the antisymmetry of b
State adjB_advect(const AdvectionContext& ctx, const State& x);
// W-adjoint of R -> B(R, ubar)
State adjB_transport(const State& ubar, const State& x);

// ---- pressure coupling, Coriolis, forcing ----------------------------------

State apply_Apr(const State& u, const PhysicalParams& p);
State apply_E(const State& u, const PhysicalParams& p);
State apply_F(const State& u, const PhysicalParams& p, const Forcing& f, double t);

State adj_Apr(const State& x, const PhysicalParams& p);
State adj_E(const State& x, const PhysicalParams& p);

// ---- barotropic / baroclinic interaction -----------------------------------

struct BarotropicSplit {
    HVector2 vbar;
    VectorField2 vtilde;
};
BarotropicSplit split_barotropic(const VectorField2& v);

// J1(u,v) = A2[(u~ . grad) v~ + (div u~) v~], a surface field
HVector2 interaction_j1(const VectorField2& u, const VectorField2& v);

// J2(u,v): baroclinic remainder R[B2-advection of v by u]; A2 J2 = 0 exactly
VectorField2 interaction_j2(const VectorField2& u, const VectorField2& v);

} // namespace hd
