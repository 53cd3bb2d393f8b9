#pragma once

#include "hd/field.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace hd {

inline void require_finite(const ScalarField& f, const char* who) {
    if (!f.v.allFinite()) throw std::domain_error(std::string(who) + ": non-finite field values");
}
inline void require_finite(const VectorField2& f, const char* who) {
    require_finite(f.c1, who);
    require_finite(f.c2, who);
}
inline void require_finite(const State& u, const char* who) {
    require_finite(u.v, who);
    require_finite(u.T, who);
}

// ---- L2 and Sobolev norms --------------------------------------------------

inline double norm_l2(const ScalarField& f) { return std::sqrt(dot(f, f)); }
inline double norm_l2(const VectorField2& f) { return std::sqrt(dot(f, f)); }
inline double norm_l2(const State& u) { return std::sqrt(dot(u, u)); }
inline double norm_l2(const HField& f) { return std::sqrt(dot_h(f, f)); }
inline double norm_l2(const HVector2& f) { return std::sqrt(dot_h(f, f)); }

inline double sq_grad3(const ScalarField& f) {
    const ScalarField fx = ddx(f), fy = ddy(f), fz = ddz(f);
    return dot(fx, fx) + dot(fy, fy) + dot(fz, fz);
}
inline double sq_grad3(const VectorField2& f) { return sq_grad3(f.c1) + sq_grad3(f.c2); }
inline double sq_grad3(const State& u) { return sq_grad3(u.v) + sq_grad3(u.T); }

inline double sq_h2_semi(const ScalarField& f) {
    const ScalarField fx = ddx(f), fy = ddy(f), fz = ddz(f);
    const ScalarField fxx = ddx(fx), fyy = ddy(fy), fxy = ddy(fx);
    const ScalarField fxz = ddz(fx), fyz = ddz(fy), fzz = ddz(fz);
    return dot(fxx, fxx) + dot(fyy, fyy) + 2.0 * dot(fxy, fxy) +
           2.0 * dot(fxz, fxz) + 2.0 * dot(fyz, fyz) + dot(fzz, fzz);
}
inline double sq_h2_semi(const VectorField2& f) { return sq_h2_semi(f.c1) + sq_h2_semi(f.c2); }
inline double sq_h2_semi(const State& u) { return sq_h2_semi(u.v) + sq_h2_semi(u.T); }

template <class F> double norm_h1(const F& f) {
    return std::sqrt(dot(f, f) + sq_grad3(f));
}
template <class F> double norm_h2(const F& f) {
    return std::sqrt(dot(f, f) + sq_grad3(f) + sq_h2_semi(f));
}

// H1(M0) norm of a surface field
inline double norm_h1_surface(const HVector2& f) {
    const HField a = ddx(f.c1), b = ddy(f.c1), c = ddx(f.c2), d = ddy(f.c2);
    return std::sqrt(dot_h(f, f) + dot_h(a, a) + dot_h(b, b) + dot_h(c, c) + dot_h(d, d));
}

// ---- Lp --------------------------------------------------------------------

inline double norm_lp(const ScalarField& f, double p) {
    if (std::isinf(p)) return f.v.cwiseAbs().maxCoeff();
    const Mat a = f.v.cwiseAbs().array().pow(p).matrix();
    return std::pow(f.grid->qh * (a * f.grid->wz).sum(), 1.0 / p);
}
inline double norm_lp(const VectorField2& f, double p) {
    if (std::isinf(p)) return std::max(norm_lp(f.c1, p), norm_lp(f.c2, p));
    const Mat a = (f.c1.v.cwiseAbs().array().pow(p) + f.c2.v.cwiseAbs().array().pow(p)).matrix();
    return std::pow(f.c1.grid->qh * (a * f.c1.grid->wz).sum(), 1.0 / p);
}
inline double norm_lp(const State& u, double p) {
    if (std::isinf(p)) return std::max(norm_lp(u.v, p), norm_lp(u.T, p));
    const Mat a = (u.v.c1.v.cwiseAbs().array().pow(p) + u.v.c2.v.cwiseAbs().array().pow(p) +
                   u.T.v.cwiseAbs().array().pow(p))
                      .matrix();
    return std::pow(u.grid()->qh * (a * u.grid()->wz).sum(), 1.0 / p);
}

// ---- anisotropic L^q_x L^p_z ------------------------------------------------
// inner z-integral of component p-powers first, then the horizontal q-norm,
// exactly in the order the nested definition reads

namespace detail {
inline Vec inner_z(const Mat& ppow, const Grid& g, double p) {
    if (std::isinf(p)) return ppow.rowwise().maxCoeff();
    return (ppow * g.wz).array().pow(1.0 / p).matrix();
}
inline double outer_xy(const Vec& inner, const Grid& g, double q) {
    if (std::isinf(q)) return inner.maxCoeff();
    return std::pow(g.qh * inner.array().pow(q).sum(), 1.0 / q);
}
} // namespace detail

inline double norm_aniso(const ScalarField& f, double q, double p) {
    const Mat ppow = std::isinf(p) ? Mat(f.v.cwiseAbs())
                                   : Mat(f.v.cwiseAbs().array().pow(p).matrix());
    return detail::outer_xy(detail::inner_z(ppow, *f.grid, p), *f.grid, q);
}
inline double norm_aniso(const VectorField2& f, double q, double p) {
    const auto& g = *f.c1.grid;
    Mat ppow;
    if (std::isinf(p))
        ppow = f.c1.v.cwiseAbs().cwiseMax(f.c2.v.cwiseAbs());
    else
        ppow = (f.c1.v.cwiseAbs().array().pow(p) + f.c2.v.cwiseAbs().array().pow(p)).matrix();
    return detail::outer_xy(detail::inner_z(ppow, g, p), g, q);
}

// esssup over z of the horizontal L2 norm (the L^inf_z L^2_x object)
inline double norm_linfz_l2x(const ScalarField& f) {
    double best = 0.0;
    for (int k = 0; k < f.grid->Nz; ++k)
        best = std::max(best, std::sqrt(f.grid->qh * f.v.col(k).squaredNorm()));
    return best;
}
inline double norm_linfz_l2x(const VectorField2& f) {
    double best = 0.0;
    for (int k = 0; k < f.c1.grid->Nz; ++k)
        best = std::max(best, std::sqrt(f.c1.grid->qh * (f.c1.v.col(k).squaredNorm() +
                                                         f.c2.v.col(k).squaredNorm())));
    return best;
}

// ---- generic entry point ----------------------------------------------------

enum class NormKind { L2, H1, H2, Lp, Aniso };

template <class F>
double norm(const F& f, NormKind kind, double p = 2.0, double q = 2.0) {
    require_finite(f, "norm");
    switch (kind) {
        case NormKind::L2: return norm_l2(f);
        case NormKind::H1: return norm_h1(f);
        case NormKind::H2: return norm_h2(f);
        case NormKind::Lp: return norm_lp(f, p);
        case NormKind::Aniso: return norm_aniso(f, q, p);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

} // namespace hd
