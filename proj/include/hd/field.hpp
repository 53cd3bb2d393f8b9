#pragma once

#include "hd/grid.hpp"
#include "hd/rng.hpp"

#include <cstdint>
#include <stdexcept>
#include <utility>

namespace hd {

// Scalar sample on the full 3D grid, physical representation.
// Spectral-horizontal data lives in SpecScalar; conversions go through
// Grid::to_spec / to_phys. Values are treated as immutable after
// construction by convention: operations return new fields.
struct ScalarField {
    GridPtr grid;
    Mat v;   // (Nx*Ny) x Nz

    ScalarField() = default;
    explicit ScalarField(GridPtr g) : grid(std::move(g)), v(Mat::Zero(grid->hsize(), grid->Nz)) {}
    ScalarField(GridPtr g, Mat data) : grid(std::move(g)), v(std::move(data)) {}

    double operator()(int i, int j, int k) const { return v(i + grid->Nx * j, k); }
};

// Horizontal-spectral representation of a scalar field.
struct SpecScalar {
    GridPtr grid;
    CMat c;  // (Nx*Ny) x Nz, row = horizontal mode

    SpecScalar() = default;
    SpecScalar(GridPtr g, CMat data) : grid(std::move(g)), c(std::move(data)) {}
};

inline SpecScalar to_spec(const ScalarField& f) { return {f.grid, f.grid->to_spec(f.v)}; }
inline ScalarField to_phys(const SpecScalar& s) { return {s.grid, s.grid->to_phys(s.c)}; }

// Two-component horizontal vector field (e.g. velocity) on the 3D grid.
struct VectorField2 {
    ScalarField c1, c2;

    VectorField2() = default;
    explicit VectorField2(GridPtr g) : c1(g), c2(std::move(g)) {}
    VectorField2(ScalarField a, ScalarField b) : c1(std::move(a)), c2(std::move(b)) {}

    const GridPtr& grid() const { return c1.grid; }
};

// Solution variable U = (v, T).
struct State {
    VectorField2 v;
    ScalarField T;

    State() = default;
    explicit State(GridPtr g) : v(g), T(std::move(g)) {}
    State(VectorField2 vel, ScalarField temp) : v(std::move(vel)), T(std::move(temp)) {}

    const GridPtr& grid() const { return v.c1.grid; }
};

// 2D (surface) fields for barotropic quantities.
struct HField {
    GridPtr grid;
    Vec v;   // (Nx*Ny)

    HField() = default;
    explicit HField(GridPtr g) : grid(std::move(g)), v(Vec::Zero(grid->hsize())) {}
    HField(GridPtr g, Vec data) : grid(std::move(g)), v(std::move(data)) {}
};

struct HVector2 {
    HField c1, c2;
    const GridPtr& grid() const { return c1.grid; }
};

// ---- arithmetic -----------------------------------------------------------

inline ScalarField operator+(const ScalarField& a, const ScalarField& b) { return {a.grid, a.v + b.v}; }
inline ScalarField operator-(const ScalarField& a, const ScalarField& b) { return {a.grid, a.v - b.v}; }
inline ScalarField operator*(double s, const ScalarField& a) { return {a.grid, s * a.v}; }
inline ScalarField operator*(const ScalarField& a, const ScalarField& b) { return {a.grid, a.v.cwiseProduct(b.v)}; }

inline VectorField2 operator+(const VectorField2& a, const VectorField2& b) { return {a.c1 + b.c1, a.c2 + b.c2}; }
inline VectorField2 operator-(const VectorField2& a, const VectorField2& b) { return {a.c1 - b.c1, a.c2 - b.c2}; }
inline VectorField2 operator*(double s, const VectorField2& a) { return {s * a.c1, s * a.c2}; }

inline State operator+(const State& a, const State& b) { return {a.v + b.v, a.T + b.T}; }
inline State operator-(const State& a, const State& b) { return {a.v - b.v, a.T - b.T}; }
inline State operator*(double s, const State& a) { return {s * a.v, s * a.T}; }

inline void axpy(double a, const State& x, State& y) {
    y.v.c1.v += a * x.v.c1.v;
    y.v.c2.v += a * x.v.c2.v;
    y.T.v += a * x.T.v;
}

// ---- quadrature -----------------------------------------------------------

// L2(M) inner product by exact spectral quadrature in x,y and trapezoid in z
inline double dot(const ScalarField& a, const ScalarField& b) {
    return a.grid->qh * (a.v.cwiseProduct(b.v) * a.grid->wz).sum();
}
inline double dot(const VectorField2& a, const VectorField2& b) {
    return dot(a.c1, b.c1) + dot(a.c2, b.c2);
}
inline double dot(const State& a, const State& b) {
    return dot(a.v, b.v) + dot(a.T, b.T);
}
inline double dot_h(const HField& a, const HField& b) {
    return a.grid->qh * a.v.dot(b.v);
}
inline double dot_h(const HVector2& a, const HVector2& b) {
    return dot_h(a.c1, b.c1) + dot_h(a.c2, b.c2);
}

inline double integral(const ScalarField& f) {
    return f.grid->qh * (f.v * f.grid->wz).sum();
}

// ---- averaging operators A2, A3 and remainder R ---------------------------

inline HField vertical_mean(const ScalarField& f) {
    return {f.grid, Vec((f.v * f.grid->wz) / f.grid->depth)};
}
inline HVector2 vertical_mean(const VectorField2& f) {
    return {vertical_mean(f.c1), vertical_mean(f.c2)};
}

inline ScalarField extend_z(const HField& f) {
    ScalarField out(f.grid);
    out.v = f.v.replicate(1, f.grid->Nz);
    return out;
}
inline VectorField2 extend_z(const HVector2& f) {
    return {extend_z(f.c1), extend_z(f.c2)};
}

inline ScalarField barotropic(const ScalarField& f) { return extend_z(vertical_mean(f)); }
inline VectorField2 barotropic(const VectorField2& f) {
    return {barotropic(f.c1), barotropic(f.c2)};
}
inline ScalarField baroclinic(const ScalarField& f) { return f - barotropic(f); }
inline VectorField2 baroclinic(const VectorField2& f) {
    return {baroclinic(f.c1), baroclinic(f.c2)};
}

// ---- spectral helpers -----------------------------------------------------

inline ScalarField apply_mult(const ScalarField& f, const Vec& mask) {
    CMat s = f.grid->to_spec(f.v);
    s.array().colwise() *= mask.array().cast<Cplx>();
    return {f.grid, f.grid->to_phys(s)};
}

inline ScalarField ddx(const ScalarField& f) {
    CMat s = f.grid->to_spec(f.v);
    s.array().colwise() *= f.grid->dx_mult.array();
    return {f.grid, f.grid->to_phys(s)};
}
inline ScalarField ddy(const ScalarField& f) {
    CMat s = f.grid->to_spec(f.v);
    s.array().colwise() *= f.grid->dy_mult.array();
    return {f.grid, f.grid->to_phys(s)};
}
inline ScalarField lap_h(const ScalarField& f) {
    return apply_mult(f, f.grid->lap_mult);
}
inline ScalarField div_h(const VectorField2& f) { return ddx(f.c1) + ddy(f.c2); }
inline VectorField2 grad_h(const ScalarField& f) { return {ddx(f), ddy(f)}; }

inline ScalarField ddz(const ScalarField& f) {
    return {f.grid, f.v * f.grid->Dz.transpose()};
}

inline HField ddx(const HField& f) {
    const auto& g = f.grid;
    CMat s = g->to_spec(Mat(f.v));
    s.array().colwise() *= g->dx_mult.array();
    return {g, Vec(g->to_phys(s).col(0))};
}
inline HField ddy(const HField& f) {
    const auto& g = f.grid;
    CMat s = g->to_spec(Mat(f.v));
    s.array().colwise() *= g->dy_mult.array();
    return {g, Vec(g->to_phys(s).col(0))};
}
inline HField div_h(const HVector2& f) {
    return {f.grid(), Vec(ddx(f.c1).v + ddy(f.c2).v)};
}

// zero all modes at or beyond the Nyquist index
inline ScalarField band_limit(const ScalarField& f) {
    return apply_mult(f, f.grid->bandlimit_mask);
}
inline State band_limit(const State& u) {
    return {{band_limit(u.v.c1), band_limit(u.v.c2)}, band_limit(u.T)};
}

// 2/3-rule truncation used around products
inline ScalarField dealias(const ScalarField& f) {
    return apply_mult(f, f.grid->dealias_mask);
}
inline VectorField2 dealias(const VectorField2& f) { return {dealias(f.c1), dealias(f.c2)}; }
inline State dealias(const State& u) { return {dealias(u.v), dealias(u.T)}; }

// ---- synthetic fields -----------------------------------------------------

// Band-limited random scalar: white noise shaped by a smooth spectral decay
// horizontally, low cosine modes vertically. Reproducible from the rng key.
ScalarField random_scalar(const GridPtr& g, std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t slot_base, double kmax_frac = 1.0 / 3.0,
                          int z_modes = 3);

State random_state(const GridPtr& g, std::uint64_t seed, std::uint64_t stream,
                   double kmax_frac = 1.0 / 3.0, int z_modes = 3);

// f(x,y,z) = cos(2 pi (nx x + ny y)/L + phase) * cos(jz pi (z+depth)/depth)
ScalarField mode_field(const GridPtr& g, int nx, int ny, double phase = 0.0, int jz = 0);

} // namespace hd
