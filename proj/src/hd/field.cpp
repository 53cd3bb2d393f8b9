#include "hd/field.hpp"

#include <cmath>
#include <numbers>

namespace hd {

ScalarField random_scalar(const GridPtr& g, std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t slot_base, double kmax_frac, int z_modes) {
    const int H = g->hsize();
    const int kmx = std::max(1, static_cast<int>(kmax_frac * (g->Nx / 2)));
    const int kmy = std::max(1, static_cast<int>(kmax_frac * (g->Ny / 2)));

    Mat out = Mat::Zero(H, g->Nz);
    Mat white(H, 1);
    for (int m = 0; m <= z_modes; ++m) {
        for (int r = 0; r < H; ++r)
            white(r, 0) = rng::normal(seed, stream, slot_base + m, static_cast<std::uint64_t>(r));
        CMat s = g->to_spec(white);
        for (int j = 0; j < g->Ny; ++j) {
            const int ny = (j <= g->Ny / 2) ? j : j - g->Ny;
            for (int i = 0; i < g->Nx; ++i) {
                const int nx = (i <= g->Nx / 2) ? i : i - g->Nx;
                const int r = i + g->Nx * j;
                double w = 0.0;
                if (std::abs(nx) <= kmx && std::abs(ny) <= kmy &&
                    i != g->Nx / 2 && j != g->Ny / 2) {
                    const double q = (static_cast<double>(nx) * nx) / (kmx * kmx) +
                                     (static_cast<double>(ny) * ny) / (kmy * kmy);
                    w = std::exp(-1.5 * q);
                }
                s.row(r) *= w;
            }
        }
        const Mat c = g->to_phys(s);
        const double zdecay = std::exp(-0.4 * m);
        for (int k = 0; k < g->Nz; ++k) {
            const double zb = std::cos(m * std::numbers::pi * (g->z(k) + g->depth) / g->depth);
            out.col(k) += zdecay * zb * c.col(0);
        }
    }
    ScalarField f(g, std::move(out));
    const double nrm = std::sqrt(dot(f, f));
    if (nrm > 0.0) f.v /= nrm / std::sqrt(g->L * g->L * g->depth);
    return f;
}

State random_state(const GridPtr& g, std::uint64_t seed, std::uint64_t stream,
                   double kmax_frac, int z_modes) {
    State u(g);
    u.v.c1 = random_scalar(g, seed, stream, 101, kmax_frac, z_modes);
    u.v.c2 = random_scalar(g, seed, stream, 211, kmax_frac, z_modes);
    u.T = random_scalar(g, seed, stream, 307, kmax_frac, z_modes);
    return u;
}

ScalarField mode_field(const GridPtr& g, int nx, int ny, double phase, int jz) {
    ScalarField f(g);
    const double two_pi = 2.0 * std::numbers::pi;
    for (int k = 0; k < g->Nz; ++k) {
        const double zb = std::cos(jz * std::numbers::pi * (g->z(k) + g->depth) / g->depth);
        for (int j = 0; j < g->Ny; ++j) {
            const double y = g->L * j / g->Ny;
            for (int i = 0; i < g->Nx; ++i) {
                const double x = g->L * i / g->Nx;
                f.v(i + g->Nx * j, k) =
                    std::cos(two_pi * (nx * x + ny * y) / g->L + phase) * zb;
            }
        }
    }
    return f;
}

} // namespace hd
