#include "hd/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hd {

namespace {

// signed wavenumber index for DFT bin n of an even-size transform
int signed_index(int n, int N) { return (n <= N / 2) ? n : n - N; }

} // namespace

std::shared_ptr<const Grid> Grid::make(double L, double depth,
                                       int Nx, int Ny, int Nz) {
    if (!(L > 0.0) || !(depth > 0.0))
        throw std::invalid_argument("grid: L and depth must be positive");
    if (Nx < 4 || Ny < 4 || Nx % 2 != 0 || Ny % 2 != 0)
        throw std::invalid_argument("grid: Nx, Ny must be even and >= 4");
    if (Nz < 3) throw std::invalid_argument("grid: Nz must be >= 3");

    auto g = std::shared_ptr<Grid>(new Grid());
    g->L = L;
    g->depth = depth;
    g->Nx = Nx;
    g->Ny = Ny;
    g->Nz = Nz;
    g->dz = depth / (Nz - 1);
    g->qh = L * L / (static_cast<double>(Nx) * Ny);

    g->wz = Vec::Constant(Nz, g->dz);
    g->wz(0) = 0.5 * g->dz;
    g->wz(Nz - 1) = 0.5 * g->dz;

    const Cplx I(0.0, 1.0);
    const double two_pi = 2.0 * std::numbers::pi;

    g->Fx = CMat(Nx, Nx);
    g->Bx = CMat(Nx, Nx);
    for (int k = 0; k < Nx; ++k)
        for (int i = 0; i < Nx; ++i) {
            const double ph = two_pi * k * i / Nx;
            g->Fx(k, i) = std::exp(-I * ph);
            g->Bx(i, k) = std::exp(I * ph) / static_cast<double>(Nx);
        }
    g->Fy = CMat(Ny, Ny);
    g->By = CMat(Ny, Ny);
    for (int k = 0; k < Ny; ++k)
        for (int j = 0; j < Ny; ++j) {
            const double ph = two_pi * k * j / Ny;
            g->Fy(k, j) = std::exp(-I * ph);
            g->By(j, k) = std::exp(I * ph) / static_cast<double>(Ny);
        }

    const int H = Nx * Ny;
    g->dx_mult = CVec::Zero(H);
    g->dy_mult = CVec::Zero(H);
    g->lap_mult = Vec::Zero(H);
    g->dealias_mask = Vec::Ones(H);
    g->bandlimit_mask = Vec::Ones(H);
    const int kcx = (Nx - 1) / 3;   // 3*kc < Nx keeps triple products alias-free
    const int kcy = (Ny - 1) / 3;
    for (int j = 0; j < Ny; ++j) {
        const int ny = signed_index(j, Ny);
        for (int i = 0; i < Nx; ++i) {
            const int nx = signed_index(i, Nx);
            const int r = i + Nx * j;
            const bool nyq = (i == Nx / 2) || (j == Ny / 2);
            const double kx = two_pi * nx / L;
            const double ky = two_pi * ny / L;
            if (!nyq) {
                g->dx_mult(r) = I * kx;
                g->dy_mult(r) = I * ky;
            } else {
                g->bandlimit_mask(r) = 0.0;
            }
            g->lap_mult(r) = -(kx * kx + ky * ky);
            if (std::abs(nx) > kcx || std::abs(ny) > kcy) g->dealias_mask(r) = 0.0;
        }
    }

    // vertical first derivative, one-sided second order at the ends
    g->Dz = Mat::Zero(Nz, Nz);
    const double dz = g->dz;
    g->Dz(0, 0) = -1.5 / dz;
    g->Dz(0, 1) = 2.0 / dz;
    g->Dz(0, 2) = -0.5 / dz;
    for (int k = 1; k < Nz - 1; ++k) {
        g->Dz(k, k - 1) = -0.5 / dz;
        g->Dz(k, k + 1) = 0.5 / dz;
    }
    g->Dz(Nz - 1, Nz - 1) = 1.5 / dz;
    g->Dz(Nz - 1, Nz - 2) = -2.0 / dz;
    g->Dz(Nz - 1, Nz - 3) = 0.5 / dz;

    // -d2/dz2 with Neumann ghost closures; symmetric under the trapezoid
    // quadrature, constants in the kernel
    g->Lz_neumann = Mat::Zero(Nz, Nz);
    const double idz2 = 1.0 / (dz * dz);
    g->Lz_neumann(0, 0) = 2.0 * idz2;
    g->Lz_neumann(0, 1) = -2.0 * idz2;
    for (int k = 1; k < Nz - 1; ++k) {
        g->Lz_neumann(k, k - 1) = -idz2;
        g->Lz_neumann(k, k) = 2.0 * idz2;
        g->Lz_neumann(k, k + 1) = -idz2;
    }
    g->Lz_neumann(Nz - 1, Nz - 1) = 2.0 * idz2;
    g->Lz_neumann(Nz - 1, Nz - 2) = -2.0 * idz2;

    // cumulative trapezoid from the bottom and integral-to-surface
    g->Ccum = Mat::Zero(Nz, Nz);
    for (int k = 1; k < Nz; ++k) {
        g->Ccum.row(k) = g->Ccum.row(k - 1);
        g->Ccum(k, k - 1) += 0.5 * dz;
        g->Ccum(k, k) += 0.5 * dz;
    }
    g->Ktop = Mat::Zero(Nz, Nz);
    for (int k = 0; k < Nz; ++k)
        for (int j = k; j < Nz - 1; ++j) {
            g->Ktop(k, j) += 0.5 * dz;
            g->Ktop(k, j + 1) += 0.5 * dz;
        }

    const Mat Wz = g->wz.asDiagonal();
    const Mat Wzi = g->wz.cwiseInverse().asDiagonal();
    g->Ccum_star = Wzi * g->Ccum.transpose() * Wz;
    g->Ktop_star = Wzi * g->Ktop.transpose() * Wz;

    return g;
}

Mat Grid::lz_robin(double alpha) const {
    Mat Lz = Lz_neumann;
    Lz(Nz - 1, Nz - 1) += 2.0 * alpha / dz;
    return Lz;
}

CMat Grid::to_spec(const Mat& phys) const {
    const long nc = phys.cols();
    CMat out(hsize(), nc);
    CMat slab(Nx, Ny);
    for (long k = 0; k < nc; ++k) {
        Eigen::Map<const Mat> p(phys.col(k).data(), Nx, Ny);
        slab = Fx * p.cast<Cplx>() * Fy.transpose();
        out.col(k) = Eigen::Map<const CVec>(slab.data(), hsize());
    }
    return out;
}

Mat Grid::to_phys(const CMat& spec) const {
    const long nc = spec.cols();
    Mat out(hsize(), nc);
    CMat slab(Nx, Ny);
    for (long k = 0; k < nc; ++k) {
        Eigen::Map<const CMat> s(spec.col(k).data(), Nx, Ny);
        slab = Bx * s * By.transpose();
        out.col(k) = Eigen::Map<const CMat>(slab.data(), hsize(), 1).real();
    }
    return out;
}

} // namespace hd
