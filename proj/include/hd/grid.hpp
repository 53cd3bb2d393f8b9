#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>

namespace hd {

using Cplx = std::complex<double>;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

// Discrete box M = (0,L)^2 x (-depth,0): Fourier collocation in x,y
// (periodic), second-order finite differences on a uniform node grid in z.
// Fields live on (Nx*Ny) x Nz matrices, horizontal node r = i + Nx*j,
// vertical level k at z_k = -depth + k*dz.
//
// The grid owns every discrete operator ingredient: DFT matrices, spectral
// multipliers, vertical difference/integral matrices and their adjoints
// with respect to the trapezoid quadrature.
class Grid {
public:
    static std::shared_ptr<const Grid> make(double L, double depth,
                                            int Nx, int Ny, int Nz);

    double L = 0.0;
    double depth = 0.0;
    int Nx = 0, Ny = 0, Nz = 0;

    double dz = 0.0;
    double qh = 0.0;     // horizontal quadrature weight per node: L^2/(Nx*Ny)
    Vec wz;              // trapezoid weights in z, sum = depth

    // horizontal spectral machinery
    CMat Fx, Fy;         // forward DFT matrices
    CMat Bx, By;         // inverse DFT matrices (include 1/N factors)
    CVec dx_mult, dy_mult;   // i*k multipliers per horizontal node row
    Vec lap_mult;            // -(kx^2+ky^2)
    Vec dealias_mask;        // 2/3-rule mask for products (1 keep / 0 zero)
    Vec bandlimit_mask;      // drops Nyquist modes

    // vertical machinery (Nz x Nz dense; Nz is small)
    Mat Dz;              // first derivative, second order
    Mat Lz_neumann;      // -d2/dz2, Neumann both ends
    Mat Ccum;            // cumulative trapezoid from z=-depth
    Mat Ccum_star;       // quadrature adjoint of Ccum
    Mat Ktop;            // integral from z to 0
    Mat Ktop_star;

    // -d2/dz2 with Robin d_z f + alpha f = 0 on z=0, Neumann at z=-depth
    Mat lz_robin(double alpha) const;

    int hsize() const { return Nx * Ny; }
    long size() const { return static_cast<long>(Nx) * Ny * Nz; }
    double z(int k) const { return -depth + k * dz; }

    bool same(const Grid& o) const {
        return Nx == o.Nx && Ny == o.Ny && Nz == o.Nz && L == o.L && depth == o.depth;
    }

    // forward/inverse horizontal DFT of one (Nx*Ny) x Nz field
    CMat to_spec(const Mat& phys) const;
    Mat to_phys(const CMat& spec) const;

private:
    Grid() = default;
};

using GridPtr = std::shared_ptr<const Grid>;

} // namespace hd
