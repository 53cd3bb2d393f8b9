#pragma once

#include "hd/field.hpp"
#include "hd/operators.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace hd {

// ---- Wiener increments ------------------------------------------------------

// Stateless counter-based stream: increments for a fixed (seed, stream_id)
// reproduce bit-exactly and distinct stream_ids are independent.
struct WienerStream {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    int m = 1;

    // N(0, dt I_m) for one step
    Vec increment(std::uint64_t step, double dt) const;
};

std::vector<Vec> wiener_increments(const WienerStream& s, double dt, int n_steps);

// ---- control paths ----------------------------------------------------------

// Piecewise-constant control h: [0,t] -> R^m on a uniform cell grid.
struct ControlPath {
    double t_end = 0.0;
    Mat coeffs;   // m rows, cells columns

    ControlPath() = default;
    ControlPath(double t, int m, int cells) : t_end(t), coeffs(Mat::Zero(m, cells)) {}

    int modes() const { return static_cast<int>(coeffs.rows()); }
    int cells() const { return static_cast<int>(coeffs.cols()); }
    double cell_dt() const { return t_end / cells(); }

    int cell_of(double t) const {
        int c = static_cast<int>(t / t_end * cells());
        return std::min(std::max(c, 0), cells() - 1);
    }
    Vec at(double t) const { return coeffs.col(cell_of(t)); }

    // 1/2 int |h|^2 dt, exact for piecewise-constant h
    double action() const { return 0.5 * coeffs.squaredNorm() * cell_dt(); }
};

// ---- noise models -----------------------------------------------------------

class NoiseModel {
public:
    virtual ~NoiseModel() = default;
    virtual int modes() const = 0;
    virtual State mode(int k, const State& u) const = 0;

    // directional derivative of mode k at u
    virtual State mode_jacobian(int k, const State& u, const State& du) const;
    // W-adjoint of du -> sum_k h_k mode_jacobian(k, u, du)
    virtual State jacobian_adjoint(const State& u, const Vec& h, const State& x) const;
};

// sigma(U) xi = sum_k xi_k mode_k(U); linear in xi
State sigma_apply(const NoiseModel& model, const State& u, const Vec& xi);

// components <mode_k(u), x>_W, the adjoint of xi -> sigma(U) xi
Vec sigma_adjoint(const NoiseModel& model, const State& u, const State& x);

// Shipped family: mode_k(U) = P_H BL[ a_k Phi_k + b_k U phi_k
//                                     + c_k A3((d_k.grad) A2 v) phi_k ].
// Covers additive, multiplicative and gradient-dependent regimes.
struct SpectralNoiseParams {
    int m = 8;
    std::vector<double> a, b, c;   // per-mode amplitudes, padded with last value
    double envelope_strength = 0.3;
};

class SpectralNoiseModel : public NoiseModel {
public:
    SpectralNoiseModel(GridPtr grid, const SpectralNoiseParams& params);

    int modes() const override { return m_; }
    State mode(int k, const State& u) const override;
    State mode_jacobian(int k, const State& u, const State& du) const override;
    State jacobian_adjoint(const State& u, const Vec& h, const State& x) const override;

    bool additive() const;

private:
    State linear_part(int k, const State& u) const;

    GridPtr grid_;
    int m_ = 0;
    std::vector<double> a_, b_, c_;
    std::vector<State> shape_;        // Phi_k, projected and band-limited
    std::vector<ScalarField> env_;    // phi_k
    std::vector<Eigen::Vector2d> dir_;
};

// Fixed map sigma(U) = c U (plus optional constant offset); used by tests.
class LinearNoiseModel : public NoiseModel {
public:
    LinearNoiseModel(GridPtr grid, double gain, State offset = State());
    int modes() const override { return 1; }
    State mode(int k, const State& u) const override;
    State mode_jacobian(int k, const State& u, const State& du) const override;
    State jacobian_adjoint(const State& u, const Vec& h, const State& x) const override;

private:
    GridPtr grid_;
    double gain_;
    State offset_;
};

// ---- assumption diagnostics -------------------------------------------------

struct NoiseBudget {
    double C = 1.0;
    double eta0 = 0.0, eta1 = 0.0, eta2 = 0.0, eta3 = 0.0, gamma = 0.0;
};

struct ConstantFit {
    double c_needed = 0.0;    // envelope C given the declared eta
    double eta_needed = 0.0;  // envelope eta given the declared C
    double worst_excess = 0.0;
    bool pass = true;
};

struct ConstantsReport {
    ConstantFit bnd_H;    // |sigma|^2_{L2(U,H)} <= C(1+|U|^2) + eta0 ||U||^2
    ConstantFit bnd_V;    // ... <= C(1+||U||^2) + eta1 |AU|^2
    ConstantFit lip_H;    // Lipschitz in L2(U,H)
    ConstantFit lip_V;    // Lipschitz in L2(U,V) with gamma |A dU|^2
    ConstantFit l6_R;     // baroclinic velocity modes in L6
    ConstantFit l6_T;     // temperature modes in L6
    ConstantFit vb;       // barotropic modes in H1(M0) with eta2 |lap A2 v|^2
    ConstantFit vz;       // d_z sigma with eta3 |grad3 d_z U|^2
    bool all_pass = true;
};

ConstantsReport estimate_constants(const NoiseModel& model, const PhysicalParams& params,
                                   const std::vector<State>& samples,
                                   const NoiseBudget& declared);

} // namespace hd
