#pragma once

#include "hd/field.hpp"
#include "hd/operators.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hd {

// Grid-independent band-limited random field: spectral coefficients are keyed
// by mode index, so the same (seed, stream) names the same continuum function
// on every grid that resolves it. The top third of the spectrum stays empty.
ScalarField synth_field(const GridPtr& g, std::uint64_t seed, std::uint64_t stream,
                        std::uint64_t slot, int kmax, int zmodes);
State synth_state(const GridPtr& g, std::uint64_t seed, std::uint64_t stream,
                  int kmax, int zmodes);

// ---- inequality ratio harness -------------------------------------------------

enum class AnisoCase { a1, a2, a3, a4, a5 };
enum class BCase { b25, b26, b27, b28 };

struct RatioStats {
    std::string name;
    int n_samples = 0;
    double max_ratio = 0.0;
    double mean_ratio = 0.0;
    int degenerate = 0;     // RHS vanished with LHS below tolerance
    int violations = 0;     // RHS vanished while LHS did not
};

struct RefinementReport {
    RatioStats coarse;
    RatioStats fine;
    double rel_change = 0.0;   // |max_f - max_c| / max_c
};

RatioStats check_anisotropic(AnisoCase which, int n_samples, std::uint64_t seed,
                             const GridPtr& g, double q = 4.0);
RefinementReport check_anisotropic_refinement(AnisoCase which, int n_samples,
                                              std::uint64_t seed, const GridPtr& coarse,
                                              const GridPtr& fine, double q = 4.0);

RatioStats check_b_estimate(BCase which, int n_samples, std::uint64_t seed,
                            const GridPtr& g);
RefinementReport check_b_refinement(BCase which, int n_samples, std::uint64_t seed,
                                    const GridPtr& coarse, const GridPtr& fine);

// ---- exact identity suite ------------------------------------------------------

struct IdentityReport {
    double b_cancellation = 0.0;      // |b(U,Us,Us)| / (||U|| ||Us||^2)
    double b_antisymmetry = 0.0;
    double e_orthogonality = 0.0;     // |(EU,U)| / |U|^2
    double ph_idempotent = 0.0;
    double ph_self_adjoint = 0.0;
    double a2_remainder = 0.0;        // |A2 R v| / |v|
    double w_bottom = 0.0;            // |w(-h)|_max
    double w_top = 0.0;               // |w(0)|_max after projection
    double a2_j2 = 0.0;               // |A2 J2(u,v)| / scale
    double j2_split = 0.0;            // J2 vs (u~.grad)vbar - A3 J1 + B2(u,v~)
    double reconstruction = 0.0;      // v - (A3 v + R v)
    double projection_div = 0.0;
    double worst = 0.0;
    int worst_sample = -1;
    std::string worst_name;
};

IdentityReport check_identities(int n_samples, std::uint64_t seed, const GridPtr& g,
                                const PhysicalParams& p);

// ---- uniform stochastic Gronwall harness ---------------------------------------

struct InvalidScenario : std::runtime_error {
    explicit InvalidScenario(const std::string& w) : std::runtime_error(w) {}
};

// Family of nonnegative scalar processes over the eps grid:
//   X: stopped geometric Brownian energy dX = r0 X dt + sqrt(eps) a X dW,
//   Y = beta X, Z = z0, R = r0, so tau_K^R = K_R / r0 is deterministic.
struct GronwallScenario {
    double x0 = 1.0;
    double r0 = 1.2;
    double a = 0.8;        // noise amplitude at eps = 1
    double beta = 1.0;
    double z0 = 0.1;
    double c0 = 20.0;      // declared hypothesis constant
    double k_r = 0.8;      // threshold for tau_K^R
    std::vector<double> eps_grid = {1.0, 0.1, 0.01};
    std::vector<double> k_grid = {1.0, 2.0, 4.0, 8.0, 16.0};
    double t_end = 1.0;
    double dt = 1e-2;
    int n_paths = 1000;
    int hyp_subgrid = 6;
};

struct GronwallReport {
    bool hypothesis_checked = false;
    std::vector<double> eps;
    std::vector<double> lhs, rhs, fitted_c;   // per eps
    double c_spread = 0.0;                    // max fitted / min fitted
    std::vector<double> k_values;
    std::vector<double> max_prob;             // max over eps of P(tau_K^X <= t)
    bool k_strictly_decreasing = false;
};

GronwallReport check_gronwall(const GronwallScenario& sc, bool hypothesis_check,
                              std::uint64_t seed, unsigned workers);

} // namespace hd
