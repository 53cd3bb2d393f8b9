#pragma once

#include "hd/dynamics.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hd {

// V-inner product used by every endpoint functional in this module: the
// L2 part plus the viscous Dirichlet form with unit coefficients, so the
// Riesz map is exactly I + A_unit.
double dot_V(const State& a, const State& b);
double norm_V(const State& a);
State riesz_V(const State& a);

inline double action(const ControlPath& h) { return h.action(); }

// ---- rate problems ----------------------------------------------------------

struct RateProblem {
    enum class Mode { ldp, mdp };
    Mode mode = Mode::mdp;

    State target;             // endpoint target (R-target for MDP, U-target for LDP)
    double radius = 0.0;      // V-ball radius; 0 means a point target
    double penalty_rho = 1e8; // weight of the endpoint misfit
    int control_cells = 8;
    double cg_tol = 1e-12;
    int cg_max_iter = 400;
    int gn_max_iter = 25;     // outer (Gauss-Newton) iterations, LDP only
    int line_search_retries = 12;
    double endpoint_tol = 1e-6;
};

struct RateReport {
    ControlPath h_star;
    double action = 0.0;
    double endpoint_residual = 0.0;   // V-distance to the target (or ball)
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_history;
};

// Linearized controlled dynamics around a stored base trajectory; shared by
// the MDP solve (exact) and the LDP Gauss-Newton subproblems.
struct LinearizedFlow {
    const Trajectory* base = nullptr;
    const PhysicalParams* params = nullptr;
    const NoiseModel* noise = nullptr;
    IntegratorConfig cfg;
    const ControlPath* jac_control = nullptr;   // sigma-Jacobian weights (LDP)

    // endpoint of the flow from zero initial state driven by h
    State endpoint(const ControlPath& h) const;
    // control-space gradient representation of w against this flow:
    // <endpoint(h), w>_W = sum_cells h_c . out_c * cell_dt
    Mat adjoint(const State& w, int cells) const;
};

// linear-quadratic rate minimization via conjugate gradients on the normal
// equations of the penalized endpoint problem
RateReport minimize_rate_mdp(const RateProblem& prob, const Trajectory& u0_traj,
                             const PhysicalParams& p, const NoiseModel& noise,
                             const IntegratorConfig& cfg);

// penalized nonlinear minimization with adjoint-of-linearization gradients;
// the reported action is an upper bound on the rate functional
RateReport minimize_rate_ldp(const RateProblem& prob, const State& u0,
                             const PhysicalParams& p, const Forcing& f,
                             const NoiseModel& noise, const IntegratorConfig& cfg);

// objective and adjoint gradient of the LDP functional at h (exposed for the
// finite-difference verification)
double ldp_objective(const RateProblem& prob, const State& u0, const PhysicalParams& p,
                     const Forcing& f, const NoiseModel& noise, const IntegratorConfig& cfg,
                     const ControlPath& h);
Mat ldp_gradient(const RateProblem& prob, const State& u0, const PhysicalParams& p,
                 const Forcing& f, const NoiseModel& noise, const IntegratorConfig& cfg,
                 const ControlPath& h);

// ---- Monte Carlo scaling ----------------------------------------------------

struct McEvent {
    State center;
    double delta = 0.1;   // V-ball radius
};

struct McRow {
    double eps = 0.0;
    long n = 0;
    long hits = 0;
    long blowups = 0;
    double p_hat = 0.0;
    double eps_log_p = 0.0;   // -inf when hits == 0
    double ci_lo = 0.0, ci_hi = 0.0;   // Wilson interval mapped through eps*log
    double p_lo = 0.0, p_hi = 0.0;     // Wilson interval for p itself
    double i_upper = 0.0;              // -(comparison value) from the rate solver
};

struct McTable {
    std::vector<McRow> rows;
    // weighted fit of eps*log p on {1, eps, eps log eps}: the intercept
    // estimates -I as eps -> 0
    double intercept = 0.0;
    double intercept_sigma = 0.0;
    bool extrapolated = false;
};

McTable mc_ldp_scaling(const State& u0, const PhysicalParams& p, const Forcing& f,
                       const NoiseModel& noise, const IntegratorConfig& cfg_base,
                       const McEvent& event, const std::vector<double>& eps_list,
                       long n_paths, std::uint64_t seed, unsigned workers,
                       double i_upper);

// fit helper exposed for oracle-side reuse in tests
struct InterceptFit {
    double intercept = 0.0;
    double sigma = 0.0;
    bool ok = false;
};
InterceptFit fit_eps_log_intercept(const std::vector<double>& eps,
                                   const std::vector<double>& y,
                                   const std::vector<double>& sigma_y);

// ---- CLT convergence study --------------------------------------------------

struct CltRow {
    double eps = 0.0;
    long n_ok = 0;
    long blowups = 0;
    double median_err = 0.0;   // sup_t ||R - Uhat||_V + (int |A(R-Uhat)|^2)^{1/2}
};

struct CltTable {
    std::vector<CltRow> rows;
    double slope = 0.0;        // log-log regression of median_err on eps
};

CltTable clt_rate_study(const State& u0, const PhysicalParams& p, const Forcing& f,
                        const NoiseModel& noise, const IntegratorConfig& cfg_base,
                        const std::vector<double>& eps_list, int n_paths,
                        std::uint64_t seed, unsigned workers);

} // namespace hd
