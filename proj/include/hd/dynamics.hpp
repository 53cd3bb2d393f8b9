#pragma once

#include "hd/field.hpp"
#include "hd/noise.hpp"
#include "hd/operators.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hd {

enum class LambdaRule { ldp, clt, power };

struct TermToggles {
    bool advection = true;
    bool pressure = true;   // A_pr
    bool coriolis = true;   // E
    bool forcing = true;    // F_U
};

enum class DiagLevel { light, full };

struct IntegratorConfig {
    double dt = 1e-2;
    double t_end = 1.0;
    double eps = 0.0;
    LambdaRule lambda_rule = LambdaRule::power;
    double lambda_power = 0.25;   // lambda(eps) = eps^-power in the MDP regime
    int store_stride = 1;         // <= 0 keeps only the endpoints
    double blowup_threshold = 1e8;
    DiagLevel diag = DiagLevel::full;
    double stopping_p = 2.0;      // exponent in the sup ||.||^p functional
    TermToggles terms;

    int n_steps() const { return std::max(1, static_cast<int>(t_end / dt + 0.5)); }
    double dt_actual() const { return t_end / n_steps(); }
    double lambda() const;
    void validate() const;
};

// Per-step monitored quantities. The int_* members are cumulative in time so
// each is nondecreasing along the trajectory; they are the integrands of the
// stopping-time functionals used in the moderate-deviations estimates.
struct StepDiag {
    double t = 0.0;
    double l2_sq = 0.0;        // |U|^2
    double h1_sq = 0.0;        // ||U||^2
    double div_res = 0.0;
    double a_l2_sq = 0.0;      // |AU|^2            (full only)
    double l6_p6 = 0.0;        // |U|^6_{L6}        (full only)

    double int_w = 0.0;        // int |U|^4 + ||U||^2 + |U|^4 ||U||^2
    double int_6 = 0.0;        // int |v~|^6_{L6} + int_M |v~|^4 |grad3 v~|^2
    double int_grad = 0.0;     // int ||vbar||^4_{H1(M0)}
    double int_z = 0.0;        // int |dz U|^2 ||dz U||^2
    double sup_T = 0.0;        // sup |dz T|^4
    double int_T = 0.0;        // int |dz T|^2 ||dz T||^2
    double sup_p = 0.0;        // sup ||U||^p
    double int_p = 0.0;        // int ||U||^{p-2} ||U||^2_{H2}
    double sup_linf = 0.0;     // sup |U|_Linf
    double sup_dz_h1 = 0.0;    // sup ||dz U||
    double int_h2 = 0.0;       // int ||U||^2_{H2} + ||dz U||^2_{H2}
};

struct Trajectory {
    double dt = 0.0;
    int stride = 1;
    std::vector<double> times;       // instants of the stored states
    std::vector<State> states;
    std::vector<StepDiag> diag;      // one record per step (index 0 = t0)
    bool blew_up = false;
    int blowup_step = -1;
    std::string blowup_reason;

    const State& final_state() const { return states.back(); }
    double t_end() const { return times.back(); }

    // state at step n of a run with the same dt (stored stride honored,
    // linear interpolation between stored states otherwise)
    State at_step(int n) const;
    State at_time(double t) const;
};

struct BlowUpError : std::runtime_error {
    explicit BlowUpError(const std::string& what) : std::runtime_error(what) {}
};

// ---- solvers ----------------------------------------------------------------
// Semi-implicit Euler(-Maruyama): A implicit, everything else explicit.

// dU0 + [AU0 + B(U0) + F(U0)] dt = 0
Trajectory solve_deterministic(const State& u0, const PhysicalParams& p,
                               const Forcing& f, const IntegratorConfig& cfg);

// dUe + [AUe + B(Ue) + F(Ue)] dt = sqrt(eps) sigma(Ue) dW
Trajectory solve_stochastic(const State& u0, const PhysicalParams& p, const Forcing& f,
                            const NoiseModel& noise, const WienerStream& stream,
                            const IntegratorConfig& cfg);

// dU_h + [AU_h + B(U_h) + F(U_h)] dt = sigma(U_h) h dt
Trajectory solve_skeleton_ldp(const State& u0, const ControlPath& h, const PhysicalParams& p,
                              const Forcing& f, const NoiseModel& noise,
                              const IntegratorConfig& cfg);

// dR_h + [AR_h + B(R_h,U0) + B(U0,R_h) + A_pr R_h + E R_h] dt = sigma(U0) h dt
Trajectory solve_skeleton_mdp(const ControlPath& h, const Trajectory& u0_traj,
                              const PhysicalParams& p, const NoiseModel& noise,
                              const IntegratorConfig& cfg);

// dUhat + [AUhat + B(U0,Uhat) + B(Uhat,U0) + A_pr Uhat + E Uhat] dt = sigma(U0) dW
Trajectory solve_clt_limit(const Trajectory& u0_traj, const PhysicalParams& p,
                           const NoiseModel& noise, const WienerStream& stream,
                           const IntegratorConfig& cfg);

enum class DeviationMethod { differenced, direct };

// R^eps = (U^eps - U0)/(sqrt(eps) lambda(eps)), either by differencing a
// paired stochastic run or by integrating the R^eps equation directly with
// the same Wiener path.
Trajectory solve_deviation(const State& u0, const PhysicalParams& p, const Forcing& f,
                           const NoiseModel& noise, const WienerStream& stream,
                           const IntegratorConfig& cfg, const Trajectory& u0_traj,
                           DeviationMethod method);

} // namespace hd
