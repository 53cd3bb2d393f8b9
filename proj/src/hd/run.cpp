#include "hd/run.hpp"

#include "hd/io.hpp"
#include "hd/norms.hpp"

#include <json.hpp>

#include <chrono>
#include <fstream>
#include <sstream>

namespace hd {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
    return buf;
}

fs::path fresh_run_dir(const RunConfig& cfg) {
    const fs::path root = cfg.out_dir;
    fs::create_directories(root);
    const std::string base =
        cfg.exp.kind + "-" + timestamp_utc() + "-seed" + std::to_string(cfg.seed);
    fs::path dir = root / base;
    for (int i = 1; fs::exists(dir); ++i) dir = root / (base + "-" + std::to_string(i));
    fs::create_directories(dir);
    return dir;
}

json config_json(const RunConfig& c) {
    json j;
    j["version"] = kVersion;
    j["seed"] = c.seed;
    j["schema"] = c.schema;
    j["domain"] = {{"L", c.L}, {"depth", c.depth}, {"nx", c.nx}, {"ny", c.ny}, {"nz", c.nz}};
    j["physics"] = {{"mu_v", c.params.mu_v}, {"nu_v", c.params.nu_v},
                    {"mu_t", c.params.mu_T}, {"nu_t", c.params.nu_T},
                    {"f_cor", c.params.f_cor}, {"beta_t_g", c.params.beta_T_g},
                    {"alpha", c.params.alpha}};
    j["forcing"] = {{"family", c.forcing_family}, {"amp_v", c.forcing_amp_v},
                    {"amp_t", c.forcing_amp_T}, {"omega", c.forcing_omega},
                    {"mode_x", c.forcing_mode_x}, {"mode_y", c.forcing_mode_y}};
    j["noise"] = {{"m", c.noise.m}, {"a", c.noise.a}, {"b", c.noise.b}, {"c", c.noise.c},
                  {"envelope", c.noise.envelope_strength}};
    j["budget"] = {{"C", c.budget.C}, {"eta0", c.budget.eta0}, {"eta1", c.budget.eta1},
                   {"eta2", c.budget.eta2}, {"eta3", c.budget.eta3},
                   {"gamma", c.budget.gamma}};
    j["initial"] = {{"family", c.init_family}, {"amp", c.init_amp},
                    {"mode_x", c.init_mode_x}, {"mode_y", c.init_mode_y},
                    {"zmode", c.init_zmode}, {"kmax", c.init_kmax},
                    {"zmodes", c.init_zmodes}};
    j["integrator"] = {{"dt", c.integ.dt},
                       {"t_end", c.integ.t_end},
                       {"eps", c.integ.eps},
                       {"lambda",
                        c.integ.lambda_rule == LambdaRule::ldp
                            ? "ldp"
                            : (c.integ.lambda_rule == LambdaRule::clt ? "clt" : "power")},
                       {"lambda_power", c.integ.lambda_power},
                       {"store_stride", c.integ.store_stride},
                       {"advection", c.integ.terms.advection},
                       {"pressure", c.integ.terms.pressure},
                       {"coriolis", c.integ.terms.coriolis},
                       {"forcing", c.integ.terms.forcing}};
    j["experiment"] = {{"kind", c.exp.kind},
                       {"control_cells", c.exp.control_cells},
                       {"eps_list", c.exp.eps_list},
                       {"n_paths", c.exp.n_paths},
                       {"event_coeff", c.exp.event_coeff},
                       {"event_delta", c.exp.event_delta},
                       {"radius", c.exp.radius},
                       {"penalty_rho", c.exp.penalty_rho},
                       {"n_samples", c.exp.n_samples}};
    return j;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

void write_json(const fs::path& p, const json& j) {
    std::ofstream out(p);
    out << j.dump(2) << "\n";
}

void maybe_write_snapshots(const RunConfig& cfg, const fs::path& dir,
                           const Trajectory& tr) {
    if (!cfg.write_snapshots) return;
    fs::create_directories(dir / "snapshots");
    for (std::size_t i = 0; i < tr.states.size(); ++i) {
        if (static_cast<int>(i) % std::max(1, cfg.snapshot_stride) != 0 &&
            i + 1 != tr.states.size())
            continue;
        std::ostringstream name;
        name << "state-" << i << ".hdfld";
        write_snapshot(dir / "snapshots" / name.str(), tr.states[i]);
    }
}

json trajectory_summary(const Trajectory& tr) {
    json j;
    j["steps"] = tr.diag.size() - 1;
    j["dt"] = tr.dt;
    j["t_end"] = tr.times.back();
    j["blew_up"] = tr.blew_up;
    if (tr.blew_up) {
        j["blowup_step"] = tr.blowup_step;
        j["blowup_reason"] = tr.blowup_reason;
    }
    const StepDiag& d = tr.diag.back();
    j["final"] = {{"l2_sq", d.l2_sq},   {"h1_sq", d.h1_sq},   {"a_l2_sq", d.a_l2_sq},
                  {"div_res", d.div_res}, {"int_w", d.int_w}, {"int_6", d.int_6},
                  {"int_grad", d.int_grad}, {"int_z", d.int_z}, {"sup_T", d.sup_T},
                  {"int_T", d.int_T},   {"sup_p", d.sup_p},   {"int_p", d.int_p},
                  {"int_h2", d.int_h2}};
    return j;
}

ControlPath control_from_config(const RunConfig& cfg) {
    ControlPath h(cfg.integ.t_end, cfg.noise.m, cfg.exp.control_cells);
    for (int k = 0; k < cfg.noise.m; ++k) {
        const double v = cfg.exp.control_const.empty()
                             ? 0.0
                             : cfg.exp.control_const[std::min<std::size_t>(
                                   k, cfg.exp.control_const.size() - 1)];
        h.coeffs.row(k).setConstant(v);
    }
    return h;
}

std::string csv_mc_table(const McTable& t) {
    std::ostringstream out;
    out << "eps,n,hits,p_hat,eps_log_p,ci_lo,ci_hi,i_upper\n";
    for (const auto& r : t.rows) {
        out << fmt_double(r.eps) << "," << r.n << "," << r.hits << ","
            << fmt_double(r.p_hat) << "," << fmt_double(r.eps_log_p) << ","
            << fmt_double(r.ci_lo) << "," << fmt_double(r.ci_hi) << ","
            << fmt_double(r.i_upper) << "\n";
    }
    return out.str();
}

std::string csv_clt_table(const CltTable& t) {
    std::ostringstream out;
    out << "eps,n_ok,blowups,median_err\n";
    for (const auto& r : t.rows)
        out << fmt_double(r.eps) << "," << r.n_ok << "," << r.blowups << ","
            << fmt_double(r.median_err) << "\n";
    return out.str();
}

json rate_report_json(const RateReport& rep) {
    json j;
    j["action"] = rep.action;
    j["endpoint_residual"] = rep.endpoint_residual;
    j["iterations"] = rep.iterations;
    j["converged"] = rep.converged;
    j["objective_history"] = rep.objective_history;
    return j;
}

std::string csv_control(const ControlPath& h) {
    std::ostringstream out;
    out << "cell,t_mid";
    for (int k = 0; k < h.modes(); ++k) out << ",h" << k;
    out << "\n";
    for (int c = 0; c < h.cells(); ++c) {
        out << c << "," << fmt_double((c + 0.5) * h.cell_dt());
        for (int k = 0; k < h.modes(); ++k) out << "," << fmt_double(h.coeffs(k, c));
        out << "\n";
    }
    return out.str();
}

json ratio_json(const RatioStats& s) {
    return json{{"name", s.name},       {"n_samples", s.n_samples},
                {"max_ratio", s.max_ratio}, {"mean_ratio", s.mean_ratio},
                {"degenerate", s.degenerate}, {"violations", s.violations}};
}

} // namespace

RunResult run_experiment(const RunConfig& cfg) {
    RunResult res;
    res.run_dir = fresh_run_dir(cfg);
    const fs::path dir = res.run_dir;
    write_json(dir / "manifest.json", config_json(cfg));

    const GridPtr g = cfg.make_grid();
    const State u0 = cfg.make_initial(g);
    const Forcing forcing = cfg.make_forcing(g);
    SpectralNoiseModel noise(g, cfg.noise);

    const auto finish_traj = [&](const Trajectory& tr) {
        write_trajectory_ndjson(dir / "trajectory.ndjson", tr);
        write_json(dir / "summary.json", trajectory_summary(tr));
        maybe_write_snapshots(cfg, dir, tr);
        if (tr.blew_up) {
            res.exit_code = 3;
            res.message = tr.blowup_reason;
        }
        return res;
    };

    const std::string& kind = cfg.exp.kind;
    if (kind == "deterministic") {
        return finish_traj(solve_deterministic(u0, cfg.params, forcing, cfg.integ));
    }
    if (kind == "stochastic") {
        WienerStream stream{cfg.seed, 0, cfg.noise.m};
        return finish_traj(solve_stochastic(u0, cfg.params, forcing, noise, stream, cfg.integ));
    }
    if (kind == "skeleton-ldp") {
        const ControlPath h = control_from_config(cfg);
        write_text(dir / "control.csv", csv_control(h));
        return finish_traj(solve_skeleton_ldp(u0, h, cfg.params, forcing, noise, cfg.integ));
    }
    if (kind == "skeleton-mdp") {
        IntegratorConfig det = cfg.integ;
        det.eps = 0.0;
        det.store_stride = 1;
        det.diag = DiagLevel::light;
        const Trajectory u0_traj = solve_deterministic(u0, cfg.params, forcing, det);
        const ControlPath h = control_from_config(cfg);
        write_text(dir / "control.csv", csv_control(h));
        return finish_traj(solve_skeleton_mdp(h, u0_traj, cfg.params, noise, cfg.integ));
    }
    if (kind == "clt") {
        const CltTable t = clt_rate_study(u0, cfg.params, forcing, noise, cfg.integ,
                                          cfg.exp.eps_list,
                                          static_cast<int>(cfg.exp.n_paths), cfg.seed,
                                          cfg.workers);
        write_text(dir / "clt_table.csv", csv_clt_table(t));
        write_json(dir / "summary.json", json{{"slope", t.slope}});
        return res;
    }
    if (kind == "rate-mdp" || kind == "rate-ldp") {
        IntegratorConfig det = cfg.integ;
        det.eps = 0.0;
        det.store_stride = 1;
        det.diag = DiagLevel::light;
        const Trajectory u0_traj = solve_deterministic(u0, cfg.params, forcing, det);

        // reference response defines a reachable target
        ControlPath href(cfg.integ.t_end, cfg.noise.m, cfg.exp.control_cells);
        for (int k = 0; k < cfg.noise.m; ++k) {
            const double v = cfg.exp.target_href.empty()
                                 ? 1.0
                                 : cfg.exp.target_href[std::min<std::size_t>(
                                       k, cfg.exp.target_href.size() - 1)];
            href.coeffs.row(k).setConstant(v);
        }

        RateProblem prob;
        prob.control_cells = cfg.exp.control_cells;
        prob.penalty_rho = cfg.exp.penalty_rho;
        prob.radius = cfg.exp.radius;
        prob.cg_tol = cfg.exp.cg_tol;
        prob.endpoint_tol = cfg.exp.endpoint_tol;
        prob.gn_max_iter = cfg.exp.gn_max_iter;

        RateReport rep;
        if (kind == "rate-mdp") {
            prob.mode = RateProblem::Mode::mdp;
            const Trajectory ref =
                solve_skeleton_mdp(href, u0_traj, cfg.params, noise, cfg.integ);
            prob.target = cfg.exp.target_scale * ref.final_state();
            rep = minimize_rate_mdp(prob, u0_traj, cfg.params, noise, cfg.integ);
        } else {
            prob.mode = RateProblem::Mode::ldp;
            const Trajectory ref =
                solve_skeleton_ldp(u0, href, cfg.params, forcing, noise, cfg.integ);
            prob.target = u0_traj.final_state() +
                          cfg.exp.target_scale * (ref.final_state() - u0_traj.final_state());
            rep = minimize_rate_ldp(prob, u0, cfg.params, forcing, noise, cfg.integ);
        }
        write_json(dir / "rate_report.json", rate_report_json(rep));
        write_text(dir / "h_star.csv", csv_control(rep.h_star));
        write_snapshot(dir / "target.hdfld", prob.target);
        return res;
    }
    if (kind == "mc-scaling") {
        IntegratorConfig det = cfg.integ;
        det.eps = 0.0;
        det.store_stride = 0;
        det.diag = DiagLevel::light;
        const Trajectory u0_traj = solve_deterministic(u0, cfg.params, forcing, det);
        McEvent event;
        event.center = u0_traj.final_state();
        if (cfg.exp.event_coeff != 0.0) {
            State shift(g);
            shift.T = cfg.exp.event_coeff *
                      mode_field(g, cfg.exp.event_mode_x, cfg.exp.event_mode_y, 0.0, 0);
            event.center = event.center + band_limit(shift);
        }
        event.delta = cfg.exp.event_delta;

        double i_upper = 0.0;
        if (cfg.exp.rate_compare) {
            RateProblem prob;
            prob.mode = RateProblem::Mode::ldp;
            prob.target = event.center;
            prob.radius = event.delta;
            prob.control_cells = cfg.exp.control_cells;
            prob.penalty_rho = cfg.exp.penalty_rho;
            prob.cg_tol = cfg.exp.cg_tol;
            prob.endpoint_tol = cfg.exp.endpoint_tol;
            prob.gn_max_iter = cfg.exp.gn_max_iter;
            const RateReport rep =
                minimize_rate_ldp(prob, u0, cfg.params, forcing, noise, cfg.integ);
            i_upper = rep.action;
            write_json(dir / "rate_report.json", rate_report_json(rep));
        }

        const McTable t =
            mc_ldp_scaling(u0, cfg.params, forcing, noise, cfg.integ, event,
                           cfg.exp.eps_list, cfg.exp.n_paths, cfg.seed, cfg.workers,
                           i_upper);
        write_text(dir / "scaling.csv", csv_mc_table(t));
        write_json(dir / "summary.json",
                   json{{"intercept", t.intercept},
                        {"intercept_sigma", t.intercept_sigma},
                        {"extrapolated", t.extrapolated},
                        {"i_upper", i_upper}});
        return res;
    }
    if (kind == "verify") {
        json out;
        const PhysicalParams& p = cfg.params;
        const int n = cfg.exp.n_samples;
        const auto has_suite = [&](const char* s) {
            return std::find(cfg.exp.suites.begin(), cfg.exp.suites.end(), s) !=
                   cfg.exp.suites.end();
        };
        bool ok = true;
        if (has_suite("identities")) {
            const IdentityReport rep = check_identities(n, cfg.seed, g, p);
            out["identities"] = {{"b_cancellation", rep.b_cancellation},
                                 {"b_antisymmetry", rep.b_antisymmetry},
                                 {"e_orthogonality", rep.e_orthogonality},
                                 {"ph_idempotent", rep.ph_idempotent},
                                 {"ph_self_adjoint", rep.ph_self_adjoint},
                                 {"a2_remainder", rep.a2_remainder},
                                 {"w_bottom", rep.w_bottom},
                                 {"w_top", rep.w_top},
                                 {"a2_j2", rep.a2_j2},
                                 {"j2_split", rep.j2_split},
                                 {"reconstruction", rep.reconstruction},
                                 {"projection_div", rep.projection_div},
                                 {"worst", rep.worst},
                                 {"worst_name", rep.worst_name},
                                 {"pass", rep.worst <= cfg.tol_identity}};
            if (rep.worst > cfg.tol_identity) {
                ok = false;
                // serialize the offending sample for post-mortem inspection
                const int kmax = std::clamp(g->Nx / 3, 1, g->Nx / 2 - 1);
                write_snapshot(dir / "identity_failure.hdfld",
                               project_H(synth_state(g, cfg.seed, 4 * rep.worst_sample,
                                                     kmax, 3)));
            }
        }
        if (has_suite("anisotropic")) {
            const GridPtr fine = Grid::make(cfg.L, cfg.depth, 2 * cfg.nx, 2 * cfg.ny, cfg.nz);
            json cases = json::array();
            const AnisoCase all[] = {AnisoCase::a1, AnisoCase::a2, AnisoCase::a3,
                                     AnisoCase::a4, AnisoCase::a5};
            for (AnisoCase w : all) {
                const RefinementReport r =
                    check_anisotropic_refinement(w, n, cfg.seed, g, fine);
                json jc;
                jc["coarse"] = ratio_json(r.coarse);
                jc["fine"] = ratio_json(r.fine);
                jc["rel_change"] = r.rel_change;
                jc["pass"] = r.rel_change <= 0.10 && r.coarse.violations == 0 &&
                             r.fine.violations == 0;
                if (!jc["pass"].get<bool>()) ok = false;
                cases.push_back(jc);
            }
            out["anisotropic"] = cases;
        }
        if (has_suite("b")) {
            const GridPtr fine = Grid::make(cfg.L, cfg.depth, 2 * cfg.nx, 2 * cfg.ny, cfg.nz);
            json cases = json::array();
            const BCase all[] = {BCase::b25, BCase::b26, BCase::b27, BCase::b28};
            for (BCase w : all) {
                const RefinementReport r = check_b_refinement(w, n, cfg.seed, g, fine);
                json jc;
                jc["coarse"] = ratio_json(r.coarse);
                jc["fine"] = ratio_json(r.fine);
                jc["rel_change"] = r.rel_change;
                jc["pass"] = r.rel_change <= 0.10 && r.coarse.violations == 0 &&
                             r.fine.violations == 0;
                if (!jc["pass"].get<bool>()) ok = false;
                cases.push_back(jc);
            }
            out["b_estimates"] = cases;
        }
        if (has_suite("gronwall")) {
            GronwallScenario sc;
            sc.n_paths = std::max(1000, n);
            const GronwallReport rep = check_gronwall(sc, true, cfg.seed, cfg.workers);
            out["gronwall"] = {{"eps", rep.eps},
                               {"lhs", rep.lhs},
                               {"rhs", rep.rhs},
                               {"fitted_c", rep.fitted_c},
                               {"c_spread", rep.c_spread},
                               {"k_values", rep.k_values},
                               {"max_prob", rep.max_prob},
                               {"k_strictly_decreasing", rep.k_strictly_decreasing},
                               {"pass", rep.k_strictly_decreasing && rep.c_spread <= 2.0}};
            if (!(rep.k_strictly_decreasing && rep.c_spread <= 2.0)) ok = false;
        }
        if (has_suite("noise")) {
            std::vector<State> samples;
            const int kmax = std::clamp(g->Nx / 3, 1, g->Nx / 2 - 1);
            for (int i = 0; i < std::max(2, n); ++i)
                samples.push_back(project_H(synth_state(g, cfg.seed, 7000 + i, kmax, 3)));
            const ConstantsReport rep =
                estimate_constants(noise, p, samples, cfg.budget);
            auto fit_json = [](const ConstantFit& f) {
                return json{{"c_needed", f.c_needed},
                            {"eta_needed", f.eta_needed},
                            {"worst_excess", f.worst_excess},
                            {"pass", f.pass}};
            };
            out["noise_constants"] = {{"bnd_H", fit_json(rep.bnd_H)},
                                      {"bnd_V", fit_json(rep.bnd_V)},
                                      {"lip_H", fit_json(rep.lip_H)},
                                      {"lip_V", fit_json(rep.lip_V)},
                                      {"l6_R", fit_json(rep.l6_R)},
                                      {"l6_T", fit_json(rep.l6_T)},
                                      {"vb", fit_json(rep.vb)},
                                      {"vz", fit_json(rep.vz)},
                                      {"all_pass", rep.all_pass}};
            if (!rep.all_pass) ok = false;
        }
        out["pass"] = ok;
        write_json(dir / "verify_report.json", out);
        return res;
    }

    res.exit_code = 2;
    res.message = "experiment.kind: unhandled '" + kind + "'";
    return res;
}

} // namespace hd
