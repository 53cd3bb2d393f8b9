#include "hd/verify.hpp"

#include "hd/norms.hpp"
#include "hd/parallel.hpp"
#include "hd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hd {

// ---- grid-independent synthetic fields ------------------------------------------

ScalarField synth_field(const GridPtr& g, std::uint64_t seed, std::uint64_t stream,
                        std::uint64_t slot, int kmax, int zmodes) {
    ScalarField out(g);
    Mat horiz = Mat::Zero(g->hsize(), 1);
    for (int m = 0; m <= zmodes; ++m) {
        CMat spec = CMat::Zero(g->hsize(), 1);
        std::uint64_t idx = 0;
        for (int nx = 0; nx <= kmax; ++nx) {
            for (int ny = -kmax; ny <= kmax; ++ny) {
                if (nx == 0 && ny < 0) continue;
                const double ar =
                    rng::normal(seed, stream, slot * 1024 + m, 2 * idx);
                const double ai = (nx == 0 && ny == 0)
                                      ? 0.0
                                      : rng::normal(seed, stream, slot * 1024 + m,
                                                    2 * idx + 1);
                ++idx;
                const double decay =
                    std::exp(-1.2 * (static_cast<double>(nx) * nx + static_cast<double>(ny) * ny) /
                             (kmax * kmax + 1.0)) *
                    std::exp(-0.4 * m);
                const Cplx c = decay * Cplx(ar, ai);
                const int ix = nx;
                const int iy = (ny + g->Ny) % g->Ny;
                const int jx = (g->Nx - nx) % g->Nx;
                const int jy = (g->Ny - ny) % g->Ny;
                spec(ix + g->Nx * iy, 0) += c;
                if (!(nx == 0 && ny == 0)) spec(jx + g->Nx * jy, 0) += std::conj(c);
            }
        }
        // unnormalized DFT convention: coefficient value * N^2 gives amplitude 1
        spec *= static_cast<double>(g->Nx) * g->Ny;
        horiz = g->to_phys(spec);
        for (int k = 0; k < g->Nz; ++k) {
            const double zb =
                std::cos(m * std::numbers::pi * (g->z(k) + g->depth) / g->depth);
            out.v.col(k) += zb * horiz.col(0);
        }
    }
    return out;
}

State synth_state(const GridPtr& g, std::uint64_t seed, std::uint64_t stream,
                  int kmax, int zmodes) {
    State u(g);
    u.v.c1 = synth_field(g, seed, stream, 11, kmax, zmodes);
    u.v.c2 = synth_field(g, seed, stream, 23, kmax, zmodes);
    u.T = synth_field(g, seed, stream, 37, kmax, zmodes);
    return u;
}

// ---- anisotropic ratio harness ----------------------------------------------------

namespace {

// H1 norm of the componentwise cube with the gradient taken by the chain
// rule on the grid
double cube_h1(const VectorField2& v) {
    const auto& g = v.c1.grid;
    auto comp = [&](const ScalarField& f) {
        const Mat f2 = f.v.cwiseProduct(f.v);
        const Mat cube = f2.cwiseProduct(f.v);
        const ScalarField fx = ddx(f), fy = ddy(f), fz = ddz(f);
        auto gpart = [&](const ScalarField& d) {
            const Mat gg = 3.0 * f2.cwiseProduct(d.v);
            return g->qh * (gg.cwiseAbs2() * g->wz).sum();
        };
        const double l2 = g->qh * (cube.cwiseAbs2() * g->wz).sum();
        return l2 + gpart(fx) + gpart(fy) + gpart(fz);
    };
    return std::sqrt(comp(v.c1) + comp(v.c2));
}

ScalarField pow_field(const ScalarField& f, double p) {
    return {f.grid, Mat(f.v.cwiseAbs().array().pow(p).matrix())};
}

struct Sides {
    double lhs = 0.0, rhs = 0.0;
};

Sides aniso_sides(AnisoCase which, const VectorField2& v, double q) {
    Sides s;
    switch (which) {
        case AnisoCase::a1:
            s.lhs = norm_aniso(v, q, 2.0);
            s.rhs = std::pow(norm_l2(v), 2.0 / q) * std::pow(norm_h1(v), 1.0 - 2.0 / q);
            break;
        case AnisoCase::a2: {
            const double qq = std::max(q, 6.0);
            s.lhs = norm_aniso(v, qq, 2.0);
            s.rhs = std::pow(norm_lp(v, 6.0), 6.0 / qq) *
                    std::pow(cube_h1(v), 1.0 / 3.0 - 2.0 / qq);
            break;
        }
        case AnisoCase::a3:
            s.lhs = norm_linfz_l2x(v);
            s.rhs = std::sqrt(norm_l2(v) * norm_h1(v));
            break;
        case AnisoCase::a4: {
            const VectorField2 v5{pow_field(v.c1, 5.0), pow_field(v.c2, 5.0)};
            s.lhs = norm_aniso(v5, 3.0, 2.0);
            s.rhs = norm_lp(v, 6.0) * std::pow(cube_h1(v), 4.0 / 3.0);
            break;
        }
        case AnisoCase::a5: {
            const VectorField2 v2{pow_field(v.c1, 2.0), pow_field(v.c2, 2.0)};
            s.lhs = norm_aniso(v2, 4.0, 3.0);
            s.rhs = std::pow(norm_lp(v, 6.0), 1.5) * std::pow(cube_h1(v), 1.0 / 6.0);
            break;
        }
    }
    return s;
}

const char* aniso_name(AnisoCase w) {
    switch (w) {
        case AnisoCase::a1: return "anis.1";
        case AnisoCase::a2: return "anis.2";
        case AnisoCase::a3: return "anis.3";
        case AnisoCase::a4: return "anis.4";
        case AnisoCase::a5: return "anis.5";
    }
    return "?";
}

RatioStats collect(const std::string& name, const std::vector<Sides>& sides) {
    RatioStats st;
    st.name = name;
    st.n_samples = static_cast<int>(sides.size());
    double sum = 0.0;
    int counted = 0;
    for (const auto& s : sides) {
        if (s.rhs <= 0.0) {
            if (s.lhs > 1e-12)
                ++st.violations;
            else
                ++st.degenerate;
            continue;
        }
        const double r = s.lhs / s.rhs;
        st.max_ratio = std::max(st.max_ratio, r);
        sum += r;
        ++counted;
    }
    if (counted > 0) st.mean_ratio = sum / counted;
    return st;
}

int synth_kmax(const GridPtr& g) {
    // leave the top third of the spectrum empty
    return std::clamp(g->Nx / 3, 1, g->Nx / 2 - 1);
}

} // namespace

RatioStats check_anisotropic(AnisoCase which, int n_samples, std::uint64_t seed,
                             const GridPtr& g, double q) {
    std::vector<Sides> sides(n_samples);
    const int kmax = synth_kmax(g);
    parallel_for(n_samples, [&](std::size_t i) {
        VectorField2 v{synth_field(g, seed, i, 11, kmax, 3),
                       synth_field(g, seed, i, 23, kmax, 3)};
        sides[i] = aniso_sides(which, v, q);
    });
    return collect(aniso_name(which), sides);
}

RefinementReport check_anisotropic_refinement(AnisoCase which, int n_samples,
                                              std::uint64_t seed, const GridPtr& coarse,
                                              const GridPtr& fine, double q) {
    RefinementReport rep;
    const int kmax = synth_kmax(coarse);
    std::vector<Sides> sc(n_samples), sf(n_samples);
    parallel_for(n_samples, [&](std::size_t i) {
        VectorField2 vc{synth_field(coarse, seed, i, 11, kmax, 3),
                        synth_field(coarse, seed, i, 23, kmax, 3)};
        VectorField2 vf{synth_field(fine, seed, i, 11, kmax, 3),
                        synth_field(fine, seed, i, 23, kmax, 3)};
        sc[i] = aniso_sides(which, vc, q);
        sf[i] = aniso_sides(which, vf, q);
    });
    rep.coarse = collect(aniso_name(which), sc);
    rep.fine = collect(aniso_name(which), sf);
    rep.rel_change = std::abs(rep.fine.max_ratio - rep.coarse.max_ratio) /
                     std::max(rep.coarse.max_ratio, 1e-300);
    return rep;
}

// ---- b-form estimates ---------------------------------------------------------

namespace {

Sides b_sides(BCase which, const State& u, const State& us, const State& ub) {
    Sides s;
    s.lhs = std::abs(trilinear_b(u, us, ub));
    switch (which) {
        case BCase::b25:
            s.rhs = norm_h1(u) * norm_h2(us) * norm_h1(ub);
            break;
        case BCase::b26: {
            const double t1 = norm_lp(u.v, 6.0) * std::sqrt(norm_h1(us)) *
                              std::sqrt(norm_h2(us));
            const State dzus{{ddz(us.v.c1), ddz(us.v.c2)}, ddz(us.T)};
            const double t2 = std::sqrt(norm_h1(u.v)) * std::sqrt(norm_h2(u.v)) *
                              std::sqrt(norm_l2(dzus)) * std::sqrt(norm_h1(dzus));
            s.rhs = (t1 + t2) * norm_l2(ub);
            break;
        }
        case BCase::b27:
            s.rhs = std::sqrt(norm_h1(u)) * std::sqrt(norm_h2(u)) *
                    std::sqrt(norm_h1(us)) * std::sqrt(norm_h2(us)) * norm_l2(ub);
            break;
        case BCase::b28:
            s.rhs = norm_h1(u.v) * std::sqrt(norm_h1(us)) * std::sqrt(norm_h2(us)) *
                    std::sqrt(norm_l2(ub)) * std::sqrt(norm_h1(ub));
            break;
    }
    return s;
}

const char* b_name(BCase w) {
    switch (w) {
        case BCase::b25: return "b.2.5";
        case BCase::b26: return "b.2.6";
        case BCase::b27: return "b.2.7";
        case BCase::b28: return "b.2.8";
    }
    return "?";
}

} // namespace

RatioStats check_b_estimate(BCase which, int n_samples, std::uint64_t seed,
                            const GridPtr& g) {
    std::vector<Sides> sides(n_samples);
    const int kmax = synth_kmax(g);
    parallel_for(n_samples, [&](std::size_t i) {
        const State u = project_H(synth_state(g, seed, 3 * i, kmax, 3));
        const State us = project_H(synth_state(g, seed, 3 * i + 1, kmax, 3));
        const State ub = project_H(synth_state(g, seed, 3 * i + 2, kmax, 3));
        sides[i] = b_sides(which, u, us, ub);
    });
    return collect(b_name(which), sides);
}

RefinementReport check_b_refinement(BCase which, int n_samples, std::uint64_t seed,
                                    const GridPtr& coarse, const GridPtr& fine) {
    RefinementReport rep;
    const int kmax = synth_kmax(coarse);
    std::vector<Sides> sc(n_samples), sf(n_samples);
    parallel_for(n_samples, [&](std::size_t i) {
        const State uc = project_H(synth_state(coarse, seed, 3 * i, kmax, 3));
        const State usc = project_H(synth_state(coarse, seed, 3 * i + 1, kmax, 3));
        const State ubc = project_H(synth_state(coarse, seed, 3 * i + 2, kmax, 3));
        sc[i] = b_sides(which, uc, usc, ubc);
        const State uf = project_H(synth_state(fine, seed, 3 * i, kmax, 3));
        const State usf = project_H(synth_state(fine, seed, 3 * i + 1, kmax, 3));
        const State ubf = project_H(synth_state(fine, seed, 3 * i + 2, kmax, 3));
        sf[i] = b_sides(which, uf, usf, ubf);
    });
    rep.coarse = collect(b_name(which), sc);
    rep.fine = collect(b_name(which), sf);
    rep.rel_change = std::abs(rep.fine.max_ratio - rep.coarse.max_ratio) /
                     std::max(rep.coarse.max_ratio, 1e-300);
    return rep;
}

// ---- identity suite ------------------------------------------------------------

IdentityReport check_identities(int n_samples, std::uint64_t seed, const GridPtr& g,
                                const PhysicalParams& p) {
    IdentityReport rep;
    const int kmax = synth_kmax(g);
    auto worse = [&](double val, const char* name, int i) {
        if (val > rep.worst) {
            rep.worst = val;
            rep.worst_name = name;
            rep.worst_sample = i;
        }
    };
    for (int i = 0; i < n_samples; ++i) {
        const State u = project_H(synth_state(g, seed, 4 * i, kmax, 3));
        const State us = project_H(synth_state(g, seed, 4 * i + 1, kmax, 3));
        const State ub = project_H(synth_state(g, seed, 4 * i + 2, kmax, 3));

        const double scale = norm_h1(u) * norm_h1(us) * norm_h1(us);
        const double canc = std::abs(trilinear_b(u, us, us)) / scale;
        rep.b_cancellation = std::max(rep.b_cancellation, canc);
        worse(canc, "b_cancellation", i);

        const double scale2 = norm_h1(u) * norm_h1(us) * norm_h1(ub);
        const double anti =
            std::abs(trilinear_b(u, us, ub) + trilinear_b(u, ub, us)) / scale2;
        rep.b_antisymmetry = std::max(rep.b_antisymmetry, anti);
        worse(anti, "b_antisymmetry", i);

        PhysicalParams pe = p;
        pe.f_cor = pe.f_cor == 0.0 ? 1.0 : pe.f_cor;
        const double eu = std::abs(dot(apply_E(u, pe), u)) / dot(u, u);
        rep.e_orthogonality = std::max(rep.e_orthogonality, eu);
        worse(eu, "e_orthogonality", i);

        const State pu = project_H(u);
        const double idem = norm_l2(pu - u) / norm_l2(u);
        rep.ph_idempotent = std::max(rep.ph_idempotent, idem);
        worse(idem, "ph_idempotent", i);

        const State raw = synth_state(g, seed, 4 * i + 3, kmax, 3);
        const double sa = std::abs(dot(project_H(raw), us) - dot(raw, project_H(us))) /
                          (norm_l2(raw) * norm_l2(us));
        rep.ph_self_adjoint = std::max(rep.ph_self_adjoint, sa);
        worse(sa, "ph_self_adjoint", i);

        const double a2r = norm_l2(vertical_mean(baroclinic(raw.v))) / norm_l2(raw.v);
        rep.a2_remainder = std::max(rep.a2_remainder, a2r);
        worse(a2r, "a2_remainder", i);

        const ScalarField w = vertical_velocity(u.v);
        const double wb = w.v.col(0).cwiseAbs().maxCoeff() / std::max(1.0, norm_h1(u.v));
        rep.w_bottom = std::max(rep.w_bottom, wb);
        worse(wb, "w_bottom", i);
        const double wt =
            w.v.col(g->Nz - 1).cwiseAbs().maxCoeff() / std::max(1.0, norm_h1(u.v));
        rep.w_top = std::max(rep.w_top, wt);
        worse(wt, "w_top", i);

        const VectorField2 j2 = interaction_j2(u.v, us.v);
        const double nj2 = std::max(norm_l2(j2), 1e-300);
        const double a2j2 = norm_l2(vertical_mean(j2)) / nj2;
        rep.a2_j2 = std::max(rep.a2_j2, a2j2);
        worse(a2j2, "a2_j2", i);

        // J2 = B2(u, v~) + (u~ . grad) vbar - A3 J1 up to quadrature error
        {
            AdvectionContext ctx(u.v);
            const VectorField2 vt = dealias(baroclinic(us.v));
            VectorField2 ref{advect(ctx, vt.c1), advect(ctx, vt.c2)};
            const VectorField2 ut = dealias(baroclinic(u.v));
            const VectorField2 vbar = dealias(barotropic(us.v));
            ref.c1 = ref.c1 + ut.c1 * ddx(vbar.c1) + ut.c2 * ddy(vbar.c1);
            ref.c2 = ref.c2 + ut.c1 * ddx(vbar.c2) + ut.c2 * ddy(vbar.c2);
            const HVector2 j1 = interaction_j1(u.v, us.v);
            ref.c1 = ref.c1 - extend_z(j1.c1);
            ref.c2 = ref.c2 - extend_z(j1.c2);
            const double split = norm_l2(ref - j2) / std::max(norm_l2(j2), 1e-300);
            rep.j2_split = std::max(rep.j2_split, split);
        }

        const VectorField2 rec = barotropic(raw.v) + baroclinic(raw.v) - raw.v;
        const double recn = norm_l2(rec) / norm_l2(raw.v);
        rep.reconstruction = std::max(rep.reconstruction, recn);
        worse(recn, "reconstruction", i);

        const double dres = divergence_residual(u.v) / std::max(1.0, norm_h1(u.v));
        rep.projection_div = std::max(rep.projection_div, dres);
        worse(dres, "projection_div", i);
    }
    return rep;
}

// ---- stochastic Gronwall harness -------------------------------------------------

GronwallReport check_gronwall(const GronwallScenario& sc, bool hypothesis_check,
                              std::uint64_t seed, unsigned workers) {
    GronwallReport rep;
    const int n_steps = std::max(1, static_cast<int>(sc.t_end / sc.dt + 0.5));
    const double dt = sc.t_end / n_steps;
    const double tau_r = std::min(sc.t_end, sc.k_r / sc.r0);
    const int n_tau = std::min(n_steps, static_cast<int>(tau_r / dt + 0.5));

    rep.k_values = sc.k_grid;
    rep.max_prob.assign(sc.k_grid.size(), 0.0);

    for (double eps : sc.eps_grid) {
        // per-path functionals
        std::vector<double> sup_x(sc.n_paths), int_y(sc.n_paths), int_z(sc.n_paths);
        std::vector<std::vector<double>> xs(sc.n_paths);
        parallel_for(static_cast<std::size_t>(sc.n_paths), [&](std::size_t path) {
            std::vector<double> x(n_tau + 1);
            x[0] = sc.x0;
            double sup = sc.x0, iy = 0.0, iz = 0.0;
            for (int s = 0; s < n_tau; ++s) {
                const double dw =
                    std::sqrt(dt) * rng::normal(seed, path, static_cast<std::uint64_t>(s),
                                                static_cast<std::uint64_t>(eps * 1e6));
                // exact geometric update keeps the energy nonnegative
                x[s + 1] = x[s] * std::exp((sc.r0 - 0.5 * eps * sc.a * sc.a) * dt +
                                           std::sqrt(eps) * sc.a * dw);
                sup = std::max(sup, x[s + 1]);
                iy += dt * sc.beta * x[s + 1];
                iz += dt * sc.z0;
            }
            sup_x[path] = sup;
            int_y[path] = iy;
            int_z[path] = iz;
            xs[path] = std::move(x);
        }, workers);

        if (hypothesis_check) {
            // empirical hypothesis on a coarse grid of stopping pairs
            const int sub = std::max(2, sc.hyp_subgrid);
            for (int ia = 0; ia < sub; ++ia) {
                for (int ib = ia + 1; ib <= sub; ++ib) {
                    const int sa = ia * n_tau / sub;
                    const int sb = ib * n_tau / sub;
                    double lhs = 0.0, rhs = 0.0;
                    for (int path = 0; path < sc.n_paths; ++path) {
                        double sup = xs[path][sa], run = 0.0;
                        for (int s = sa; s < sb; ++s) {
                            sup = std::max(sup, xs[path][s + 1]);
                            run += dt * (sc.beta * xs[path][s + 1]);
                        }
                        double rxz = 0.0;
                        for (int s = sa; s < sb; ++s)
                            rxz += dt * (sc.r0 * xs[path][s + 1] + sc.z0);
                        lhs += sup + run;
                        rhs += xs[path][sa] + rxz;
                    }
                    if (lhs > sc.c0 * rhs)
                        throw InvalidScenario(
                            "gronwall scenario violates its hypothesis at eps=" +
                            std::to_string(eps));
                }
            }
            rep.hypothesis_checked = true;
        }

        double lhs = 0.0, rhs = 0.0;
        for (int path = 0; path < sc.n_paths; ++path) {
            lhs += sup_x[path] + int_y[path];
            rhs += sc.x0 + int_z[path];
        }
        lhs /= sc.n_paths;
        rhs /= sc.n_paths;
        rep.eps.push_back(eps);
        rep.lhs.push_back(lhs);
        rep.rhs.push_back(rhs);
        rep.fitted_c.push_back(lhs / rhs);

        for (std::size_t ki = 0; ki < sc.k_grid.size(); ++ki) {
            long count = 0;
            for (int path = 0; path < sc.n_paths; ++path) {
                // tau_K^X <= t iff sup X + int Y reaches K within the horizon
                double sup = sc.x0, run = 0.0;
                bool hitk = sup + run >= sc.k_grid[ki];
                for (int s = 0; s < n_tau && !hitk; ++s) {
                    sup = std::max(sup, xs[path][s + 1]);
                    run += dt * sc.beta * xs[path][s + 1];
                    hitk = sup + run >= sc.k_grid[ki];
                }
                if (hitk) ++count;
            }
            rep.max_prob[ki] =
                std::max(rep.max_prob[ki], static_cast<double>(count) / sc.n_paths);
        }
    }

    double cmin = rep.fitted_c[0], cmax = rep.fitted_c[0];
    for (double c : rep.fitted_c) {
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
    }
    rep.c_spread = cmax / cmin;

    rep.k_strictly_decreasing = true;
    for (std::size_t i = 0; i + 1 < rep.max_prob.size(); ++i)
        if (!(rep.max_prob[i] > rep.max_prob[i + 1])) rep.k_strictly_decreasing = false;
    return rep;
}

} // namespace hd
