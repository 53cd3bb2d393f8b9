#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hd/field.hpp"
#include "hd/io.hpp"
#include "hd/norms.hpp"
#include "hd/verify.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace hd;

namespace {
GridPtr small_grid() { return Grid::make(2.0 * std::numbers::pi, 1.0, 16, 16, 9); }
}

TEST_CASE("domain invariants are enforced") {
    CHECK_THROWS_AS(Grid::make(-1.0, 1.0, 16, 16, 9), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make(1.0, 0.0, 16, 16, 9), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make(1.0, 1.0, 15, 16, 9), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make(1.0, 1.0, 2, 16, 9), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make(1.0, 1.0, 16, 16, 2), std::invalid_argument);
}

TEST_CASE("norm of constants and zero fields") {
    // unit-volume domain: L = sqrt(2), depth = 1/2 has volume 1
    auto g = Grid::make(std::sqrt(2.0), 0.5, 8, 8, 5);
    ScalarField one(g);
    one.v.setOnes();
    CHECK(norm(one, NormKind::L2) == doctest::Approx(1.0).epsilon(1e-13));
    ScalarField zero(g);
    CHECK(norm(zero, NormKind::L2) == 0.0);
    CHECK(norm(zero, NormKind::H2) == 0.0);
    CHECK(norm(zero, NormKind::Lp, 4.0) == 0.0);
}

TEST_CASE("aniso(2,2) equals the L2 norm") {
    auto g = small_grid();
    const ScalarField f = mode_field(g, 1, 0);   // sin-free cos(2 pi x / L)
    const double full = norm_l2(f);
    const double nested = norm_aniso(f, 2.0, 2.0);
    CHECK(nested == doctest::Approx(full).epsilon(1e-12));

    const ScalarField r = synth_field(g, 7, 0, 1, 4, 3);
    CHECK(norm_aniso(r, 2.0, 2.0) == doctest::Approx(norm_l2(r)).epsilon(1e-12));
}

TEST_CASE("norm rejects non-finite fields") {
    auto g = small_grid();
    ScalarField f(g);
    f.v(3, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(norm(f, NormKind::L2), std::domain_error);
}

TEST_CASE("transform round trip is exact to 1e-12") {
    auto g = small_grid();
    for (int s = 0; s < 5; ++s) {
        const ScalarField f = random_scalar(g, 11, s, 5);
        const ScalarField back = to_phys(to_spec(f));
        CHECK(norm_l2(back - f) / norm_l2(f) < 1e-12);
    }
}

TEST_CASE("vertical averaging: A3 idempotent on z-constant fields") {
    auto g = small_grid();
    VectorField2 v(g);
    v.c1 = mode_field(g, 1, 2);
    v.c2 = mode_field(g, 0, 1);
    const VectorField2 a3 = barotropic(v);
    CHECK(norm_l2(a3 - v) < 1e-13 * norm_l2(v));
    CHECK(norm_l2(baroclinic(v)) < 1e-13 * norm_l2(v));
}

TEST_CASE("A2 of a field odd about mid-depth vanishes") {
    auto g = small_grid();
    VectorField2 v(g);
    for (int k = 0; k < g->Nz; ++k)
        v.c1.v.col(k).setConstant(g->z(k) + 0.5 * g->depth);
    const HVector2 mean = vertical_mean(v);
    CHECK(mean.c1.v.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("A2(R v) = 0 and averaging operator bounds") {
    auto g = small_grid();
    for (int s = 0; s < 100; ++s) {
        const VectorField2 v{random_scalar(g, 21, s, 1), random_scalar(g, 21, s, 2)};
        const double n = norm_l2(v);
        CHECK(norm_l2(vertical_mean(baroclinic(v))) < 1e-12 * n);
        CHECK(norm_l2(barotropic(v)) <= n * (1.0 + 1e-12));
        CHECK(norm_l2(baroclinic(v)) <= 2.0 * n * (1.0 + 1e-12));
    }
}

TEST_CASE("quadrature norms converge at order >= 2 under refinement") {
    // f = cos(2 pi x / L) cos(pi (z+h)/h): |f|_L2^2 = L^2 h / 4 exactly
    const double L = 2.0 * std::numbers::pi, h = 1.0;
    const double exact = std::sqrt(L * L * h / 4.0);
    double err[3];
    int nz = 5;
    for (int r = 0; r < 3; ++r) {
        auto g = Grid::make(L, h, 16, 16, nz);
        const ScalarField f = mode_field(g, 1, 0, 0.0, 1);
        err[r] = std::abs(norm_l2(f) - exact);
        nz = 2 * (nz - 1) + 1;
    }
    const double order1 = std::log2(err[0] / err[1]);
    const double order2 = std::log2(err[1] / err[2]);
    CHECK(order1 >= 1.9);
    CHECK(order2 >= 1.9);
}

TEST_CASE("snapshot round trip is bit exact") {
    auto g = Grid::make(3.0, 0.7, 8, 8, 5);
    const State u = random_state(g, 5, 9);
    const auto path = std::filesystem::temp_directory_path() / "hd_test_snapshot.hdfld";
    write_snapshot(path, u);
    const State back = read_state_snapshot(path);
    CHECK(back.grid()->same(*g));
    CHECK((back.v.c1.v - u.v.c1.v).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.v.c2.v - u.v.c2.v).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.T.v - u.T.v).cwiseAbs().maxCoeff() == 0.0);
    std::filesystem::remove(path);
}

TEST_CASE("synth fields name the same function on every resolving grid") {
    auto gc = Grid::make(2.0, 1.0, 16, 16, 9);
    auto gf = Grid::make(2.0, 1.0, 32, 32, 9);
    const ScalarField fc = synth_field(gc, 3, 4, 5, 4, 2);
    const ScalarField ff = synth_field(gf, 3, 4, 5, 4, 2);
    // compare on the coarse nodes (every second fine node)
    double worst = 0.0;
    for (int k = 0; k < gc->Nz; ++k)
        for (int j = 0; j < gc->Ny; ++j)
            for (int i = 0; i < gc->Nx; ++i)
                worst = std::max(worst, std::abs(fc(i, j, k) - ff(2 * i, 2 * j, k)));
    CHECK(worst < 1e-12);
}
