#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "siswe/fluxes.hpp"
#include "test_util.hpp"

using namespace siswe;

TEST_CASE("grass bedload closure") {
    GrassParams p;
    p.A_g = 0.1;
    p.m_g = 3.0;
    p.rho0 = 0.2;
    CHECK(p.xi_por() == Catch::Approx(1.25).margin(1e-15));

    CHECK(grass_qb(1.0, 0.0, p) == Catch::Approx(0.0).margin(1e-15));
    CHECK(grass_qb(1.0, 1.0, p) == Catch::Approx(0.125).margin(1e-15));

    GrassParams small;
    small.A_g = 0.001;
    small.m_g = 3.0;
    small.rho0 = 0.0;
    CHECK(grass_qb(1.0, -2.0, small) == Catch::Approx(-0.008).margin(1e-15));

    SECTION("odd in the velocity and monotone in its magnitude") {
        double prev = 0.0;
        for (double u = 0.25; u <= 3.0; u += 0.25) {
            const double f = grass_qb(1.0, u, p);
            CHECK(grass_qb(1.0, -u, p) == Catch::Approx(-f).margin(1e-15));
            CHECK(f > prev);
            prev = f;
        }
    }
    CHECK_THROWS_AS(grass_qb(1e-9, 0.1, p), DryCellError);
}

TEST_CASE("rusanov momentum flux") {
    CHECK(rusanov_momentum(1.0, 1.0, 1.0, 1.0) == Catch::Approx(1.0).margin(1e-15));
    CHECK(rusanov_momentum(1.0, 1.0, 1.0, -1.0) == Catch::Approx(2.0).margin(1e-15));
    CHECK(rusanov_momentum(0.7, 0.0, 1.3, 0.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK_THROWS_AS(rusanov_momentum(0.0, 0.0, 1.0, 0.0), DryCellError);
}

TEST_CASE("bedload rusanov fluxes") {
    GrassParams p;
    p.A_g = 0.1;
    p.m_g = 3.0;
    p.rho0 = 0.2;

    SECTION("consistency for equal states") {
        const double qb = grass_qb(0.8, 0.4, p);
        const auto f = rusanov_exner(0.8, 0.4, 0.1, 0.9, 0.8, 0.4, 0.1, 0.9, p, 0.37);
        CHECK(f.g_eta == Catch::Approx(qb).margin(1e-15));
        CHECK(f.g_zb == Catch::Approx(qb).margin(1e-15));
    }
    SECTION("pure bed jump at rest is dissipation only") {
        const double a = 0.25, d = 0.3;
        const auto f = rusanov_exner(1.0, 0.0, 0.1, 1.1, 1.0, 0.0, 0.1 + d, 1.1, p, a);
        CHECK(f.g_zb == Catch::Approx(-a * d / 2.0).margin(1e-15));
        CHECK(f.g_eta == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("disabled coupling gives zero fluxes") {
        GrassParams off;
        off.A_g = 0.0;
        const auto f = rusanov_exner(1.0, 0.5, 0.1, 1.1, 1.0, 0.5, 0.1, 1.1, off, 0.0);
        CHECK(f.g_eta == Catch::Approx(0.0).margin(1e-15));
        CHECK(f.g_zb == Catch::Approx(0.0).margin(1e-15));
    }
}

TEST_CASE("system eigenvalues") {
    const double g = kGravityDefault;

    SECTION("decoupled limit") {
        GrassParams off;
        off.A_g = 0.0;
        for (const EigenMethod m : {EigenMethod::DeVries, EigenMethod::Macca, EigenMethod::Exact}) {
            const EigenTriple ev = eigenvalues(1.3, 0.6, off, m, g);
            const double c = std::sqrt(g * 1.3);
            CHECK(ev.lambda1 == Catch::Approx(0.6 - c).margin(1e-10));
            CHECK(ev.lambda2 == Catch::Approx(0.0).margin(1e-10));
            CHECK(ev.lambda3 == Catch::Approx(0.6 + c).margin(1e-10));
        }
    }

    SECTION("exact roots annihilate the characteristic polynomial") {
        GrassParams p;
        p.A_g = 0.001;
        p.m_g = 3.0;
        p.rho0 = 0.0;
        const EigenTriple ev = eigenvalues(1.0, 1.0, p, EigenMethod::Exact, g);
        const double beta = grass_beta(1.0, 1.0, p);
        const double scale = std::pow(1.0 + std::sqrt(g), 3);
        for (double l : {ev.lambda1, ev.lambda2, ev.lambda3}) {
            CHECK(std::abs(sve_char_poly(l, 1.0, 1.0, beta, g)) <= 1e-10 * scale);
        }
        CHECK(ev.lambda1 < ev.lambda2);
        CHECK(ev.lambda2 < ev.lambda3);
    }

    SECTION("subcritical ordering after sorting") {
        GrassParams p;
        p.A_g = 0.01;
        p.m_g = 3.0;
        p.rho0 = 0.2;
        for (const EigenMethod m : {EigenMethod::DeVries, EigenMethod::Macca, EigenMethod::Exact}) {
            EigenTriple ev = eigenvalues(1.0, 1.5, p, m, g); // Fr ~ 0.48
            std::array<double, 3> l{ev.lambda1, ev.lambda2, ev.lambda3};
            std::sort(l.begin(), l.end());
            CHECK(l[0] < l[1]);
            CHECK(l[1] < l[2]);
            CHECK(l[0] < 0.0);
            CHECK(l[2] > 0.0);
        }
    }

    SECTION("approximations converge to the exact roots as the coupling vanishes") {
        for (double ag : {1e-3, 1e-4}) {
            GrassParams p;
            p.A_g = ag;
            p.m_g = 3.0;
            p.rho0 = 0.0;
            double max_gap = 0.0;
            for (double fr = 0.05; fr <= 0.701; fr += 0.05) {
                const double h = 1.0;
                const double u = fr * std::sqrt(g * h);
                const EigenTriple ex = eigenvalues(h, u, p, EigenMethod::Exact, g);
                for (const EigenMethod m : {EigenMethod::DeVries, EigenMethod::Macca}) {
                    const EigenTriple ap = eigenvalues(h, u, p, m, g);
                    const std::array<double, 3> a{ap.lambda1, ap.lambda2, ap.lambda3};
                    const std::array<double, 3> e{ex.lambda1, ex.lambda2, ex.lambda3};
                    for (int k = 0; k < 3; ++k) {
                        const double rel =
                            std::abs(a[k] - e[k]) / std::max(std::abs(e[k]), 1e-8);
                        max_gap = std::max(max_gap, rel);
                    }
                }
            }
            CHECK(max_gap <= 30.0 * ag);
        }
    }

    SECTION("near-critical approximations are rejected") {
        GrassParams p;
        p.A_g = 0.01;
        p.m_g = 3.0;
        const double u_crit = std::sqrt(g * 1.0) * (1.0 + 1e-9);
        CHECK_THROWS_AS(eigenvalues(1.0, u_crit, p, EigenMethod::DeVries, g), NumericalError);
    }

    CHECK_THROWS_AS(eigenvalues(0.0, 1.0, GrassParams{}, EigenMethod::DeVries, g), DryCellError);
}

TEST_CASE("bedload dissipation speed vanishes at rest") {
    GrassParams p;
    p.A_g = 0.01;
    p.m_g = 3.0;
    p.rho0 = 0.2;
    CHECK(exner_wave_speed(0.5, 0.0, p) <= 1e-12);
    CHECK(exner_wave_speed(0.5, 0.3, p) > 1e-12);
}
