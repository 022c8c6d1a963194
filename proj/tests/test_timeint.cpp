#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "siswe/stepcontrol.hpp"
#include "siswe/timeint.hpp"
#include "test_util.hpp"

using namespace siswe;

namespace {

struct Rig {
    GridSpec grid;
    StaggeredState state;
    Workspace ws;
    BoundaryPolicy bc;
    ImexTableau tab = tableau_ssp3();

    Rig(double xa, double xb, int n, const ScalarField& eta0, const ScalarField& q0,
        const ScalarField& zb0, const ScalarField& b, bool periodic = false,
        Model model = Model::SWE, GrassParams grass = {}) {
        grid = build_grid(xa, xb, n);
        state = project_initial(grid, eta0, q0, zb0, b, periodic);
        ws.init(grid);
        ws.model = model;
        ws.grass = grass;
        ws.set_bathymetry(b, periodic);
        if (periodic) bc.left.kind = bc.right.kind = BcKind::Periodic;
        bc.grass = grass;
    }
};

const ScalarField kZero = [](double) { return 0.0; };

double max_dev(const std::vector<double>& v, double ref) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x - ref));
    return m;
}

double linf(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Euler step with the pressure gradient evaluated at the old surface;
// differs from the semi-implicit step at second order in dt.
void explicit_pressure_euler(Rig& r, double dt, std::vector<double>& eta_out,
                             std::vector<double>& q_out) {
    const int n = r.grid.n_cells;
    const double dx = r.grid.dx;
    const auto qs = explicit_qstar(r.ws, r.bc, r.state, dt);
    // ws now holds the ghost-filled state
    std::vector<CwenoPoly> hp(static_cast<std::size_t>(n + 2));
    for (int c = -1; c <= n; ++c) {
        hp[c + 1] = cweno_poly(r.ws.h[c - 1], r.ws.h[c], r.ws.h[c + 1], dx);
    }
    q_out.resize(n + 1);
    for (int k = 0; k <= n; ++k) {
        const PressureStencil st = xi_coeffs(hp[k], hp[k + 1], dx);
        const auto chi = xi_sum(st);
        double press = 0.0;
        for (int m = 0; m < 4; ++m) press += chi[m] * r.ws.eta[k - 2 + m];
        q_out[k] = qs[k] - dt * r.ws.g * press;
    }
    eta_out.resize(n);
    for (int c = 0; c < n; ++c) {
        eta_out[c] = r.state.eta[c] - dt / dx * (q_out[c + 1] - q_out[c]);
    }
}

} // namespace

TEST_CASE("imex tableau") {
    const ImexTableau t = tableau_ssp3();
    double bsum = 0.0;
    for (double w : t.b) bsum += w;
    CHECK(bsum == Catch::Approx(1.0).margin(1e-15));
    CHECK(t.implicit_diag() == Catch::Approx(0.24169426078821).margin(1e-15));
    CHECK(t.a_I[1][0] == Catch::Approx(-0.24169426078821).margin(1e-15));
    CHECK(t.a_I[1][1] == Catch::Approx(0.24169426078821).margin(1e-15));
    CHECK(t.a_I[1][0] + t.a_I[1][1] == Catch::Approx(t.c_I[1]).margin(1e-15));
    CHECK(t.c_I[1] == 0.0);
    // a fourth-row sanity identity: b-bar + c-bar + d-bar + a-bar = 1/2
    CHECK(t.a_I[3][0] + t.a_I[3][1] + t.a_I[3][2] + t.a_I[3][3] ==
          Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("explicit momentum update") {
    SECTION("uniform flow leaves q unchanged") {
        Rig r(-4.0, 6.0, 32, [](double) { return 1.0; }, [](double) { return 0.5; }, kZero, kZero);
        const auto qs = explicit_qstar(r.ws, r.bc, r.state, 0.01);
        for (double v : qs) CHECK(v == Catch::Approx(0.5).margin(1e-13));
    }
    SECTION("lake at rest gives zero") {
        Rig r(-4.0, 6.0, 32, [](double) { return 0.7; }, kZero, kZero,
              [](double x) { return 0.1 + 0.2 * std::exp(-10.0 * (x - 1.0) * (x - 1.0)); });
        const auto qs = explicit_qstar(r.ws, r.bc, r.state, 0.01);
        for (double v : qs) CHECK(v == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("single-slot perturbation matches a hand-unrolled flux difference") {
        Rig r(0.0, 8.0, 16, [](double) { return 1.0; }, kZero, kZero, kZero);
        const int k0 = 8;
        const double eps = 1e-3;
        r.state.q[k0] = eps;
        const double dt = 0.01;
        const auto qs = explicit_qstar(r.ws, r.bc, r.state, dt);

        // hand assembly on ghost-extended arrays
        const int n = r.grid.n_cells;
        const double dx = r.grid.dx;
        std::vector<double> qx(static_cast<std::size_t>(n + 5), 0.0); // slots -2..n+2
        const auto Q = [&](int k) -> double& { return qx[k + 2]; };
        for (int k = 0; k <= n; ++k) Q(k) = r.state.q[k];
        Q(-1) = Q(-2) = r.state.q[0];
        Q(n + 1) = Q(n + 2) = r.state.q[n];
        std::vector<double> hx(static_cast<std::size_t>(n + 5), 1.0); // constant thickness

        std::vector<double> F(static_cast<std::size_t>(n + 2));
        for (int c = -1; c <= n; ++c) {
            const double hm = cweno_poly(hx[c + 1], hx[c + 2], hx[c + 3], dx).eval(0.5 * dx);
            const double hp = cweno_poly(hx[c + 2], hx[c + 3], hx[c + 4], dx).eval(-0.5 * dx);
            const double qm = cweno_poly(Q(c - 1), Q(c), Q(c + 1), dx).eval(0.5 * dx);
            const double qp = cweno_poly(Q(c), Q(c + 1), Q(c + 2), dx).eval(-0.5 * dx);
            const double alpha = std::max(std::abs(qm / hm), std::abs(qp / hp));
            F[c + 1] = 0.5 * (qm * qm / hm + qp * qp / hp - alpha * (qp - qm));
        }
        for (int k = 0; k <= n; ++k) {
            const double expect = Q(k) - dt / dx * (F[k + 1] - F[k]);
            CHECK(qs[k] == Catch::Approx(expect).margin(1e-15));
        }
    }
}

TEST_CASE("lake at rest is preserved") {
    const auto bump_b = [](double x) { return 0.1 + 0.2 * std::exp(-10.0 * (x - 1.0) * (x - 1.0)); };

    SECTION("one first-order step, flat and bumpy bottom") {
        for (int bumpy = 0; bumpy < 2; ++bumpy) {
            Rig r(-4.0, 6.0, 64, [](double) { return 0.7; }, kZero, kZero,
                  bumpy ? bump_b : kZero);
            const DtInfo info =
                compute_dt(r.state, r.grid, CflPolicy{0.4, 40.0, 40.0, 0.45}, Model::SWE, {});
            euler_step(r.ws, r.bc, r.state, info.dt);
            CHECK(max_dev(r.state.eta, 0.7) <= 1e-13);
            CHECK(max_dev(r.state.q, 0.0) <= 1e-13);
        }
    }

    SECTION("1000 third-order steps at wave CFL 40") {
        Rig r(-4.0, 6.0, 200, [](double) { return 0.7; }, kZero, kZero, bump_b);
        CflPolicy pol;
        pol.mcfl = 0.4;
        pol.cfl_imex = 40.0;
        pol.cfl_imex_cap = 40.0;
        for (int step = 0; step < 1000; ++step) {
            const DtInfo info = compute_dt(r.state, r.grid, pol, Model::SWE, {});
            imex_step(r.ws, r.bc, r.tab, r.state, info.dt);
        }
        CHECK(max_dev(r.state.eta, 0.7) <= 1e-12);
        CHECK(max_dev(r.state.q, 0.0) <= 1e-12);
    }
}

TEST_CASE("uniform flow on a flat bottom is an exact discrete steady state") {
    Rig r(-4.0, 6.0, 64, [](double) { return 1.0; }, [](double) { return 0.5; }, kZero, kZero);
    euler_step(r.ws, r.bc, r.state, 0.05);
    CHECK(max_dev(r.state.eta, 1.0) <= 1e-12);
    CHECK(max_dev(r.state.q, 0.5) <= 1e-12);
    imex_step(r.ws, r.bc, r.tab, r.state, 0.05);
    CHECK(max_dev(r.state.eta, 1.0) <= 1e-12);
    CHECK(max_dev(r.state.q, 0.5) <= 1e-12);
}

TEST_CASE("semi-implicit Euler approaches the explicit-pressure step at first order") {
    const auto eta0 = [](double x) { return 0.7 + 0.2 * std::exp(-3.0 * (x - 1.0) * (x - 1.0)); };
    std::vector<double> diffs;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
        Rig r(-4.0, 6.0, 100, eta0, kZero, kZero, kZero);
        std::vector<double> eta_exp, q_exp;
        explicit_pressure_euler(r, dt, eta_exp, q_exp);
        euler_step(r.ws, r.bc, r.state, dt);
        diffs.push_back(linf(r.state.eta, eta_exp) + linf(r.state.q, q_exp));
    }
    const double ord1 = std::log2(diffs[0] / diffs[1]);
    const double ord2 = std::log2(diffs[1] / diffs[2]);
    CHECK(ord1 > 1.6);
    CHECK(ord1 < 2.4);
    CHECK(ord2 > 1.6);
    CHECK(ord2 < 2.4);
}

TEST_CASE("imex and Euler steps differ at second order in dt") {
    const auto eta0 = [](double x) { return 0.7 + 0.2 * std::exp(-3.0 * (x - 1.0) * (x - 1.0)); };
    std::vector<double> diffs;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
        Rig ra(-4.0, 6.0, 100, eta0, kZero, kZero, kZero);
        Rig rb(-4.0, 6.0, 100, eta0, kZero, kZero, kZero);
        euler_step(ra.ws, ra.bc, ra.state, dt);
        imex_step(rb.ws, rb.bc, rb.tab, rb.state, dt);
        diffs.push_back(linf(ra.state.eta, rb.state.eta) + linf(ra.state.q, rb.state.q));
    }
    const double ord = std::log2(diffs[1] / diffs[2]);
    CHECK(ord > 1.6);
    CHECK(ord < 2.6);
}

TEST_CASE("temporal self-convergence of the imex scheme is third order") {
    const auto eta0 = [](double x) { return 0.7 + 0.2 * std::exp(-3.0 * (x - 1.0) * (x - 1.0)); };
    const double T = 0.16;
    std::vector<std::vector<double>> etas, qs;
    for (double dt : {0.02, 0.01, 0.005, 0.0025}) {
        Rig r(-4.0, 6.0, 128, eta0, kZero, kZero, kZero, true);
        const int steps = static_cast<int>(std::round(T / dt));
        for (int s = 0; s < steps; ++s) imex_step(r.ws, r.bc, r.tab, r.state, dt);
        etas.push_back(r.state.eta);
        qs.push_back(r.state.q);
    }
    std::vector<double> errs;
    for (std::size_t j = 0; j + 1 < etas.size(); ++j) {
        errs.push_back(linf(etas[j], etas[j + 1]) + linf(qs[j], qs[j + 1]));
    }
    const double order = std::log2(errs[errs.size() - 2] / errs.back());
    CHECK(order >= 2.7);
}

TEST_CASE("zero coupling reduces the bedload model to shallow water") {
    const auto eta0 = [](double x) { return 1.0 + 0.1 * std::exp(-2.0 * x * x); };
    const auto zb0 = [](double x) { return 0.05 + 0.02 * std::exp(-3.0 * x * x); };
    GrassParams off;
    off.A_g = 0.0;
    Rig sve(-4.0, 6.0, 64, eta0, kZero, zb0, kZero, false, Model::SVE, off);
    Rig swe(-4.0, 6.0, 64, eta0, kZero, zb0, kZero, false, Model::SWE, off);
    const std::vector<double> zb_init = sve.state.zb;
    imex_step(sve.ws, sve.bc, sve.tab, sve.state, 0.01);
    imex_step(swe.ws, swe.bc, swe.tab, swe.state, 0.01);
    CHECK(linf(sve.state.eta, swe.state.eta) == 0.0);
    CHECK(linf(sve.state.q, swe.state.q) == 0.0);
    CHECK(linf(sve.state.zb, zb_init) == 0.0);
}

TEST_CASE("lake at rest with a sediment bump is preserved") {
    GrassParams grass;
    grass.A_g = 0.01;
    grass.m_g = 3.0;
    grass.rho0 = 0.2;
    const auto zb0 = [](double x) { return 0.1 + 0.2 * std::exp(-10.0 * (x - 1.0) * (x - 1.0)); };
    Rig r(-4.0, 6.0, 200, [](double) { return 0.7; }, kZero, zb0, kZero, false, Model::SVE, grass);
    const std::vector<double> zb_init = r.state.zb;
    CflPolicy pol;
    pol.cfl_imex = 40.0;
    pol.cfl_imex_cap = 40.0;
    for (int step = 0; step < 100; ++step) {
        const DtInfo info = compute_dt(r.state, r.grid, pol, Model::SVE, grass);
        imex_step(r.ws, r.bc, r.tab, r.state, info.dt);
    }
    CHECK(max_dev(r.state.eta, 0.7) <= 1e-12);
    CHECK(max_dev(r.state.q, 0.0) <= 1e-12);
    CHECK(linf(r.state.zb, zb_init) <= 1e-12);
}

TEST_CASE("bed update equals the hand-assembled flux difference") {
    GrassParams grass;
    grass.A_g = 0.1;
    grass.m_g = 3.0;
    grass.rho0 = 0.2;
    const auto zb0 = [](double x) {
        const double x2 = x * x;
        return 0.1 + 2.0 * std::exp(-(x2 * x2 * x2 * x2) / 1e14);
    };
    Rig r(-200.0, 200.0, 64, [](double) { return 10.0; }, [](double) { return 10.0; }, zb0, kZero,
          false, Model::SVE, grass);
    const StaggeredState before = r.state;
    const double dt = 0.05;
    euler_step(r.ws, r.bc, r.state, dt);

    // independent assembly of the bed fluxes from the primitives
    const int n = r.grid.n_cells;
    const double dx = r.grid.dx;
    std::vector<double> qx(static_cast<std::size_t>(n + 5));
    const auto Q = [&](int k) -> double& { return qx[k + 2]; };
    for (int k = 0; k <= n; ++k) Q(k) = before.q[k];
    Q(-1) = Q(-2) = before.q[0];
    Q(n + 1) = Q(n + 2) = before.q[n];
    std::vector<double> etax(static_cast<std::size_t>(n + 4)), zbx(etax.size()), hx(etax.size()),
        qpx(etax.size());
    const auto C = [&](std::vector<double>& v, int c) -> double& { return v[c + 2]; };
    for (int c = 0; c < n; ++c) {
        C(etax, c) = before.eta[c];
        C(zbx, c) = before.zb[c];
    }
    for (int c : {-1, -2}) {
        C(etax, c) = before.eta[0];
        C(zbx, c) = before.zb[0];
    }
    for (int c : {n, n + 1}) {
        C(etax, c) = before.eta[n - 1];
        C(zbx, c) = before.zb[n - 1];
    }
    for (int c = -2; c < n + 2; ++c) C(hx, c) = C(etax, c) - C(zbx, c);
    for (int c = -1; c <= n; ++c) {
        C(qpx, c) = (-Q(c - 1) + 9.0 * Q(c) + 9.0 * Q(c + 1) - Q(c + 2)) / 16.0;
    }
    C(qpx, -2) = C(qpx, -1);
    C(qpx, n + 1) = C(qpx, n);

    std::vector<double> gzb(static_cast<std::size_t>(n + 1));
    for (int k = 0; k <= n; ++k) {
        const auto minus = [&](std::vector<double>& v) {
            return cweno_poly(C(v, k - 2), C(v, k - 1), C(v, k), dx).eval(0.5 * dx);
        };
        const auto plus = [&](std::vector<double>& v) {
            return cweno_poly(C(v, k - 1), C(v, k), C(v, k + 1), dx).eval(-0.5 * dx);
        };
        const double hm = minus(hx), hp = plus(hx);
        const double qm = minus(qpx), qp = plus(qpx);
        const double zm = minus(zbx), zp = plus(zbx);
        const double alpha = std::max(exner_wave_speed(hm, qm / hm, grass),
                                      exner_wave_speed(hp, qp / hp, grass));
        gzb[k] = 0.5 * (grass_qb(hm, qm, grass) + grass_qb(hp, qp, grass) - alpha * (zp - zm));
    }
    for (int c = 0; c < n; ++c) {
        const double expect = before.zb[c] - dt / dx * (gzb[c + 1] - gzb[c]);
        CHECK(r.state.zb[c] == Catch::Approx(expect).margin(1e-14));
    }
}

TEST_CASE("periodic mass is conserved to rounding") {
    SECTION("free surface, shallow water") {
        const auto eta0 = [](double x) { return 0.7 + 0.2 * std::exp(-3.0 * (x - 1.0) * (x - 1.0)); };
        Rig r(-4.0, 6.0, 128, eta0, kZero, kZero, kZero, true);
        double mass0 = 0.0;
        for (double v : r.state.eta) mass0 += v * r.grid.dx;
        CflPolicy pol;
        pol.cfl_imex = 15.4;
        pol.cfl_imex_cap = 15.4;
        double q_mass0 = 0.0;
        for (double v : r.state.q) q_mass0 += v * r.grid.dx;
        for (int s = 0; s < 25; ++s) {
            const DtInfo info = compute_dt(r.state, r.grid, pol, Model::SWE, {});
            imex_step(r.ws, r.bc, r.tab, r.state, info.dt);
            double mass = 0.0;
            for (double v : r.state.eta) mass += v * r.grid.dx;
            CHECK(std::abs(mass - mass0) <= 1e-12 * std::abs(mass0));
        }
        // discharge is not conserved exactly, only bounded
        double q_mass = 0.0;
        for (double v : r.state.q) q_mass += v * r.grid.dx;
        CHECK(std::abs(q_mass - q_mass0) <= 0.05);
    }
    SECTION("bed mass, coupled model") {
        GrassParams grass;
        grass.A_g = 0.1;
        grass.m_g = 3.0;
        grass.rho0 = 0.2;
        const auto zb0 = [](double x) {
            const double x2 = x * x;
            return 0.1 + 2.0 * std::exp(-(x2 * x2 * x2 * x2) / 1e14);
        };
        Rig r(-200.0, 200.0, 64, [](double) { return 10.0; }, [](double) { return 10.0; }, zb0,
              kZero, true, Model::SVE, grass);
        double mass0 = 0.0;
        for (double v : r.state.zb) mass0 += v * r.grid.dx;
        CflPolicy pol;
        pol.cfl_imex = 3.43;
        pol.cfl_imex_cap = 3.43;
        for (int s = 0; s < 10; ++s) {
            const DtInfo info = compute_dt(r.state, r.grid, pol, Model::SVE, grass);
            imex_step(r.ws, r.bc, r.tab, r.state, info.dt);
            double mass = 0.0;
            for (double v : r.state.zb) mass += v * r.grid.dx;
            CHECK(std::abs(mass - mass0) <= 1e-12 * std::abs(mass0));
        }
    }
}

TEST_CASE("scheme variants differ by the explicit third-difference correction") {
    const auto eta0 = [](double x) { return 0.7 + 0.2 * std::exp(-3.0 * (x - 1.0) * (x - 1.0)); };
    // 10-periodic discharge profile so the periodic seam stays smooth
    const auto q0 = [](double x) { return 0.1 * std::sin(M_PI * (x + 4.0) / 5.0); };
    const double dt = 1e-4;
    std::vector<double> diffs;
    for (int n : {64, 128}) {
        Rig rs(-4.0, 6.0, n, eta0, q0, kZero, kZero, true);
        Rig rf(-4.0, 6.0, n, eta0, q0, kZero, kZero, true);
        rf.ws.variant = SchemeVariant::FullyThirdOrder;
        euler_step(rs.ws, rs.bc, rs.state, dt);
        euler_step(rf.ws, rf.bc, rf.state, dt);
        diffs.push_back(linf(rs.state.eta, rf.state.eta));
    }
    CHECK(diffs[0] > 0.0);
    const double order = std::log2(diffs[0] / diffs[1]);
    CHECK(order > 1.5);
    CHECK(order < 2.5);
}
