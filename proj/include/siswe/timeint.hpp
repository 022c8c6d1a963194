#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "siswe/boundary.hpp"
#include "siswe/common.hpp"
#include "siswe/fluxes.hpp"
#include "siswe/grid.hpp"
#include "siswe/pressure.hpp"
#include "siswe/reconstruct.hpp"

namespace siswe {

enum class SchemeVariant { Simplified, FullyThirdOrder };
enum class TimeScheme { Euler1, ImexSSP3, Explicit3, Explicit1 };

// Double Butcher tableau with a shared weight vector; the implicit part is
// diagonally implicit with one repeated diagonal entry, so every stage costs
// exactly one pentadiagonal solve.
struct ImexTableau {
    int stages = 0;
    std::vector<std::vector<double>> a_E, a_I;
    std::vector<double> b, c_E, c_I;

    double implicit_diag() const { return a_I[0][0]; }

    void validate() const {
        double bsum = 0.0;
        for (double w : b) bsum += w;
        if (std::abs(bsum - 1.0) > 1e-13) throw ConfigError("tableau: weights must sum to 1");
        for (int l = 0; l < stages; ++l) {
            double re = 0.0, ri = 0.0;
            for (int j = 0; j < stages; ++j) {
                re += a_E[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)];
                ri += a_I[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)];
            }
            if (std::abs(re - c_E[static_cast<std::size_t>(l)]) > 1e-13 ||
                std::abs(ri - c_I[static_cast<std::size_t>(l)]) > 1e-13) {
                throw ConfigError("tableau: row sums must match abscissae");
            }
            if (std::abs(a_I[static_cast<std::size_t>(l)][static_cast<std::size_t>(l)] -
                         implicit_diag()) > 1e-15) {
                throw ConfigError("tableau: implicit diagonal must be constant");
            }
        }
    }
};

// Third-order IMEX SSP3(4,3,3).
inline ImexTableau tableau_ssp3() {
    const double a = 0.24169426078821;
    const double b2 = 0.06042356519705;
    const double c2 = 0.12915286960590;
    const double d2 = 0.5 - a - b2 - c2;

    ImexTableau t;
    t.stages = 4;
    t.a_E = {{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 1, 0, 0}, {0, 0.25, 0.25, 0}};
    t.a_I = {{a, 0, 0, 0}, {-a, a, 0, 0}, {0, 1.0 - a, a, 0}, {b2, c2, d2, a}};
    t.b = {0.0, 1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0};
    t.c_E = {0.0, 0.0, 1.0, 0.5};
    t.c_I = {a, 0.0, 1.0, 0.5};
    t.validate();
    return t;
}

// Plain (eta, q, zb) triple used for stage states and increments.
struct FieldSet {
    std::vector<double> eta, q, zb;

    void resize(int n) {
        eta.assign(static_cast<std::size_t>(n), 0.0);
        q.assign(static_cast<std::size_t>(n + 1), 0.0);
        zb.assign(static_cast<std::size_t>(n), 0.0);
    }
};

inline FieldSet to_fields(const StaggeredState& s) { return {s.eta, s.q, s.zb}; }

inline void set_fields(StaggeredState& s, const FieldSet& f) {
    s.eta = f.eta;
    s.q = f.q;
    s.zb = f.zb;
}

inline void axpy(FieldSet& dst, double w, const FieldSet& src) {
    for (std::size_t i = 0; i < dst.eta.size(); ++i) dst.eta[i] += w * src.eta[i];
    for (std::size_t i = 0; i < dst.q.size(); ++i) dst.q[i] += w * src.q[i];
    for (std::size_t i = 0; i < dst.zb.size(); ++i) dst.zb[i] += w * src.zb[i];
}

// Time-integrated boundary fluxes of one step; the discrete mass balances
//   sum(eta) dx + (mass_right - mass_left) = const
//   sum(zb) dx + (zb_right - zb_left) = const
// hold to rounding by construction.
struct StepFluxes {
    double mass_left = 0.0, mass_right = 0.0;
    double zb_left = 0.0, zb_right = 0.0;

    void add(const StepFluxes& o) {
        mass_left += o.mass_left;
        mass_right += o.mass_right;
        zb_left += o.zb_left;
        zb_right += o.zb_right;
    }
};

// Scratch arrays for one grid; reused across stages and steps.
struct Workspace {
    GridSpec grid;
    Model model = Model::SWE;
    SchemeVariant variant = SchemeVariant::Simplified;
    GrassParams grass{};
    CwenoParams cweno{};
    double g = kGravityDefault;

    ExtArray b_ext;            // bathymetry averages incl. ghosts
    ExtArray eta, q, zb, h;    // ghosted stage-explicit fields
    ExtArray h_slot;           // upwinded interface thickness (dual)
    ExtArray flux_F;           // momentum flux at cell centers, -1..n
    ExtArray q_primal;         // q averaged back to cells, -2..n+1
    ExtArray eta_new_ext;      // solved free surface incl. ghosts
    ExtArray col_h, col_q, col_zb; // ghosted fields of the collocated baseline
    std::vector<double> qstar, eta_star;
    std::vector<double> g_eta, g_zb;
    std::vector<PressureStencil> stencils;
    std::vector<CwenoPoly> h_poly; // per cell -1..n, indexed shifted by 1

    void init(const GridSpec& gr) {
        grid = gr;
        const int n = gr.n_cells;
        b_ext.resize(n, 2);
        eta.resize(n, 2);
        zb.resize(n, 2);
        h.resize(n, 2);
        q.resize(n + 1, 2);
        h_slot.resize(n + 1, 2);
        flux_F.resize(n, 1);
        q_primal.resize(n, 2);
        eta_new_ext.resize(n, 2);
        col_h.resize(n, 2);
        col_q.resize(n, 2);
        col_zb.resize(n, 2);
        qstar.assign(static_cast<std::size_t>(n + 1), 0.0);
        eta_star.assign(static_cast<std::size_t>(n), 0.0);
        g_eta.assign(static_cast<std::size_t>(n + 1), 0.0);
        g_zb.assign(static_cast<std::size_t>(n + 1), 0.0);
        stencils.resize(static_cast<std::size_t>(n + 1));
        h_poly.resize(static_cast<std::size_t>(n + 2));
    }

    // Bathymetry cell averages from a pointwise profile, ghosts included.
    void set_bathymetry(const ScalarField& b_fn, bool periodic) {
        const int n = grid.n_cells;
        const double span = grid.x_b - grid.x_a;
        for (int c = -2; c < n + 2; ++c) {
            double xl = grid.interface(c);
            if (periodic) {
                double shift = 0.0;
                if (c < 0) shift = span;
                if (c >= n) shift = -span;
                xl += shift;
            }
            b_ext[c] = gauss3_average(b_fn, xl, xl + grid.dx);
        }
    }
};

namespace detail {

// Loads the stage-explicit state into the ghosted work arrays and derives h.
inline void load_explicit(Workspace& ws, const BoundaryPolicy& bc, const FieldSet& expl,
                          double t) {
    const int n = ws.grid.n_cells;
    for (int c = 0; c < n; ++c) {
        ws.eta[c] = expl.eta[static_cast<std::size_t>(c)];
        ws.zb[c] = expl.zb[static_cast<std::size_t>(c)];
    }
    for (int k = 0; k <= n; ++k) ws.q[k] = expl.q[static_cast<std::size_t>(k)];
    fill_ghosts(ws.grid, bc, t, ws.eta, ws.q, ws.zb, ws.b_ext);
    for (int c = -2; c < n + 2; ++c) {
        ws.h[c] = ws.eta[c] - ws.b_ext[c] - ws.zb[c];
        if (!(ws.h[c] > kDryThreshold)) {
            throw DryCellError("stage state: dry cell at index " + std::to_string(c));
        }
    }
}

// Third-order upwind interface thickness on the in-domain slots, ghosts per
// boundary policy.
inline void compute_interface_h(Workspace& ws, const BoundaryPolicy& bc, double t) {
    const int n = ws.grid.n_cells;
    for (int k = 0; k <= n; ++k) {
        ws.h_slot[k] = upwind_interface_h(ws.h[k - 2], ws.h[k - 1], ws.h[k], ws.h[k + 1],
                                          ws.q[k]);
    }
    fill_slot_ghosts(ws.grid, bc, t, ws.h_slot);
}

// Rusanov momentum flux at the cell centers (the dual-grid interfaces) from
// CWENO edge values of the slot fields. The advective form q^2/h is used by
// the semi-implicit scheme; the explicit comparison scheme carries the full
// flux q^2/h + g h^2/2 and the matching wave speed.
inline void compute_momentum_flux(Workspace& ws, bool full_flux) {
    const int n = ws.grid.n_cells;
    const double dx = ws.grid.dx;
    for (int c = -1; c <= n; ++c) {
        const CwenoPoly hl = cweno_poly(ws.h_slot[c - 1], ws.h_slot[c], ws.h_slot[c + 1], dx, ws.cweno);
        const CwenoPoly hr = cweno_poly(ws.h_slot[c], ws.h_slot[c + 1], ws.h_slot[c + 2], dx, ws.cweno);
        const CwenoPoly ql = cweno_poly(ws.q[c - 1], ws.q[c], ws.q[c + 1], dx, ws.cweno);
        const CwenoPoly qr = cweno_poly(ws.q[c], ws.q[c + 1], ws.q[c + 2], dx, ws.cweno);
        const double hm = hl.eval(0.5 * dx);
        const double hp = hr.eval(-0.5 * dx);
        const double qm = ql.eval(0.5 * dx);
        const double qp = qr.eval(-0.5 * dx);
        if (full_flux) {
            if (hm <= kDryThreshold || hp <= kDryThreshold) {
                throw DryCellError("momentum flux: reconstructed thickness nonpositive");
            }
            const double um = qm / hm, up = qp / hp;
            const double alpha = std::max(std::abs(um) + std::sqrt(ws.g * hm),
                                          std::abs(up) + std::sqrt(ws.g * hp));
            ws.flux_F[c] = 0.5 * (qm * um + 0.5 * ws.g * hm * hm + qp * up +
                                  0.5 * ws.g * hp * hp - alpha * (qp - qm));
        } else {
            ws.flux_F[c] = rusanov_momentum(hm, qm, hp, qp);
        }
    }
}

// Bedload fluxes on the slots. q is first brought back to primal cells by
// the fourth-order four-slot average so all reconstructed fields share the
// primal stencil.
inline void compute_exner_fluxes(Workspace& ws, const BoundaryPolicy& bc, double t) {
    const int n = ws.grid.n_cells;
    const double dx = ws.grid.dx;

    for (int c = -1; c <= n; ++c) {
        ws.q_primal[c] = (-ws.q[c - 1] + 9.0 * ws.q[c] + 9.0 * ws.q[c + 1] - ws.q[c + 2]) / 16.0;
    }
    const auto outer_ghost = [&](bool left) {
        const SideBc& side = left ? bc.left : bc.right;
        const int c = left ? -2 : n + 1;
        switch (side.kind) {
        case BcKind::FreeOutflow:
            ws.q_primal[c] = ws.q_primal[left ? -1 : n];
            break;
        case BcKind::Periodic:
            ws.q_primal[c] = ws.q_primal[left ? c + n : c - n];
            break;
        case BcKind::InflowWave: {
            const double x_bc = left ? ws.grid.x_a : ws.grid.x_b;
            ws.q_primal[c] = inflow_values(side.wave, bc.grass, x_bc, t).q;
            break;
        }
        case BcKind::OdeReference: {
            const double xl = ws.grid.interface(c);
            ws.q_primal[c] = gauss3_average(
                [&](double x) { return bc.ode_ref->q_at(x, t); }, xl, xl + dx);
            break;
        }
        }
    };
    outer_ghost(true);
    outer_ghost(false);

    const auto edge = [&](const ExtArray& w, int k, bool plus) {
        if (plus) {
            return cweno_poly(w[k - 1], w[k], w[k + 1], dx, ws.cweno).eval(-0.5 * dx);
        }
        return cweno_poly(w[k - 2], w[k - 1], w[k], dx, ws.cweno).eval(0.5 * dx);
    };

    for (int k = 0; k <= n; ++k) {
        const double hm = edge(ws.h, k, false), hp = edge(ws.h, k, true);
        const double qm = edge(ws.q_primal, k, false), qp = edge(ws.q_primal, k, true);
        const double zm = edge(ws.zb, k, false), zp = edge(ws.zb, k, true);
        const double em = edge(ws.eta, k, false), ep = edge(ws.eta, k, true);
        if (hm <= kDryThreshold || hp <= kDryThreshold) {
            throw DryCellError("bedload flux: reconstructed thickness nonpositive");
        }
        const double alpha = std::max(exner_wave_speed(hm, qm / hm, ws.grass, ws.g),
                                      exner_wave_speed(hp, qp / hp, ws.grass, ws.g));
        const ExnerFluxes f = rusanov_exner(hm, qm, zm, em, hp, qp, zp, ep, ws.grass, alpha);
        ws.g_eta[static_cast<std::size_t>(k)] = f.g_eta;
        ws.g_zb[static_cast<std::size_t>(k)] = f.g_zb;
    }
}

} // namespace detail

// Explicit part of the momentum update: q* = q - (dt/dx) * flux difference.
// Exposed mostly for verification; the stage driver below inlines the same
// computation.
inline std::vector<double> explicit_qstar(Workspace& ws, const BoundaryPolicy& bc,
                                          const StaggeredState& state, double dt) {
    const FieldSet f = to_fields(state);
    detail::load_explicit(ws, bc, f, state.t);
    detail::compute_interface_h(ws, bc, state.t);
    detail::compute_momentum_flux(ws, false);
    const int n = ws.grid.n_cells;
    std::vector<double> qs(static_cast<std::size_t>(n + 1));
    for (int k = 0; k <= n; ++k) {
        qs[static_cast<std::size_t>(k)] =
            ws.q[k] - dt / ws.grid.dx * (ws.flux_F[k] - ws.flux_F[k - 1]);
    }
    return qs;
}

// One semi-implicit stage:
//   q*   = q_base - (dt/dx) dF(U_E)
//   eta* = eta_base - (dt/dx) dq* [- (dt/dx) dG_eta(U_E)] [+ dt/(24 dx) D3 q_E]
//   solve the pentadiagonal free-surface system, then back-substitute q.
// The same routine serves the first-order step (base = expl = U^n) and every
// IMEX stage (dt scaled by the implicit diagonal).
inline StepFluxes semi_implicit_stage(Workspace& ws, const BoundaryPolicy& bc,
                                      const FieldSet& base, const FieldSet& expl,
                                      double dt, double t_expl, double t_impl,
                                      FieldSet& out) {
    const int n = ws.grid.n_cells;
    const double dx = ws.grid.dx;
    const double r = dt / dx;

    detail::load_explicit(ws, bc, expl, t_expl);
    detail::compute_interface_h(ws, bc, t_expl);
    detail::compute_momentum_flux(ws, false);

    for (int k = 0; k <= n; ++k) {
        ws.qstar[static_cast<std::size_t>(k)] =
            base.q[static_cast<std::size_t>(k)] - r * (ws.flux_F[k] - ws.flux_F[k - 1]);
    }

    const bool sve = ws.model == Model::SVE && ws.grass.active();
    if (sve) {
        detail::compute_exner_fluxes(ws, bc, t_expl);
    } else {
        std::fill(ws.g_eta.begin(), ws.g_eta.end(), 0.0);
        std::fill(ws.g_zb.begin(), ws.g_zb.end(), 0.0);
    }

    const bool left_slot_bc = bc.left.kind == BcKind::InflowWave;
    const bool right_slot_bc = bc.right.kind == BcKind::InflowWave;
    if (left_slot_bc) {
        ws.qstar[0] = detail::inflow_values(bc.left.wave, bc.grass, ws.grid.x_a, t_impl).q;
    }
    if (right_slot_bc) {
        ws.qstar[static_cast<std::size_t>(n)] =
            detail::inflow_values(bc.right.wave, bc.grass, ws.grid.x_b, t_impl).q;
    }

    for (int c = 0; c < n; ++c) {
        double es = base.eta[static_cast<std::size_t>(c)] -
                    r * (ws.qstar[static_cast<std::size_t>(c + 1)] - ws.qstar[static_cast<std::size_t>(c)]);
        if (sve) {
            es -= r * (ws.g_eta[static_cast<std::size_t>(c + 1)] - ws.g_eta[static_cast<std::size_t>(c)]);
        }
        if (ws.variant == SchemeVariant::FullyThirdOrder) {
            es += r / 24.0 * delta3(ws.q, c);
        }
        ws.eta_star[static_cast<std::size_t>(c)] = es;
    }

    for (int c = -1; c <= n; ++c) {
        ws.h_poly[static_cast<std::size_t>(c + 1)] =
            cweno_poly(ws.h[c - 1], ws.h[c], ws.h[c + 1], dx, ws.cweno);
    }
    for (int k = 0; k <= n; ++k) {
        ws.stencils[static_cast<std::size_t>(k)] =
            xi_coeffs(ws.h_poly[static_cast<std::size_t>(k)], ws.h_poly[static_cast<std::size_t>(k + 1)], dx);
    }

    EllipticClosure closure;
    closure.left = eta_ghost_mode(bc.left);
    closure.right = eta_ghost_mode(bc.right);
    closure.left_slot_prescribed = left_slot_bc;
    closure.right_slot_prescribed = right_slot_bc;
    const auto prescribed_eta = [&](bool left, int c) {
        const SideBc& side = left ? bc.left : bc.right;
        if (side.kind == BcKind::InflowWave) {
            const double x_bc = left ? ws.grid.x_a : ws.grid.x_b;
            const auto v = detail::inflow_values(side.wave, bc.grass, x_bc, t_impl);
            return v.h + ws.b_ext[c] + ws.zb[c];
        }
        // ODE reference
        const double xl = ws.grid.interface(c);
        const double zb_avg = gauss3_average(
            [&](double x) { return bc.ode_ref->zb_at(x, t_impl); }, xl, xl + dx);
        return bc.ode_ref->h_at(t_impl) + zb_avg + ws.b_ext[c];
    };
    if (closure.left == EtaGhostMode::Prescribed) {
        closure.left_eta = {prescribed_eta(true, -2), prescribed_eta(true, -1)};
    }
    if (closure.right == EtaGhostMode::Prescribed) {
        closure.right_eta = {prescribed_eta(false, n), prescribed_eta(false, n + 1)};
    }

    const PentaSystem sys =
        assemble_elliptic(ws.stencils, ws.eta_star, dt, dx, ws.g, closure);
    const std::vector<double> eta_new = solve_penta(sys);

    for (int c = 0; c < n; ++c) ws.eta_new_ext[c] = eta_new[static_cast<std::size_t>(c)];
    switch (closure.left) {
    case EtaGhostMode::Extrapolate:
        ws.eta_new_ext[-1] = ws.eta_new_ext[-2] = eta_new[0];
        break;
    case EtaGhostMode::Periodic:
        ws.eta_new_ext[-1] = eta_new[static_cast<std::size_t>(n - 1)];
        ws.eta_new_ext[-2] = eta_new[static_cast<std::size_t>(n - 2)];
        break;
    case EtaGhostMode::Prescribed:
        ws.eta_new_ext[-2] = closure.left_eta[0];
        ws.eta_new_ext[-1] = closure.left_eta[1];
        break;
    }
    switch (closure.right) {
    case EtaGhostMode::Extrapolate:
        ws.eta_new_ext[n] = ws.eta_new_ext[n + 1] = eta_new[static_cast<std::size_t>(n - 1)];
        break;
    case EtaGhostMode::Periodic:
        ws.eta_new_ext[n] = eta_new[0];
        ws.eta_new_ext[n + 1] = eta_new[1];
        break;
    case EtaGhostMode::Prescribed:
        ws.eta_new_ext[n] = closure.right_eta[0];
        ws.eta_new_ext[n + 1] = closure.right_eta[1];
        break;
    }

    out.resize(n);
    out.eta = eta_new;
    for (int k = 0; k <= n; ++k) {
        if ((k == 0 && left_slot_bc) || (k == n && right_slot_bc)) {
            out.q[static_cast<std::size_t>(k)] = ws.qstar[static_cast<std::size_t>(k)];
            continue;
        }
        const auto chi = xi_sum(ws.stencils[static_cast<std::size_t>(k)]);
        double press = 0.0;
        for (int m = 0; m < 4; ++m) press += chi[static_cast<std::size_t>(m)] * ws.eta_new_ext[k - 2 + m];
        out.q[static_cast<std::size_t>(k)] =
            ws.qstar[static_cast<std::size_t>(k)] - dt * ws.g * press;
    }
    for (int c = 0; c < n; ++c) {
        double z = base.zb[static_cast<std::size_t>(c)];
        if (sve) {
            z -= r * (ws.g_zb[static_cast<std::size_t>(c + 1)] - ws.g_zb[static_cast<std::size_t>(c)]);
        }
        out.zb[static_cast<std::size_t>(c)] = z;
    }

    StepFluxes flux;
    flux.mass_left = out.q[0] + ws.g_eta[0];
    flux.mass_right = out.q[static_cast<std::size_t>(n)] + ws.g_eta[static_cast<std::size_t>(n)];
    if (ws.variant == SchemeVariant::FullyThirdOrder) {
        flux.mass_left -= (ws.q[1] - 2.0 * ws.q[0] + ws.q[-1]) / 24.0;
        flux.mass_right -= (ws.q[n + 1] - 2.0 * ws.q[n] + ws.q[n - 1]) / 24.0;
    }
    flux.zb_left = ws.g_zb[0];
    flux.zb_right = ws.g_zb[static_cast<std::size_t>(n)];
    return flux;
}

// First-order semi-implicit step.
inline StepFluxes euler_step(Workspace& ws, const BoundaryPolicy& bc, StaggeredState& state,
                             double dt) {
    const FieldSet cur = to_fields(state);
    FieldSet out;
    StepFluxes f = semi_implicit_stage(ws, bc, cur, cur, dt, state.t, state.t + dt, out);
    set_fields(state, out);
    state.t += dt;
    f.mass_left *= dt;
    f.mass_right *= dt;
    f.zb_left *= dt;
    f.zb_right *= dt;
    return f;
}

// IMEX step driven by stage increments: each implicit stage is one
// semi-implicit solve with time step a_II * dt; stage derivatives are
// recovered from the increments, so no extra operator evaluations occur.
inline StepFluxes imex_step(Workspace& ws, const BoundaryPolicy& bc, const ImexTableau& tab,
                            StaggeredState& state, double dt) {
    const int s = tab.stages;
    const double adiag = tab.implicit_diag();
    const FieldSet u0 = to_fields(state);

    std::vector<FieldSet> uhat(static_cast<std::size_t>(s));
    FieldSet expl, base, out;
    StepFluxes total;

    for (int l = 0; l < s; ++l) {
        expl = u0;
        base = u0;
        for (int j = 0; j < l; ++j) {
            const double we = tab.a_E[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)] / adiag;
            const double wi = tab.a_I[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)] / adiag;
            if (we != 0.0) axpy(expl, we, uhat[static_cast<std::size_t>(j)]);
            if (wi != 0.0) axpy(base, wi, uhat[static_cast<std::size_t>(j)]);
        }
        const double t_expl = state.t + tab.c_E[static_cast<std::size_t>(l)] * dt;
        const double t_impl = state.t + tab.c_I[static_cast<std::size_t>(l)] * dt;
        const StepFluxes f =
            semi_implicit_stage(ws, bc, base, expl, adiag * dt, t_expl, t_impl, out);

        uhat[static_cast<std::size_t>(l)] = out;
        axpy(uhat[static_cast<std::size_t>(l)], -1.0, base);

        const double w = tab.b[static_cast<std::size_t>(l)] * dt;
        total.mass_left += w * f.mass_left;
        total.mass_right += w * f.mass_right;
        total.zb_left += w * f.zb_left;
        total.zb_right += w * f.zb_right;
    }

    FieldSet result = u0;
    for (int l = 0; l < s; ++l) {
        const double w = tab.b[static_cast<std::size_t>(l)] / adiag;
        if (w != 0.0) axpy(result, w, uhat[static_cast<std::size_t>(l)]);
    }
    set_fields(state, result);
    state.t += dt;
    return total;
}

// ---------------------------------------------------------------------------
// Explicit comparison schemes.
// ---------------------------------------------------------------------------

namespace detail {

// Spatial operator of the explicit third-order scheme: same reconstructions,
// full momentum flux with the hydrostatic term, bed-slope source from the
// four-cell interface derivative, pointwise-corrected mass flux.
inline StepFluxes explicit3_rhs(Workspace& ws, const BoundaryPolicy& bc, const FieldSet& u,
                                double t, FieldSet& rhs) {
    const int n = ws.grid.n_cells;
    const double dx = ws.grid.dx;

    load_explicit(ws, bc, u, t);
    compute_interface_h(ws, bc, t);
    compute_momentum_flux(ws, true);
    const bool sve = ws.model == Model::SVE && ws.grass.active();
    if (sve) {
        compute_exner_fluxes(ws, bc, t);
    } else {
        std::fill(ws.g_eta.begin(), ws.g_eta.end(), 0.0);
        std::fill(ws.g_zb.begin(), ws.g_zb.end(), 0.0);
    }

    rhs.resize(n);
    const auto qhat = [&](int k) {
        return ws.q[k] - (ws.q[k + 1] - 2.0 * ws.q[k] + ws.q[k - 1]) / 24.0;
    };
    for (int c = 0; c < n; ++c) {
        rhs.eta[static_cast<std::size_t>(c)] =
            -(qhat(c + 1) - qhat(c)) / dx -
            (ws.g_eta[static_cast<std::size_t>(c + 1)] - ws.g_eta[static_cast<std::size_t>(c)]) / dx;
        rhs.zb[static_cast<std::size_t>(c)] =
            -(ws.g_zb[static_cast<std::size_t>(c + 1)] - ws.g_zb[static_cast<std::size_t>(c)]) / dx;
    }
    for (int k = 0; k <= n; ++k) {
        const auto bed = [&](int c) { return ws.b_ext[c] + ws.zb[c]; };
        const double slope =
            (bed(k - 2) - 15.0 * bed(k - 1) + 15.0 * bed(k) - bed(k + 1)) / (12.0 * dx);
        rhs.q[static_cast<std::size_t>(k)] =
            -(ws.flux_F[k] - ws.flux_F[k - 1]) / dx - ws.g * ws.h_slot[k] * slope;
    }

    StepFluxes f;
    f.mass_left = qhat(0) + ws.g_eta[0];
    f.mass_right = qhat(n) + ws.g_eta[static_cast<std::size_t>(n)];
    f.zb_left = ws.g_zb[0];
    f.zb_right = ws.g_zb[static_cast<std::size_t>(n)];
    return f;
}

} // namespace detail

// SSP-RK3 with the explicit operator above.
inline StepFluxes explicit3_step(Workspace& ws, const BoundaryPolicy& bc, StaggeredState& state,
                                 double dt) {
    const FieldSet u0 = to_fields(state);
    FieldSet k1, k2, k3, u1, u2;
    const StepFluxes f1 = detail::explicit3_rhs(ws, bc, u0, state.t, k1);
    u1 = u0;
    axpy(u1, dt, k1);
    const StepFluxes f2 = detail::explicit3_rhs(ws, bc, u1, state.t + dt, k2);
    u2 = u0;
    axpy(u2, 0.25 * dt, k1);
    axpy(u2, 0.25 * dt, k2);
    const StepFluxes f3 = detail::explicit3_rhs(ws, bc, u2, state.t + 0.5 * dt, k3);

    FieldSet result = u0;
    axpy(result, dt / 6.0, k1);
    axpy(result, dt / 6.0, k2);
    axpy(result, 2.0 * dt / 3.0, k3);
    set_fields(state, result);
    state.t += dt;

    StepFluxes total;
    const double w1 = dt / 6.0, w2 = dt / 6.0, w3 = 2.0 * dt / 3.0;
    total.mass_left = w1 * f1.mass_left + w2 * f2.mass_left + w3 * f3.mass_left;
    total.mass_right = w1 * f1.mass_right + w2 * f2.mass_right + w3 * f3.mass_right;
    total.zb_left = w1 * f1.zb_left + w2 * f2.zb_left + w3 * f3.zb_left;
    total.zb_right = w1 * f1.zb_right + w2 * f2.zb_right + w3 * f3.zb_right;
    return total;
}

// ---------------------------------------------------------------------------
// First-order explicit baseline: collocated (h, q, z_b) with a Rusanov flux
// on (q, q^2/h + g h^2/2, q_b) and a centered bed-slope source.
// ---------------------------------------------------------------------------

struct CollocatedState {
    std::vector<double> h, q, zb;
    double t = 0.0;

    int n_cells() const { return static_cast<int>(h.size()); }
};

inline void explicit1_step(Workspace& ws, const BoundaryPolicy& bc, CollocatedState& state,
                           double dt) {
    const int n = state.n_cells();
    const double dx = ws.grid.dx;
    const bool sve = ws.model == Model::SVE && ws.grass.active();

    ExtArray& h = ws.col_h;
    ExtArray& q = ws.col_q;
    ExtArray& zb = ws.col_zb;
    for (int c = 0; c < n; ++c) {
        h[c] = state.h[static_cast<std::size_t>(c)];
        q[c] = state.q[static_cast<std::size_t>(c)];
        zb[c] = state.zb[static_cast<std::size_t>(c)];
    }
    const auto fill_side = [&](bool left) {
        const SideBc& side = left ? bc.left : bc.right;
        const std::array<int, 2> cells = left ? std::array<int, 2>{-1, -2}
                                              : std::array<int, 2>{n, n + 1};
        switch (side.kind) {
        case BcKind::FreeOutflow: {
            const int ci = left ? 0 : n - 1;
            for (int c : cells) {
                h[c] = h[ci];
                q[c] = q[ci];
                zb[c] = zb[ci];
            }
            break;
        }
        case BcKind::Periodic:
            for (int c : cells) {
                const int w = left ? c + n : c - n;
                h[c] = h[w];
                q[c] = q[w];
                zb[c] = zb[w];
            }
            break;
        case BcKind::InflowWave: {
            const double x_bc = left ? ws.grid.x_a : ws.grid.x_b;
            const auto v = detail::inflow_values(side.wave, bc.grass, x_bc, state.t);
            const int ci = left ? 0 : n - 1;
            for (int c : cells) {
                h[c] = v.h;
                q[c] = v.q;
                zb[c] = zb[ci];
            }
            break;
        }
        case BcKind::OdeReference: {
            for (int c : cells) {
                const double xl = ws.grid.interface(c);
                h[c] = bc.ode_ref->h_at(state.t);
                q[c] = gauss3_average([&](double x) { return bc.ode_ref->q_at(x, state.t); },
                                      xl, xl + dx);
                zb[c] = gauss3_average([&](double x) { return bc.ode_ref->zb_at(x, state.t); },
                                       xl, xl + dx);
            }
            break;
        }
        }
    };
    fill_side(true);
    fill_side(false);

    std::vector<double> fh(static_cast<std::size_t>(n + 1));
    std::vector<double> fq(static_cast<std::size_t>(n + 1));
    std::vector<double> fz(static_cast<std::size_t>(n + 1));
    for (int k = 0; k <= n; ++k) {
        const int cl = k - 1, cr = k;
        if (h[cl] <= kDryThreshold || h[cr] <= kDryThreshold) {
            throw DryCellError("explicit baseline: dry cell");
        }
        const double ul = q[cl] / h[cl], ur = q[cr] / h[cr];
        const double alpha = std::max(std::abs(ul) + std::sqrt(ws.g * h[cl]),
                                      std::abs(ur) + std::sqrt(ws.g * h[cr]));
        fh[static_cast<std::size_t>(k)] =
            0.5 * (q[cl] + q[cr] - alpha * (h[cr] - h[cl]));
        fq[static_cast<std::size_t>(k)] =
            0.5 * (q[cl] * ul + 0.5 * ws.g * h[cl] * h[cl] + q[cr] * ur +
                   0.5 * ws.g * h[cr] * h[cr] - alpha * (q[cr] - q[cl]));
        if (sve) {
            const double qbl = grass_qb(h[cl], q[cl], ws.grass);
            const double qbr = grass_qb(h[cr], q[cr], ws.grass);
            fz[static_cast<std::size_t>(k)] = 0.5 * (qbl + qbr - alpha * (zb[cr] - zb[cl]));
        }
    }

    for (int c = 0; c < n; ++c) {
        const double slope = (ws.b_ext[c + 1] + zb[c + 1] - ws.b_ext[c - 1] - zb[c - 1]) / (2.0 * dx);
        state.h[static_cast<std::size_t>(c)] =
            h[c] - dt / dx * (fh[static_cast<std::size_t>(c + 1)] - fh[static_cast<std::size_t>(c)]);
        state.q[static_cast<std::size_t>(c)] =
            q[c] - dt / dx * (fq[static_cast<std::size_t>(c + 1)] - fq[static_cast<std::size_t>(c)]) -
            dt * ws.g * h[c] * slope;
        if (sve) {
            state.zb[static_cast<std::size_t>(c)] =
                zb[c] - dt / dx * (fz[static_cast<std::size_t>(c + 1)] - fz[static_cast<std::size_t>(c)]);
        }
    }
    state.t += dt;
}

} // namespace siswe
