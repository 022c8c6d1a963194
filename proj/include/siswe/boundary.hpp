#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <vector>

#include "siswe/common.hpp"
#include "siswe/fluxes.hpp"
#include "siswe/grid.hpp"
#include "siswe/pressure.hpp"
#include "siswe/reference.hpp"

namespace siswe {

enum class BcKind {
    FreeOutflow,  // zeroth-order extrapolation
    Periodic,
    InflowWave,   // prescribed (h, u) wave train at the boundary point
    OdeReference, // ghosts follow the time-dependent reference solution
};

// Wave-train inflow: u = u0 + amplitude * sin(x_bc - omega t), with the
// thickness chosen so the total (fluid + bedload) discharge stays at Q0.
struct InflowWaveSpec {
    double amplitude = 0.0;
    double omega = 0.0;
    double u0 = 0.0;
    double Q0 = 0.0;
};

struct SideBc {
    BcKind kind = BcKind::FreeOutflow;
    InflowWaveSpec wave{};
};

struct BoundaryPolicy {
    SideBc left{};
    SideBc right{};
    GrassParams grass{};
    std::shared_ptr<OdeRefTrajectory> ode_ref{};

    bool periodic() const { return left.kind == BcKind::Periodic; }

    void validate() const {
        if ((left.kind == BcKind::Periodic) != (right.kind == BcKind::Periodic)) {
            throw ConfigError("boundary: periodic closure must be set on both sides");
        }
        if ((left.kind == BcKind::OdeReference || right.kind == BcKind::OdeReference) &&
            !ode_ref) {
            throw ConfigError("boundary: reference-tracking closure needs the ODE trajectory");
        }
    }
};

namespace detail {

struct InflowValues {
    double u, h, q;
};

inline InflowValues inflow_values(const InflowWaveSpec& w, const GrassParams& grass,
                                  double x_bc, double t) {
    InflowValues v{};
    v.u = w.u0 + w.amplitude * std::sin(x_bc - w.omega * t);
    if (std::abs(v.u) < 1e-12) {
        throw NumericalError("inflow boundary: prescribed velocity crossed zero");
    }
    v.h = w.Q0 / v.u - grass.xi_por() * grass.A_g * std::pow(std::abs(v.u), grass.m_g - 1.0);
    if (v.h <= kDryThreshold) {
        throw DryCellError("inflow boundary: prescribed thickness at or below dry threshold");
    }
    v.q = v.h * v.u;
    return v;
}

} // namespace detail

// Fills the two ghost cells (eta, z_b) and two ghost dual slots (q) on each
// side. Interior entries must already be loaded; b_ext supplies bathymetry
// averages on the ghost cells.
inline void fill_ghosts(const GridSpec& grid, const BoundaryPolicy& bc, double t,
                        ExtArray& eta, ExtArray& q, ExtArray& zb, const ExtArray& b_ext) {
    bc.validate();
    const int n = grid.n_cells;

    const auto fill_side = [&](bool left) {
        const SideBc& side = left ? bc.left : bc.right;
        const std::array<int, 2> cells = left ? std::array<int, 2>{-1, -2}
                                              : std::array<int, 2>{n, n + 1};
        const std::array<int, 2> slots = left ? std::array<int, 2>{-1, -2}
                                              : std::array<int, 2>{n + 1, n + 2};
        switch (side.kind) {
        case BcKind::FreeOutflow: {
            const int ci = left ? 0 : n - 1;
            const int si = left ? 0 : n;
            for (int c : cells) {
                eta[c] = eta[ci];
                zb[c] = zb[ci];
            }
            for (int s : slots) q[s] = q[si];
            break;
        }
        case BcKind::Periodic: {
            for (int c : cells) {
                const int w = left ? c + n : c - n;
                eta[c] = eta[w];
                zb[c] = zb[w];
            }
            // slot 0 and slot n are the same physical interface
            for (int s : slots) {
                const int w = left ? s + n : s - n;
                q[s] = q[w];
            }
            break;
        }
        case BcKind::InflowWave: {
            const double x_bc = left ? grid.x_a : grid.x_b;
            const auto v = detail::inflow_values(side.wave, bc.grass, x_bc, t);
            const int ci = left ? 0 : n - 1;
            for (int c : cells) {
                zb[c] = zb[ci];
                eta[c] = v.h + b_ext[c] + zb[c];
            }
            for (int s : slots) q[s] = v.q;
            break;
        }
        case BcKind::OdeReference: {
            OdeRefTrajectory& traj = *bc.ode_ref;
            for (int c : cells) {
                const double xl = grid.interface(c);
                const double xr = grid.interface(c + 1);
                zb[c] = gauss3_average([&](double x) { return traj.zb_at(x, t); }, xl, xr);
                eta[c] = traj.h_at(t) + zb[c] + b_ext[c];
            }
            for (int s : slots) {
                const double xc = grid.interface(s);
                q[s] = gauss3_average([&](double x) { return traj.q_at(x, t); },
                                      xc - 0.5 * grid.dx, xc + 0.5 * grid.dx);
            }
            break;
        }
        }
    };

    fill_side(true);
    fill_side(false);
}

// Ghost values for any auxiliary field living on dual slots (two ghost slots
// per side), e.g. the upwind-interpolated interface thickness.
inline void fill_slot_ghosts(const GridSpec& grid, const BoundaryPolicy& bc, double t,
                             ExtArray& w) {
    const int n = grid.n_cells;
    const auto fill_side = [&](bool left) {
        const SideBc& side = left ? bc.left : bc.right;
        const std::array<int, 2> slots = left ? std::array<int, 2>{-1, -2}
                                              : std::array<int, 2>{n + 1, n + 2};
        switch (side.kind) {
        case BcKind::FreeOutflow: {
            const int si = left ? 0 : n;
            for (int s : slots) w[s] = w[si];
            break;
        }
        case BcKind::Periodic: {
            for (int s : slots) w[s] = left ? w[s + n] : w[s - n];
            break;
        }
        case BcKind::InflowWave: {
            const double x_bc = left ? grid.x_a : grid.x_b;
            const auto v = detail::inflow_values(side.wave, bc.grass, x_bc, t);
            for (int s : slots) w[s] = v.h;
            break;
        }
        case BcKind::OdeReference: {
            const double hval = bc.ode_ref->h_at(t);
            for (int s : slots) w[s] = hval;
            break;
        }
        }
    };
    fill_side(true);
    fill_side(false);
}

// Closure of the implicit free-surface system for one side, evaluated at the
// stage's implicit time.
inline EtaGhostMode eta_ghost_mode(const SideBc& side) {
    switch (side.kind) {
    case BcKind::FreeOutflow:
        return EtaGhostMode::Extrapolate;
    case BcKind::Periodic:
        return EtaGhostMode::Periodic;
    case BcKind::InflowWave:
    case BcKind::OdeReference:
        return EtaGhostMode::Prescribed;
    }
    return EtaGhostMode::Extrapolate;
}

// ---------------------------------------------------------------------------
// Absorbing sponge layer.
// ---------------------------------------------------------------------------

// Relaxation zone between x_start (interior edge, weight 1) and x_end (outer
// edge, weight 0); orientation follows from the ordering of the two ends.
// The target is either a fixed far-field state or the ODE reference fields.
struct SpongeSpec {
    double x_start = 0.0;
    double x_end = 0.0;
    double eta_eq = 0.0;
    double q_eq = 0.0;
    double zb_eq = 0.0;
    bool track_ode = false;
    double wavelength_hint = 0.0; // advisory: layer should exceed twice this

    bool too_short() const {
        return wavelength_hint > 0.0 && std::abs(x_end - x_start) <= 2.0 * wavelength_hint;
    }
};

// Cubic blend: 1 at the interior edge with zero slope, 0 at the outer edge.
inline double sponge_weight(double x, const SpongeSpec& spec) {
    const double phi = std::clamp((x - spec.x_start) / (spec.x_end - spec.x_start), 0.0, 1.0);
    const double r = 1.0 - phi;
    return -2.0 * r * r * r + 3.0 * r * r;
}

// Convex blend of the computed step toward the target state, applied after
// each completed time step (not inside Runge-Kutta stages).
inline void apply_sponge(StaggeredState& s, const GridSpec& grid, const SpongeSpec& spec,
                         OdeRefTrajectory* traj, double t) {
    const int n = grid.n_cells;
    for (int c = 0; c < n; ++c) {
        const double x = grid.center(c);
        const double w = sponge_weight(x, spec);
        if (w >= 1.0) continue;
        double eta_eq = spec.eta_eq;
        double zb_eq = spec.zb_eq;
        if (spec.track_ode) {
            zb_eq = traj->zb_at(x, t);
            eta_eq = traj->h_at(t) + zb_eq + s.b[static_cast<std::size_t>(c)];
        }
        s.eta[static_cast<std::size_t>(c)] = w * s.eta[static_cast<std::size_t>(c)] + (1.0 - w) * eta_eq;
        s.zb[static_cast<std::size_t>(c)] = w * s.zb[static_cast<std::size_t>(c)] + (1.0 - w) * zb_eq;
    }
    for (int k = 0; k <= n; ++k) {
        const double x = grid.interface(k);
        const double w = sponge_weight(x, spec);
        if (w >= 1.0) continue;
        const double q_eq = spec.track_ode ? traj->q_at(x, t) : spec.q_eq;
        s.q[static_cast<std::size_t>(k)] = w * s.q[static_cast<std::size_t>(k)] + (1.0 - w) * q_eq;
    }
}

} // namespace siswe
