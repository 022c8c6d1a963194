#pragma once

#include <algorithm>
#include <cmath>

#include "siswe/common.hpp"
#include "siswe/fluxes.hpp"
#include "siswe/grid.hpp"

namespace siswe {

enum class CflMode { Explicit, SemiImplicit };

// Semi-implicit stepping is limited by the material velocity (MCFL), with a
// configurable accuracy-driven bound on the wave CFL that may exceed one.
struct CflPolicy {
    double mcfl = 0.4;           // empirical stability cap is 0.75
    double cfl_imex = 1.0;
    double cfl_imex_cap = 1e9;   // per-case ceiling on cfl_imex
    double cfl_explicit = 0.45;
    CflMode mode = CflMode::SemiImplicit;
    double fixed_dt = 0.0;       // > 0 bypasses the controller

    void validate() const {
        if (mcfl > 0.75) {
            throw ConfigError("cfl: material CFL above the 0.75 stability bound");
        }
        if (mcfl <= 0.0 || cfl_imex <= 0.0 || cfl_explicit <= 0.0) {
            throw ConfigError("cfl: CFL numbers must be positive");
        }
    }
};

struct DtInfo {
    double dt = 0.0;
    double u_max = 0.0;
    double lambda_max = 0.0;

    double cfl(double dx) const { return lambda_max * dt / dx; }
    double mcfl(double dx) const { return u_max * dt / dx; }
};

// One log line per accepted step (CSV in the run harness).
struct StepRecord {
    double t, dt, cfl, mcfl;
};

// dt = min( MCFL dx / u_max, CFL_imex dx / lambda_max ) in semi-implicit
// mode, dt = CFL_exp dx / lambda_max in explicit mode. Velocities are
// sampled on dual cells with the thickness interpolated from the two
// neighbours; wave speeds on primal cells.
inline DtInfo compute_dt(const StaggeredState& s, const GridSpec& grid, const CflPolicy& policy,
                         Model model, const GrassParams& grass,
                         EigenMethod method = EigenMethod::DeVries, double g = kGravityDefault) {
    const int n = grid.n_cells;
    DtInfo info;

    for (int k = 0; k <= n; ++k) {
        const int cl = std::max(k - 1, 0);
        const int cr = std::min(k, n - 1);
        const double h_slot = 0.5 * (s.h(cl) + s.h(cr));
        if (h_slot <= kDryThreshold) {
            throw DryCellError("compute_dt: dry dual cell");
        }
        info.u_max = std::max(info.u_max, std::abs(s.q[static_cast<std::size_t>(k)]) / h_slot);
    }

    for (int c = 0; c < n; ++c) {
        const double h = s.h(c);
        if (h <= kDryThreshold) {
            throw DryCellError("compute_dt: dry cell");
        }
        const double u = 0.5 * (s.q[static_cast<std::size_t>(c)] + s.q[static_cast<std::size_t>(c + 1)]) / h;
        double lam;
        if (model == Model::SVE && grass.active()) {
            lam = eigenvalues(h, u, grass, method, g).max_abs();
        } else {
            lam = std::abs(u) + std::sqrt(g * h);
        }
        info.lambda_max = std::max(info.lambda_max, lam);
    }

    if (policy.fixed_dt > 0.0) {
        info.dt = policy.fixed_dt;
        return info;
    }

    if (policy.mode == CflMode::Explicit) {
        if (info.lambda_max < 1e-14) {
            throw NumericalError("compute_dt: vanishing wave speed, cannot size explicit step");
        }
        info.dt = policy.cfl_explicit * grid.dx / info.lambda_max;
        return info;
    }

    const double cfl_w = std::min(policy.cfl_imex, policy.cfl_imex_cap);
    double dt = 1e300;
    if (info.u_max > 1e-14) dt = std::min(dt, policy.mcfl * grid.dx / info.u_max);
    if (info.lambda_max > 1e-14) dt = std::min(dt, cfl_w * grid.dx / info.lambda_max);
    if (dt >= 1e300) {
        throw NumericalError("compute_dt: both velocity and wave speed vanish, cannot size step");
    }
    info.dt = dt;
    return info;
}

} // namespace siswe
