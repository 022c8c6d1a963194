#pragma once

#include <functional>
#include <string>
#include <vector>

#include "siswe/common.hpp"

namespace siswe {

// Uniform staggered grid on [x_a, x_b]: n_cells primal cells with averages
// of eta, z_b, b, and n_cells+1 interface slots carrying dual-cell averages
// of q. Dual cell k spans the two half-cells around interface k.
struct GridSpec {
    double x_a = 0.0;
    double x_b = 0.0;
    int n_cells = 0;
    double dx = 0.0;

    double center(int i) const { return x_a + (i + 0.5) * dx; }
    double interface(int k) const { return x_a + k * dx; }
};

inline GridSpec build_grid(double x_a, double x_b, int n_cells) {
    if (!(x_a < x_b)) {
        throw ConfigError("build_grid: domain must satisfy x_a < x_b");
    }
    if (n_cells < 8) {
        throw ConfigError("build_grid: need at least 8 cells for the reconstruction stencils");
    }
    GridSpec g;
    g.x_a = x_a;
    g.x_b = x_b;
    g.n_cells = n_cells;
    g.dx = (x_b - x_a) / n_cells;
    return g;
}

// Cell-averaged state: eta, z_b and the fixed bathymetry b on primal cells,
// q on the n_cells+1 dual slots. z_b stays zero-filled for pure shallow
// water runs.
struct StaggeredState {
    std::vector<double> eta;
    std::vector<double> q;
    std::vector<double> zb;
    std::vector<double> b;
    double t = 0.0;

    int n_cells() const { return static_cast<int>(eta.size()); }

    double h(int i) const {
        return eta[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)] -
               zb[static_cast<std::size_t>(i)];
    }
};

inline void check_wet(const StaggeredState& s, const char* where) {
    for (int i = 0; i < s.n_cells(); ++i) {
        if (!(s.h(i) > kDryThreshold)) {
            throw DryCellError(std::string(where) + ": dry cell at index " + std::to_string(i) +
                               " (h = " + std::to_string(s.h(i)) + ")");
        }
    }
}

using ScalarField = std::function<double(double)>;

// Projects pointwise initial data onto cell averages with the 3-point
// Gauss-Legendre rule (exact through degree 5, well below the scheme's
// order). Boundary dual cells reach half a cell outside the domain; the
// initial profiles are global formulas, so q0 is simply integrated there,
// with coordinates wrapped when the run is periodic.
inline StaggeredState project_initial(const GridSpec& grid, const ScalarField& eta0,
                                      const ScalarField& q0, const ScalarField& zb0,
                                      const ScalarField& b, bool periodic_wrap = false) {
    const int n = grid.n_cells;
    StaggeredState s;
    s.eta.resize(static_cast<std::size_t>(n));
    s.zb.resize(static_cast<std::size_t>(n));
    s.b.resize(static_cast<std::size_t>(n));
    s.q.resize(static_cast<std::size_t>(n + 1));

    for (int i = 0; i < n; ++i) {
        const double xl = grid.interface(i);
        const double xr = grid.interface(i + 1);
        s.eta[static_cast<std::size_t>(i)] = gauss3_average(eta0, xl, xr);
        s.zb[static_cast<std::size_t>(i)] = gauss3_average(zb0, xl, xr);
        s.b[static_cast<std::size_t>(i)] = gauss3_average(b, xl, xr);
    }

    const double span = grid.x_b - grid.x_a;
    const auto q0_eval = [&](double x) {
        if (periodic_wrap) {
            double xm = std::fmod(x - grid.x_a, span);
            if (xm < 0.0) xm += span;
            return q0(grid.x_a + xm);
        }
        return q0(x);
    };
    for (int k = 0; k <= n; ++k) {
        const double xc = grid.interface(k);
        s.q[static_cast<std::size_t>(k)] = gauss3_average(q0_eval, xc - 0.5 * grid.dx, xc + 0.5 * grid.dx);
    }

    check_wet(s, "project_initial");
    return s;
}

} // namespace siswe
