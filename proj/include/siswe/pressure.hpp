#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "siswe/common.hpp"
#include "siswe/reconstruct.hpp"

namespace siswe {

// Gauss-Legendre offsets of the two-point rule on each half of a dual cell,
// measured from the half-interval's outer endpoint.
struct QuadConstants {
    double zeta_quad;
    double tau_quad;
};

inline QuadConstants quad_constants(double dx) {
    const double s = std::sqrt(3.0) / 12.0;
    return {dx * (0.25 - s), dx * (0.25 + s)};
}

// Coefficients coupling the new discharge on one dual cell to the four
// surrounding free-surface averages (offsets -2..+1 relative to the slot's
// right cell). xi_L comes from the half-integral over the left cell, xi_R
// from the right one.
struct PressureStencil {
    std::array<double, 4> xi_L{};
    std::array<double, 4> xi_R{};
};

// Builds the stencil from the two height polynomials adjacent to the slot.
// The integrand h * d(eta)/dx is evaluated at the two Gauss points of each
// half-interval; collecting the eta-polynomial coefficients per neighbour
// average yields the closed forms below. Each four-entry row sums to zero
// identically; the largest entry is recomputed from the other three so the
// cancellation also holds in floating point (this is what keeps lake-at-rest
// states fixed to rounding level).
inline PressureStencil xi_coeffs(const CwenoPoly& poly_left, const CwenoPoly& poly_right,
                                 double dx) {
    const auto [zeta, tau] = quad_constants(dx);

    const double inv12 = 1.0 / (12.0 * dx);
    const double inv54 = 5.0 / (4.0 * dx);
    const double dx2 = 2.0 * dx * dx;
    const double dx3 = 2.0 * dx * dx * dx;

    const auto beta_p = [&](double d) { return d / dx2 + d * d / dx3; };
    const auto beta_m = [&](double d) { return d / dx2 - d * d / dx3; };
    const auto gamma_p = [&](double d) { return d / dx2 + 3.0 * d * d / dx3; };
    const auto gamma_m = [&](double d) { return d / dx2 - 3.0 * d * d / dx3; };

    const double aL_z = 0.25 * poly_left.eval(zeta);
    const double aL_t = 0.25 * poly_left.eval(tau);
    const double aR_z = 0.25 * poly_right.eval(-zeta);
    const double aR_t = 0.25 * poly_right.eval(-tau);

    PressureStencil s;
    s.xi_L[0] = aL_z * (inv12 - beta_p(tau)) + aL_t * (inv12 - beta_p(zeta));
    s.xi_L[1] = aL_z * (-inv54 + gamma_p(tau)) + aL_t * (-inv54 + gamma_p(zeta));
    s.xi_L[2] = aL_z * (inv54 + gamma_m(tau)) + aL_t * (inv54 + gamma_m(zeta));
    s.xi_L[3] = aL_z * (-inv12 - beta_m(tau)) + aL_t * (-inv12 - beta_m(zeta));

    s.xi_R[0] = aR_z * (inv12 + beta_m(tau)) + aR_t * (inv12 + beta_m(zeta));
    s.xi_R[1] = aR_z * (-inv54 - gamma_m(tau)) + aR_t * (-inv54 - gamma_m(zeta));
    s.xi_R[2] = aR_z * (inv54 - gamma_p(tau)) + aR_t * (inv54 - gamma_p(zeta));
    s.xi_R[3] = aR_z * (-inv12 + beta_p(tau)) + aR_t * (-inv12 + beta_p(zeta));

    s.xi_L[2] = -(s.xi_L[0] + s.xi_L[1] + s.xi_L[3]);
    s.xi_R[2] = -(s.xi_R[0] + s.xi_R[1] + s.xi_R[3]);
    return s;
}

inline std::array<double, 4> xi_sum(const PressureStencil& s) {
    return {s.xi_L[0] + s.xi_R[0], s.xi_L[1] + s.xi_R[1],
            s.xi_L[2] + s.xi_R[2], s.xi_L[3] + s.xi_R[3]};
}

// The bracketed sum of the discrete momentum equation: (1/dx) * integral of
// h * d(eta)/dx over the dual cell, as a linear form in the four eta values.
inline double pressure_term(const PressureStencil& s, const std::array<double, 4>& eta4) {
    double acc = 0.0;
    for (int m = 0; m < 4; ++m) {
        acc += (s.xi_L[m] + s.xi_R[m]) * eta4[static_cast<std::size_t>(m)];
    }
    return acc;
}

// Pentadiagonal system for the new free surface. Diagonals are stored by
// offset; `corners` holds the wrap-around entries of a periodic closure.
struct PentaSystem {
    int n = 0;
    std::vector<double> dm2, dm1, diag, dp1, dp2;
    std::vector<double> rhs;
    struct Corner {
        int row, col;
        double value;
    };
    std::vector<Corner> corners;
};

namespace detail {

// LU factorization of the band-only part; no pivoting, guarded pivots
// (assembly produces strictly diagonally dominant rows).
struct PentaFactor {
    int n = 0;
    std::vector<double> u0, u1, u2, m1, m2;

    void factor(const PentaSystem& sys) {
        n = sys.n;
        u0 = sys.diag;
        u1 = sys.dp1;
        u2 = sys.dp2;
        std::vector<double> l1 = sys.dm1;
        std::vector<double> l2 = sys.dm2;
        m1.assign(static_cast<std::size_t>(n), 0.0);
        m2.assign(static_cast<std::size_t>(n), 0.0);

        double diag_scale = 0.0;
        for (double d : sys.diag) diag_scale = std::max(diag_scale, std::abs(d));
        const double pivot_floor = 1e-14 * diag_scale;

        for (int i = 0; i < n; ++i) {
            const double pivot = u0[static_cast<std::size_t>(i)];
            if (std::abs(pivot) < pivot_floor) {
                throw SolverError("pentadiagonal solve: pivot below tolerance at row "
                                  + std::to_string(i));
            }
            if (i + 1 < n) {
                const double m = l1[static_cast<std::size_t>(i + 1)] / pivot;
                m1[static_cast<std::size_t>(i)] = m;
                u0[static_cast<std::size_t>(i + 1)] -= m * u1[static_cast<std::size_t>(i)];
                u1[static_cast<std::size_t>(i + 1)] -= m * u2[static_cast<std::size_t>(i)];
            }
            if (i + 2 < n) {
                const double m = l2[static_cast<std::size_t>(i + 2)] / pivot;
                m2[static_cast<std::size_t>(i)] = m;
                l1[static_cast<std::size_t>(i + 2)] -= m * u1[static_cast<std::size_t>(i)];
                u0[static_cast<std::size_t>(i + 2)] -= m * u2[static_cast<std::size_t>(i)];
            }
        }
    }

    void solve(std::vector<double>& b) const {
        for (int i = 0; i < n; ++i) {
            const double bi = b[static_cast<std::size_t>(i)];
            if (i + 1 < n) b[static_cast<std::size_t>(i + 1)] -= m1[static_cast<std::size_t>(i)] * bi;
            if (i + 2 < n) b[static_cast<std::size_t>(i + 2)] -= m2[static_cast<std::size_t>(i)] * bi;
        }
        for (int i = n - 1; i >= 0; --i) {
            double acc = b[static_cast<std::size_t>(i)];
            if (i + 1 < n) acc -= u1[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i + 1)];
            if (i + 2 < n) acc -= u2[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i + 2)];
            b[static_cast<std::size_t>(i)] = acc / u0[static_cast<std::size_t>(i)];
        }
    }
};

inline void apply_penta(const PentaSystem& sys, const std::vector<double>& x,
                        std::vector<double>& out) {
    const int n = sys.n;
    out.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = sys.diag[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        if (i >= 2) acc += sys.dm2[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i - 2)];
        if (i >= 1) acc += sys.dm1[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i - 1)];
        if (i + 1 < n) acc += sys.dp1[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i + 1)];
        if (i + 2 < n) acc += sys.dp2[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i + 2)];
        out[static_cast<std::size_t>(i)] = acc;
    }
    for (const auto& c : sys.corners) {
        out[static_cast<std::size_t>(c.row)] += c.value * x[static_cast<std::size_t>(c.col)];
    }
}

// Woodbury update: the wrap entries touch at most four distinct columns, so
// a rank-k correction on top of the banded factorization closes the cyclic
// system.
inline std::vector<double> solve_with_corners(const PentaSystem& sys, const PentaFactor& lu,
                                              std::vector<double> b) {
    std::vector<int> cols;
    for (const auto& c : sys.corners) {
        if (std::find(cols.begin(), cols.end(), c.col) == cols.end()) cols.push_back(c.col);
    }
    const int k = static_cast<int>(cols.size());

    std::vector<std::vector<double>> z(static_cast<std::size_t>(k));
    for (int t = 0; t < k; ++t) {
        std::vector<double> w(static_cast<std::size_t>(sys.n), 0.0);
        for (const auto& c : sys.corners) {
            if (c.col == cols[static_cast<std::size_t>(t)]) w[static_cast<std::size_t>(c.row)] += c.value;
        }
        lu.solve(w);
        z[static_cast<std::size_t>(t)] = std::move(w);
    }
    lu.solve(b);

    // small dense system (I + V Z) s = V y, V selecting the wrap columns
    std::vector<double> cap(static_cast<std::size_t>(k * k), 0.0);
    std::vector<double> rhs_small(static_cast<std::size_t>(k), 0.0);
    for (int r = 0; r < k; ++r) {
        const int row = cols[static_cast<std::size_t>(r)];
        for (int c = 0; c < k; ++c) {
            cap[static_cast<std::size_t>(r * k + c)] =
                (r == c ? 1.0 : 0.0) + z[static_cast<std::size_t>(c)][static_cast<std::size_t>(row)];
        }
        rhs_small[static_cast<std::size_t>(r)] = b[static_cast<std::size_t>(row)];
    }
    for (int p = 0; p < k; ++p) {
        int best = p;
        for (int r = p + 1; r < k; ++r) {
            if (std::abs(cap[static_cast<std::size_t>(r * k + p)]) >
                std::abs(cap[static_cast<std::size_t>(best * k + p)]))
                best = r;
        }
        for (int c = 0; c < k; ++c)
            std::swap(cap[static_cast<std::size_t>(p * k + c)], cap[static_cast<std::size_t>(best * k + c)]);
        std::swap(rhs_small[static_cast<std::size_t>(p)], rhs_small[static_cast<std::size_t>(best)]);
        const double piv = cap[static_cast<std::size_t>(p * k + p)];
        if (std::abs(piv) < 1e-300) throw SolverError("cyclic closure: singular capacitance system");
        for (int r = p + 1; r < k; ++r) {
            const double f = cap[static_cast<std::size_t>(r * k + p)] / piv;
            for (int c = p; c < k; ++c)
                cap[static_cast<std::size_t>(r * k + c)] -= f * cap[static_cast<std::size_t>(p * k + c)];
            rhs_small[static_cast<std::size_t>(r)] -= f * rhs_small[static_cast<std::size_t>(p)];
        }
    }
    for (int p = k - 1; p >= 0; --p) {
        double acc = rhs_small[static_cast<std::size_t>(p)];
        for (int c = p + 1; c < k; ++c)
            acc -= cap[static_cast<std::size_t>(p * k + c)] * rhs_small[static_cast<std::size_t>(c)];
        rhs_small[static_cast<std::size_t>(p)] = acc / cap[static_cast<std::size_t>(p * k + p)];
    }

    for (int t = 0; t < k; ++t) {
        const double s = rhs_small[static_cast<std::size_t>(t)];
        for (int i = 0; i < sys.n; ++i)
            b[static_cast<std::size_t>(i)] -= s * z[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
    }
    return b;
}

} // namespace detail

// Direct O(n) solve with one step of iterative refinement; the refined
// residual is checked against the contracted bound.
inline std::vector<double> solve_penta(const PentaSystem& sys) {
    detail::PentaFactor lu;
    lu.factor(sys);

    const auto solve_once = [&](std::vector<double> b) {
        if (sys.corners.empty()) {
            lu.solve(b);
            return b;
        }
        return detail::solve_with_corners(sys, lu, std::move(b));
    };

    std::vector<double> x = solve_once(sys.rhs);

    std::vector<double> ax;
    detail::apply_penta(sys, x, ax);
    std::vector<double> r(static_cast<std::size_t>(sys.n));
    double rnorm = 0.0;
    for (int i = 0; i < sys.n; ++i) {
        r[static_cast<std::size_t>(i)] = sys.rhs[static_cast<std::size_t>(i)] - ax[static_cast<std::size_t>(i)];
        rnorm = std::max(rnorm, std::abs(r[static_cast<std::size_t>(i)]));
    }
    if (rnorm > 0.0) {
        std::vector<double> dx = solve_once(std::move(r));
        for (int i = 0; i < sys.n; ++i) x[static_cast<std::size_t>(i)] += dx[static_cast<std::size_t>(i)];
    }

    detail::apply_penta(sys, x, ax);
    double bnorm = 0.0, resid = 0.0;
    for (int i = 0; i < sys.n; ++i) {
        bnorm = std::max(bnorm, std::abs(sys.rhs[static_cast<std::size_t>(i)]));
        resid = std::max(resid, std::abs(sys.rhs[static_cast<std::size_t>(i)] - ax[static_cast<std::size_t>(i)]));
    }
    if (resid > 1e-11 * std::max(bnorm, 1e-300)) {
        throw SolverError("pentadiagonal solve: residual above tolerance");
    }
    return x;
}

// How the elliptic rows treat free-surface values outside the domain.
enum class EtaGhostMode { Extrapolate, Periodic, Prescribed };

struct EllipticClosure {
    EtaGhostMode left = EtaGhostMode::Extrapolate;
    EtaGhostMode right = EtaGhostMode::Extrapolate;
    // eta ghosts for Prescribed sides: cells (-2,-1) and (n, n+1)
    std::array<double, 2> left_eta{};
    std::array<double, 2> right_eta{};
    // boundary dual slots whose new-time discharge is imposed directly; the
    // row then carries no coupling through that slot (its flux already sits
    // in eta_star)
    bool left_slot_prescribed = false;
    bool right_slot_prescribed = false;
};

// Row i of the system expresses
//   eta_i + (g dt^2/dx) [ (xi-sum at slot i+1) - (xi-sum at slot i) ] . eta = eta*_i
// after substituting the discrete momentum update into the mass update.
// Rows whose couplings stay inside the domain (possibly folded or wrapped)
// have unit row sum identically; their diagonal is reconstructed from the
// off-diagonal entries so the identity survives rounding.
inline PentaSystem assemble_elliptic(const std::vector<PressureStencil>& slots,
                                     const std::vector<double>& eta_star,
                                     double dt, double dx, double g,
                                     const EllipticClosure& closure) {
    const int n = static_cast<int>(eta_star.size());
    if (static_cast<int>(slots.size()) != n + 1) {
        throw ConfigError("assemble_elliptic: need one pressure stencil per dual slot");
    }
    PentaSystem sys;
    sys.n = n;
    sys.dm2.assign(static_cast<std::size_t>(n), 0.0);
    sys.dm1.assign(static_cast<std::size_t>(n), 0.0);
    sys.diag.assign(static_cast<std::size_t>(n), 0.0);
    sys.dp1.assign(static_cast<std::size_t>(n), 0.0);
    sys.dp2.assign(static_cast<std::size_t>(n), 0.0);
    sys.rhs = eta_star;

    const double kfac = g * dt * dt / dx;

    for (int row = 0; row < n; ++row) {
        std::array<double, 5> band{};
        double corner_sum = 0.0;
        bool exact_row_sum = true;

        const auto add = [&](int col, double coeff) {
            if (col < 0) {
                switch (closure.left) {
                case EtaGhostMode::Extrapolate:
                    col = 0;
                    break;
                case EtaGhostMode::Periodic:
                    col += n;
                    break;
                case EtaGhostMode::Prescribed:
                    sys.rhs[static_cast<std::size_t>(row)] -=
                        coeff * closure.left_eta[static_cast<std::size_t>(col + 2)];
                    exact_row_sum = false;
                    return;
                }
            } else if (col >= n) {
                switch (closure.right) {
                case EtaGhostMode::Extrapolate:
                    col = n - 1;
                    break;
                case EtaGhostMode::Periodic:
                    col -= n;
                    break;
                case EtaGhostMode::Prescribed:
                    sys.rhs[static_cast<std::size_t>(row)] -=
                        coeff * closure.right_eta[static_cast<std::size_t>(col - n)];
                    exact_row_sum = false;
                    return;
                }
            }
            const int off = col - row;
            if (off >= -2 && off <= 2) {
                band[static_cast<std::size_t>(off + 2)] += coeff;
            } else {
                sys.corners.push_back({row, col, coeff});
                corner_sum += coeff;
            }
        };

        // slot `row` enters with +, slot `row+1` with -
        for (int side = 0; side < 2; ++side) {
            const int s = row + side;
            const double sign = (side == 0) ? 1.0 : -1.0;
            if ((s == 0 && closure.left_slot_prescribed) ||
                (s == n && closure.right_slot_prescribed)) {
                exact_row_sum = false;
                continue;
            }
            const auto chi = xi_sum(slots[static_cast<std::size_t>(s)]);
            for (int m = 0; m < 4; ++m) {
                add(s - 2 + m, sign * kfac * chi[static_cast<std::size_t>(m)]);
            }
        }

        if (exact_row_sum) {
            band[2] = 1.0 - (band[0] + band[1] + band[3] + band[4]) - corner_sum;
        } else {
            band[2] += 1.0;
        }

        sys.dm2[static_cast<std::size_t>(row)] = band[0];
        sys.dm1[static_cast<std::size_t>(row)] = band[1];
        sys.diag[static_cast<std::size_t>(row)] = band[2];
        sys.dp1[static_cast<std::size_t>(row)] = band[3];
        sys.dp2[static_cast<std::size_t>(row)] = band[4];
    }
    return sys;
}

} // namespace siswe
