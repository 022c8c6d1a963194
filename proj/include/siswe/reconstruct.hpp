#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "siswe/common.hpp"

namespace siswe {

// CWENO(2,3) linear weights and the regularization added to the smoothness
// indicators. The regularization is kept at machine epsilon, not the usual
// dx^2-scaled value; near discontinuities this noticeably sharpens weights.
struct CwenoParams {
    double d_C = 0.5;
    double d_L = 0.25;
    double d_R = 0.25;
    double tau_eps = 2.2204e-16;
};

// Quadratic reconstruction about the cell center:
//   P(x) = a0 + a1*(x - x_i) + a2*(x - x_i)^2
// a0 carries the point-value correction, so P's cell average equals the
// input average for any weights.
struct CwenoPoly {
    double a0 = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
    double omega_L = 0.0;
    double omega_C = 0.0;
    double omega_R = 0.0;

    double eval(double dx_from_center) const {
        return a0 + dx_from_center * (a1 + dx_from_center * a2);
    }
};

// CWENO(2,3) reconstruction from the three cell averages (w_left, w_center,
// w_right). Candidates are the two one-sided linears and the central
// quadratic P_C = (P_opt - d_L P_L - d_R P_R)/d_C; indicators integrate
// squared derivatives over the cell (the linears contribute only l = 1).
inline CwenoPoly cweno_poly(double w_left, double w_center, double w_right,
                            double dx, const CwenoParams& p = {}) {
    const double dl = w_center - w_left;
    const double dr = w_right - w_center;
    const double dd = w_left - 2.0 * w_center + w_right;

    const double ind_L = dl * dl;
    const double ind_R = dr * dr;
    const double ind_C = 0.25 * sqr(w_right - w_left) + (13.0 / 3.0) * dd * dd;

    const double al = p.d_L / sqr(ind_L + p.tau_eps);
    const double ac = p.d_C / sqr(ind_C + p.tau_eps);
    const double ar = p.d_R / sqr(ind_R + p.tau_eps);
    const double inv_sum = 1.0 / (al + ac + ar);

    CwenoPoly poly;
    poly.omega_L = al * inv_sum;
    poly.omega_C = ac * inv_sum;
    poly.omega_R = ar * inv_sum;

    const double wc_over_dc = poly.omega_C / p.d_C;
    poly.a2 = wc_over_dc * dd / (2.0 * dx * dx);
    poly.a1 = (poly.omega_L * dl - poly.omega_R * (-dr)
               - wc_over_dc * (0.5 * (w_left - w_right) + p.d_L * dl - p.d_R * (-dr)))
              / dx;
    poly.a0 = w_center * (poly.omega_L + poly.omega_R)
              - wc_over_dc * ((w_left - 26.0 * w_center + w_right) / 24.0
                              + (p.d_L + p.d_R) * w_center);
    return poly;
}

// Left/right CWENO point values at the interfaces of a ghost-extended array
// of cell averages (two ghost cells per side). Input holds n+4 averages for
// n interior cells; output arrays hold the n+1 interface values, where
// minus[k] is the left cell's polynomial at its right edge and plus[k] the
// right cell's at its left edge.
inline std::pair<std::vector<double>, std::vector<double>>
cweno_edge_values(const std::vector<double>& avg_ext, double dx,
                  const CwenoParams& p = {}) {
    const int n = static_cast<int>(avg_ext.size()) - 4;
    std::vector<double> minus(static_cast<std::size_t>(n + 1));
    std::vector<double> plus(static_cast<std::size_t>(n + 1));
    for (int k = 0; k <= n; ++k) {
        // interface k sits between extended cells k+1 and k+2
        const CwenoPoly left = cweno_poly(avg_ext[k], avg_ext[k + 1], avg_ext[k + 2], dx, p);
        const CwenoPoly right = cweno_poly(avg_ext[k + 1], avg_ext[k + 2], avg_ext[k + 3], dx, p);
        minus[static_cast<std::size_t>(k)] = left.eval(0.5 * dx);
        plus[static_cast<std::size_t>(k)] = right.eval(-0.5 * dx);
    }
    return {std::move(minus), std::move(plus)};
}

// Cubic free-surface interpolant about the interface between the middle two
// cells of a four-average stencil:
//   P(x) = b0 + b1*s + b2*(s^2 - dx^2/12) + b3*s^3,  s = x - x_interface.
// The shifted quadratic term makes b0 the average of P over the dual cell.
struct EtaPolyCoeffs {
    double b0, b1, b2, b3;
};

inline EtaPolyCoeffs eta_poly_coeffs(double eta_m1, double eta_0, double eta_p1,
                                     double eta_p2, double dx) {
    EtaPolyCoeffs c{};
    c.b0 = (-eta_m1 + 9.0 * eta_0 + 9.0 * eta_p1 - eta_p2) / 16.0;
    c.b1 = (eta_m1 - 15.0 * eta_0 + 15.0 * eta_p1 - eta_p2) / (12.0 * dx);
    c.b2 = (eta_m1 - eta_0 - eta_p1 + eta_p2) / (4.0 * dx * dx);
    c.b3 = (-eta_m1 + 3.0 * eta_0 - 3.0 * eta_p1 + eta_p2) / (6.0 * dx * dx * dx);
    return c;
}

inline double eta_poly_eval(const EtaPolyCoeffs& c, double s, double dx) {
    return c.b0 + c.b1 * s + c.b2 * (s * s - dx * dx / 12.0) + c.b3 * s * s * s;
}

// Third-order upwind interpolation of the interface value from the four
// surrounding cell averages; the sign of the local discharge picks the
// left- or right-biased parabola.
inline double upwind_interface_h(double h_m1, double h_0, double h_p1, double h_p2,
                                 double q_sign) {
    if (q_sign >= 0.0) {
        return h_m1 + 1.5 * (h_0 - h_m1) + 0.375 * (h_p1 - 2.0 * h_0 + h_m1);
    }
    return h_0 + 0.5 * (h_p1 - h_0) - 0.125 * (h_p2 - 2.0 * h_p1 + h_0);
}

// Third difference of slot values centered on cell i; approximates
// dx^3 * q''' and feeds the explicit mass-update correction.
inline double delta3(const ExtArray& q_slots, int i) {
    return q_slots[i + 2] - 3.0 * q_slots[i + 1] + 3.0 * q_slots[i] - q_slots[i - 1];
}

} // namespace siswe
