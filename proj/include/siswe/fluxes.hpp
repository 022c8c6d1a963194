#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "siswe/common.hpp"

namespace siswe {

// Grass bedload closure q_b = xi * A_g * u * |u|^(m_g - 1), with
// xi = 1/(1 - rho0) the porosity factor. A_g = 0 switches the sediment
// coupling off.
struct GrassParams {
    double A_g = 0.0;
    double m_g = 3.0;
    double rho0 = 0.0;

    double xi_por() const { return 1.0 / (1.0 - rho0); }
    bool active() const { return A_g > 0.0; }
};

inline double grass_qb(double h, double q, const GrassParams& p) {
    if (h <= kDryThreshold) {
        throw DryCellError("grass_qb: water thickness at or below dry threshold");
    }
    const double u = q / h;
    return p.xi_por() * p.A_g * u * std::pow(std::abs(u), p.m_g - 1.0);
}

// d(q_b)/dq at constant h; the h-derivative is -u times this.
inline double grass_beta(double h, double u, const GrassParams& p) {
    return p.m_g * p.xi_por() * p.A_g * std::pow(std::abs(u), p.m_g - 1.0) / h;
}

// Rusanov flux for the momentum advection q^2/h. The hydrostatic pressure is
// not part of this flux (it is handled through the implicit free-surface
// gradient), so the dissipation speed is the material velocity.
inline double rusanov_momentum(double h_minus, double q_minus, double h_plus, double q_plus) {
    if (h_minus <= kDryThreshold || h_plus <= kDryThreshold) {
        throw DryCellError("rusanov_momentum: water thickness at or below dry threshold");
    }
    const double um = q_minus / h_minus;
    const double up = q_plus / h_plus;
    const double alpha = std::max(std::abs(um), std::abs(up));
    return 0.5 * (q_plus * up + q_minus * um - alpha * (q_plus - q_minus));
}

enum class EigenMethod { DeVries, Macca, Exact };

struct EigenTriple {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda3 = 0.0;
    EigenMethod method = EigenMethod::DeVries;

    double max_abs() const {
        return std::max({std::abs(lambda1), std::abs(lambda2), std::abs(lambda3)});
    }
};

// Characteristic polynomial of the coupled system,
//   p(l) = -l ((u - l)^2 - g h) + g h beta (l - u).
inline double sve_char_poly(double lambda, double h, double u, double beta, double g) {
    return -lambda * (sqr(u - lambda) - g * h) + g * h * beta * (lambda - u);
}

namespace detail {

// Three real roots of l^3 + p l^2 + q l + r via the trigonometric method,
// one Newton step each.
inline std::array<double, 3> cubic_roots_real(double p, double q, double r) {
    const double shift = p / 3.0;
    const double a = q - p * p / 3.0;
    const double b = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
    const double disc = -4.0 * a * a * a - 27.0 * b * b;
    const double disc_scale = std::max({4.0 * std::abs(a * a * a), 27.0 * b * b, 1e-300});
    if (a >= 0.0 || disc / disc_scale < -1e-10) {
        throw NumericalError("eigenvalues: failed to isolate three real roots of the cubic");
    }
    std::array<double, 3> roots{};
    {
        const double m = 2.0 * std::sqrt(-a / 3.0);
        double arg = 3.0 * b / (a * m);
        arg = std::clamp(arg, -1.0, 1.0);
        const double theta = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k) {
            roots[static_cast<std::size_t>(k)] =
                m * std::cos(theta - 2.0 * M_PI * k / 3.0) - shift;
        }
    }
    for (auto& x : roots) {
        const double f = x * x * x + p * x * x + q * x + r;
        const double fp = 3.0 * x * x + 2.0 * p * x + q;
        if (std::abs(fp) > 1e-300) x -= f / fp;
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

} // namespace detail

// Wave speeds of the Saint-Venant-Exner system. The approximate variants
// perturb the decoupled speeds (u -+ sqrt(gh), 0) at first order in the
// sediment coupling beta; Exact solves the characteristic cubic.
inline EigenTriple eigenvalues(double h, double u, const GrassParams& p,
                               EigenMethod method = EigenMethod::DeVries,
                               double g = kGravityDefault) {
    if (h <= kDryThreshold) {
        throw DryCellError("eigenvalues: water thickness at or below dry threshold");
    }
    const double c = std::sqrt(g * h);
    const double beta = p.active() ? grass_beta(h, u, p) : 0.0;
    const double fr = std::abs(u) / c;

    EigenTriple ev;
    ev.method = method;
    switch (method) {
    case EigenMethod::DeVries: {
        if (std::abs(1.0 - fr * fr) < 1e-6) {
            throw NumericalError("eigenvalues: de Vries approximation invalid near Fr = 1");
        }
        ev.lambda1 = u - c;
        ev.lambda2 = beta * u / (1.0 - fr * fr);
        ev.lambda3 = u + c;
        break;
    }
    case EigenMethod::Macca: {
        if (std::abs(1.0 - fr * fr) < 1e-6) {
            throw NumericalError("eigenvalues: approximation invalid near Fr = 1");
        }
        ev.lambda1 = u - c - beta * c / (2.0 * (1.0 - fr));
        ev.lambda2 = beta * u / (1.0 - fr * fr);
        ev.lambda3 = u + c + beta * c / (2.0 * (1.0 + fr));
        break;
    }
    case EigenMethod::Exact: {
        // p(l) = 0  <=>  l^3 - 2u l^2 + (u^2 - gh - gh beta) l + gh beta u = 0
        const auto roots = detail::cubic_roots_real(-2.0 * u, u * u - g * h - g * h * beta,
                                                    g * h * beta * u);
        ev.lambda1 = roots[0];
        ev.lambda2 = roots[1];
        ev.lambda3 = roots[2];
        const double scale = std::max(1.0, (std::abs(u) + c) * (std::abs(u) + c) * (std::abs(u) + c));
        for (double l : roots) {
            if (std::abs(sve_char_poly(l, h, u, beta, g)) > 1e-10 * scale) {
                throw NumericalError("eigenvalues: cubic residual above tolerance");
            }
        }
        break;
    }
    }
    return ev;
}

// Dissipation speed for the sediment fluxes: the bedload wave speed from the
// de Vries approximation, floored away from zero. At rest (u = 0, m_g >= 2)
// it vanishes, which is what keeps lake-at-rest states with a sediment bump
// exactly stationary.
inline double exner_wave_speed(double h, double u, const GrassParams& p,
                               double g = kGravityDefault) {
    if (h <= kDryThreshold) {
        throw DryCellError("exner_wave_speed: water thickness at or below dry threshold");
    }
    const double c = std::sqrt(g * h);
    const double fr2 = (u * u) / (c * c);
    const double denom = std::max(std::abs(1.0 - fr2), 1e-6);
    const double beta = p.active() ? grass_beta(h, u, p) : 0.0;
    return std::max(std::abs(beta * u) / denom, 1e-12);
}

// Rusanov fluxes discretizing d(q_b)/dx in the mass and sediment equations;
// the dissipation acts on eta and z_b respectively.
struct ExnerFluxes {
    double g_eta = 0.0;
    double g_zb = 0.0;
};

inline ExnerFluxes rusanov_exner(double h_minus, double q_minus, double zb_minus, double eta_minus,
                                 double h_plus, double q_plus, double zb_plus, double eta_plus,
                                 const GrassParams& p, double alpha) {
    const double qb_m = grass_qb(h_minus, q_minus, p);
    const double qb_p = grass_qb(h_plus, q_plus, p);
    ExnerFluxes f;
    f.g_eta = 0.5 * (qb_p + qb_m - alpha * (eta_plus - eta_minus));
    f.g_zb = 0.5 * (qb_p + qb_m - alpha * (zb_plus - zb_minus));
    return f;
}

} // namespace siswe
