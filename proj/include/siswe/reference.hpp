#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "siswe/common.hpp"
#include "siswe/fluxes.hpp"

namespace siswe {

// ---------------------------------------------------------------------------
// Time-dependent reference solution for the coupled system with m_g = 3.
//
// With h constant in space, a linear initial velocity profile u_ini = a x + b
// and z_b,ini = (3 xi A_g a / c) u_ini^2, the full fields
//   h(x,t) = H(t),  q(x,t) = H(t) U(t) u_ini(x),  z_b(x,t) = Z(t) z_b,ini(x)
// solve the system exactly when (H, U, Z) obey the ODE system below with
// (H, U, Z)(0) = (h0, 1, 1).
// ---------------------------------------------------------------------------

struct OdeRefParams {
    double h0 = 10.0;
    double a_lin = 0.01;
    double b_lin = 0.01;
    double c_coef = 1.0;
    double A_g = 0.001;
    double xi_por = 1.0;
    double g = kGravityDefault;

    double u_ini(double x) const { return a_lin * x + b_lin; }
    double zb_ini(double x) const {
        return 3.0 * xi_por * A_g * a_lin / c_coef * sqr(u_ini(x));
    }
};

struct OdeRefValue {
    double h = 0.0;
    double u = 0.0;
    double zb = 0.0;
};

namespace detail {

inline std::array<double, 3> ode_ref_rhs(const std::array<double, 3>& w, const OdeRefParams& p) {
    const double coupling = 6.0 * p.g * p.xi_por * p.A_g * p.a_lin * p.a_lin / p.c_coef;
    return {-p.a_lin * w[1] * w[0],
            -p.a_lin * w[1] * w[1] - coupling * w[2],
            -p.c_coef * w[1] * w[1] * w[1]};
}

inline std::array<double, 3> rk4_step(const std::array<double, 3>& w, double dt,
                                      const OdeRefParams& p) {
    const auto k1 = ode_ref_rhs(w, p);
    std::array<double, 3> tmp;
    for (int j = 0; j < 3; ++j) tmp[j] = w[j] + 0.5 * dt * k1[j];
    const auto k2 = ode_ref_rhs(tmp, p);
    for (int j = 0; j < 3; ++j) tmp[j] = w[j] + 0.5 * dt * k2[j];
    const auto k3 = ode_ref_rhs(tmp, p);
    for (int j = 0; j < 3; ++j) tmp[j] = w[j] + dt * k3[j];
    const auto k4 = ode_ref_rhs(tmp, p);
    std::array<double, 3> out;
    for (int j = 0; j < 3; ++j)
        out[j] = w[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    return out;
}

} // namespace detail

// Classical one-step 4th-order integration at a fixed step; fine enough that
// a half-step re-integration agrees to well below 1e-8 on the test horizons.
inline OdeRefValue ode_ref_solution(double t, const OdeRefParams& p, double dt_cap = 0.5) {
    if (t < 0.0) throw ConfigError("ode_ref_solution: t must be nonnegative");
    std::array<double, 3> w{p.h0, 1.0, 1.0};
    if (t > 0.0) {
        const double dt_target = std::min(1e-3 * std::max(t, 1.0), dt_cap);
        const int steps = std::max(1, static_cast<int>(std::ceil(t / dt_target)));
        const double dt = t / steps;
        for (int s = 0; s < steps; ++s) {
            w = detail::rk4_step(w, dt, p);
            for (double v : w) {
                if (!(std::abs(v) < 1e6)) {
                    throw NumericalError("ode_ref_solution: trajectory blow-up");
                }
            }
        }
    }
    return {w[0], w[1], w[2]};
}

// Dense-output trajectory: fixed-step history plus cubic Hermite evaluation,
// so boundary fills and sponge targets can query arbitrary (non-monotone)
// stage times cheaply.
class OdeRefTrajectory {
public:
    explicit OdeRefTrajectory(const OdeRefParams& p, double dt_sample = 0.25)
        : params_(p), dt_(dt_sample) {
        samples_.push_back({p.h0, 1.0, 1.0});
    }

    const OdeRefParams& params() const { return params_; }

    OdeRefValue value(double t) {
        if (t < 0.0) throw ConfigError("OdeRefTrajectory: t must be nonnegative");
        extend_to(t);
        const double s = t / dt_;
        std::size_t i = static_cast<std::size_t>(s);
        if (i + 1 >= samples_.size()) i = samples_.size() - 2;
        const double theta = s - static_cast<double>(i);
        const auto& w0 = samples_[i];
        const auto& w1 = samples_[i + 1];
        const auto f0 = detail::ode_ref_rhs(w0, params_);
        const auto f1 = detail::ode_ref_rhs(w1, params_);
        std::array<double, 3> out;
        const double t2 = theta * theta, t3 = t2 * theta;
        for (int j = 0; j < 3; ++j) {
            out[j] = (2.0 * t3 - 3.0 * t2 + 1.0) * w0[j] + (t3 - 2.0 * t2 + theta) * dt_ * f0[j] +
                     (-2.0 * t3 + 3.0 * t2) * w1[j] + (t3 - t2) * dt_ * f1[j];
        }
        return {out[0], out[1], out[2]};
    }

    // Pointwise exact fields.
    double eta_at(double x, double t) { return h_at(t) + zb_at(x, t); }
    double h_at(double t) { return value(t).h; }
    double q_at(double x, double t) {
        const auto w = value(t);
        return w.h * w.u * params_.u_ini(x);
    }
    double zb_at(double x, double t) { return value(t).zb * params_.zb_ini(x); }

private:
    void extend_to(double t) {
        while (dt_ * static_cast<double>(samples_.size() - 1) < t) {
            auto w = detail::rk4_step(samples_.back(), dt_, params_);
            for (double v : w) {
                if (!(std::abs(v) < 1e6)) {
                    throw NumericalError("OdeRefTrajectory: trajectory blow-up");
                }
            }
            samples_.push_back(w);
        }
    }

    OdeRefParams params_;
    double dt_;
    std::vector<std::array<double, 3>> samples_;
};

// ---------------------------------------------------------------------------
// Generic second-order scalar conservation law solver (MUSCL minmod
// reconstruction, Rusanov flux, SSP-RK2). Shared by the two quasi-steady
// sediment references.
// ---------------------------------------------------------------------------

enum class ScalarBc { FreeOutflow, Periodic };

struct ScalarLaw {
    std::function<double(double)> flux;
    std::function<double(double)> wave_speed; // f'
};

namespace detail {

inline double minmod(double a, double b) {
    if (a * b <= 0.0) return 0.0;
    return std::abs(a) < std::abs(b) ? a : b;
}

inline void scalar_rhs(const ScalarLaw& law, const std::vector<double>& z, double dx,
                       ScalarBc bc, std::vector<double>& rhs) {
    const int n = static_cast<int>(z.size());
    const auto at = [&](int i) {
        if (bc == ScalarBc::Periodic) {
            int m = i % n;
            if (m < 0) m += n;
            return z[static_cast<std::size_t>(m)];
        }
        return z[static_cast<std::size_t>(std::clamp(i, 0, n - 1))];
    };
    std::vector<double> fl(static_cast<std::size_t>(n + 1));
    for (int k = 0; k <= n; ++k) {
        const double zm2 = at(k - 2), zm1 = at(k - 1), z0 = at(k), zp1 = at(k + 1);
        const double slope_l = minmod(zm1 - zm2, z0 - zm1);
        const double slope_r = minmod(z0 - zm1, zp1 - z0);
        const double wl = zm1 + 0.5 * slope_l;
        const double wr = z0 - 0.5 * slope_r;
        const double alpha = std::max(std::abs(law.wave_speed(wl)), std::abs(law.wave_speed(wr)));
        fl[static_cast<std::size_t>(k)] = 0.5 * (law.flux(wl) + law.flux(wr) - alpha * (wr - wl));
    }
    rhs.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rhs[static_cast<std::size_t>(i)] =
            -(fl[static_cast<std::size_t>(i + 1)] - fl[static_cast<std::size_t>(i)]) / dx;
    }
}

inline void scalar_evolve(const ScalarLaw& law, std::vector<double>& z, double dx, double t_end,
                          double cfl, ScalarBc bc) {
    const int n = static_cast<int>(z.size());
    std::vector<double> rhs, z1(static_cast<std::size_t>(n));
    double t = 0.0;
    while (t < t_end) {
        double smax = 1e-300;
        for (double v : z) smax = std::max(smax, std::abs(law.wave_speed(v)));
        double dt = cfl * dx / smax;
        dt = std::min(dt, t_end - t);
        scalar_rhs(law, z, dx, bc, rhs);
        for (int i = 0; i < n; ++i)
            z1[static_cast<std::size_t>(i)] =
                z[static_cast<std::size_t>(i)] + dt * rhs[static_cast<std::size_t>(i)];
        scalar_rhs(law, z1, dx, bc, rhs);
        for (int i = 0; i < n; ++i)
            z[static_cast<std::size_t>(i)] = 0.5 * z[static_cast<std::size_t>(i)] +
                                             0.5 * (z1[static_cast<std::size_t>(i)] +
                                                    dt * rhs[static_cast<std::size_t>(i)]);
        t += dt;
    }
}

} // namespace detail

// Weak-interaction sediment reference: with eta and q frozen at constants,
// the bed height obeys a scalar conservation law in z_b.
inline std::vector<double> type1_evolve(std::vector<double> z0, double eta0, double q0,
                                        const GrassParams& p, double t_end, double dx,
                                        double cfl = 0.9, ScalarBc bc = ScalarBc::FreeOutflow) {
    const double coef = p.xi_por() * p.A_g * std::pow(std::abs(q0), p.m_g) *
                        (q0 >= 0.0 ? 1.0 : -1.0);
    ScalarLaw law;
    law.flux = [=](double z) {
        const double h = eta0 - z;
        if (h <= kDryThreshold) throw DryCellError("type1_evolve: bed reached the free surface");
        return coef / std::pow(h, p.m_g);
    };
    law.wave_speed = [=](double z) {
        const double h = eta0 - z;
        if (h <= kDryThreshold) throw DryCellError("type1_evolve: bed reached the free surface");
        return p.m_g * coef / std::pow(h, p.m_g + 1.0);
    };
    detail::scalar_evolve(law, z0, dx, t_end, cfl, bc);
    return z0;
}

// ---------------------------------------------------------------------------
// Quasi-stationary reference: all hydrodynamic fields expressed through the
// velocity, which obeys u_t + lambda(u) u_x = 0.
// ---------------------------------------------------------------------------

class QuasiStatParams {
public:
    QuasiStatParams(double u_lo, double u_hi, const GrassParams& grass, double discharge_Q,
                    double c_bern, double b_const = 0.0, double g = kGravityDefault,
                    int n_table = 4096)
        : grass_(grass), Q_(discharge_Q), C_(c_bern), b_(b_const), g_(g), u_lo_(u_lo),
          u_hi_(u_hi) {
        if (!(discharge_Q > 0.0)) throw ConfigError("QuasiStatParams: need Q > 0");
        if (!(u_lo > 0.0 && u_hi > u_lo)) {
            throw ConfigError("QuasiStatParams: velocity range must be positive and increasing");
        }
        du_ = (u_hi - u_lo) / n_table;
        g_table_.resize(static_cast<std::size_t>(n_table + 1));
        lam_int_table_.resize(static_cast<std::size_t>(n_table + 1));
        g_table_[0] = 0.0;
        lam_int_table_[0] = 0.0;
        for (int i = 1; i <= n_table; ++i) {
            const double ua = u_lo + (i - 1) * du_;
            const double ub = u_lo + i * du_;
            const double um = 0.5 * (ua + ub);
            g_table_[static_cast<std::size_t>(i)] =
                g_table_[static_cast<std::size_t>(i - 1)] +
                du_ / 6.0 * (g_prime(ua) + 4.0 * g_prime(um) + g_prime(ub));
            lam_int_table_[static_cast<std::size_t>(i)] =
                lam_int_table_[static_cast<std::size_t>(i - 1)] +
                du_ / 6.0 * (lambda(ua) + 4.0 * lambda(um) + lambda(ub));
        }
    }

    // dG/du = u (Q - (m+1) xi A u^m) / (Q - xi A u^m)
    double g_prime(double u) const {
        const double xa = grass_.xi_por() * grass_.A_g;
        const double um = std::pow(u, grass_.m_g);
        const double denom = Q_ - xa * um;
        if (denom <= 0.0) {
            throw NumericalError("QuasiStatParams: Q - xi A u^m must stay positive");
        }
        return u * (Q_ - (grass_.m_g + 1.0) * xa * um) / denom;
    }

    double h_of_u(double u) const {
        const double h = Q_ / u - grass_.xi_por() * grass_.A_g * std::pow(u, grass_.m_g - 1.0);
        if (h <= kDryThreshold) throw DryCellError("QuasiStatParams: nonpositive thickness");
        return h;
    }

    double lambda(double u) const {
        const double xa = grass_.xi_por() * grass_.A_g;
        const double um = std::pow(u, grass_.m_g);
        const double denom = (Q_ + (grass_.m_g - 1.0) * xa * um) / (u * u) - g_prime(u) / g_;
        if (std::abs(denom) < 1e-14) {
            throw NumericalError("QuasiStatParams: sediment wave speed denominator vanished");
        }
        return grass_.m_g * xa * std::pow(u, grass_.m_g - 1.0) / denom;
    }

    double G(double u) const { return hermite(g_table_, u, &QuasiStatParams::g_prime); }

    // Antiderivative of lambda; the transport equation is advanced in the
    // equivalent conservative form u_t + (Lambda(u))_x = 0.
    double lambda_int(double u) const { return hermite(lam_int_table_, u, &QuasiStatParams::lambda); }

    double zb_of_u(double u) const { return (C_ - G(u)) / g_ - h_of_u(u) - b_; }
    double q_of_u(double u) const {
        return Q_ - grass_.xi_por() * grass_.A_g * std::pow(u, grass_.m_g);
    }

    double discharge_Q() const { return Q_; }
    double c_bern() const { return C_; }
    const GrassParams& grass() const { return grass_; }
    double gravity() const { return g_; }
    double u_lo() const { return u_lo_; }
    double u_hi() const { return u_hi_; }

private:
    double hermite(const std::vector<double>& table, double u,
                   double (QuasiStatParams::*deriv)(double) const) const {
        if (u < u_lo_ - 1e-12 || u > u_hi_ + 1e-12) {
            throw NumericalError("QuasiStatParams: velocity outside the tabulated range");
        }
        double s = (u - u_lo_) / du_;
        std::size_t i = static_cast<std::size_t>(std::max(0.0, s));
        if (i + 1 >= table.size()) i = table.size() - 2;
        const double theta = s - static_cast<double>(i);
        const double ua = u_lo_ + static_cast<double>(i) * du_;
        const double f0 = table[i], f1 = table[i + 1];
        const double d0 = (this->*deriv)(ua), d1 = (this->*deriv)(ua + du_);
        const double t2 = theta * theta, t3 = t2 * theta;
        return (2.0 * t3 - 3.0 * t2 + 1.0) * f0 + (t3 - 2.0 * t2 + theta) * du_ * d0 +
               (-2.0 * t3 + 3.0 * t2) * f1 + (t3 - t2) * du_ * d1;
    }

    GrassParams grass_;
    double Q_, C_, b_, g_;
    double u_lo_, u_hi_, du_ = 0.0;
    std::vector<double> g_table_, lam_int_table_;
};

struct Type2Fields {
    std::vector<double> u, h, zb, q;
    bool shock_warning = false;
};

inline Type2Fields type2_evolve(std::vector<double> u0, const QuasiStatParams& params,
                                double t_end, double dx, double cfl = 0.45,
                                ScalarBc bc = ScalarBc::FreeOutflow) {
    double grad0 = 0.0;
    for (std::size_t i = 1; i < u0.size(); ++i) {
        grad0 = std::max(grad0, std::abs(u0[i] - u0[i - 1]) / dx);
    }
    ScalarLaw law;
    law.flux = [&params](double u) { return params.lambda_int(u); };
    law.wave_speed = [&params](double u) { return params.lambda(u); };
    detail::scalar_evolve(law, u0, dx, t_end, cfl, bc);

    Type2Fields out;
    double grad1 = 0.0;
    for (std::size_t i = 1; i < u0.size(); ++i) {
        grad1 = std::max(grad1, std::abs(u0[i] - u0[i - 1]) / dx);
    }
    out.shock_warning = grad0 > 0.0 && grad1 > 10.0 * grad0;
    out.u = std::move(u0);
    out.h.resize(out.u.size());
    out.zb.resize(out.u.size());
    out.q.resize(out.u.size());
    for (std::size_t i = 0; i < out.u.size(); ++i) {
        out.h[i] = params.h_of_u(out.u[i]);
        out.zb[i] = params.zb_of_u(out.u[i]);
        out.q[i] = params.q_of_u(out.u[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Exact shock states: given the right state and a shock speed, solve the
// jump conditions
//   -v [h] + [q] = 0,    -v [q] + [q^2/h + g h^2/2] = 0
// for the left state (the trivial equal-state root is excluded by
// bracketing away from h_R).
// ---------------------------------------------------------------------------

struct RiemannState {
    double h = 0.0;
    double q = 0.0;
};

inline RiemannState riemann_left_state(double h_R, double q_R, double v,
                                       double g = kGravityDefault) {
    if (h_R <= kDryThreshold) throw DryCellError("riemann_left_state: dry right state");

    const auto q_left = [&](double h_L) { return q_R - v * (h_R - h_L); };
    const auto resid2 = [&](double h_L) {
        const double q_L = q_left(h_L);
        return -v * (q_R - q_L) + (q_R * q_R / h_R + 0.5 * g * h_R * h_R) -
               (q_L * q_L / h_L + 0.5 * g * h_L * h_L);
    };

    const auto bracket_root = [&](double lo, double hi) -> double {
        double flo = resid2(lo);
        double fhi = resid2(hi);
        if (flo * fhi > 0.0) return -1.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = resid2(mid);
            if (fm == 0.0 || hi - lo < 1e-16 * std::max(1.0, mid)) return mid;
            if (flo * fm <= 0.0) {
                hi = mid;
                fhi = fm;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        return 0.5 * (lo + hi);
    };

    // scan outward from h_R on both sides; the nontrivial root is simple
    double root = -1.0;
    const double eps = 1e-7 * h_R;
    for (int decade = 0; decade < 24 && root < 0.0; ++decade) {
        const double span = h_R * std::pow(1.35, decade);
        root = bracket_root(h_R + eps, h_R + span);
        if (root < 0.0 && h_R - span > kDryThreshold) {
            root = bracket_root(h_R - span, h_R - eps);
        }
    }
    if (root < 0.0) {
        throw NumericalError("riemann_left_state: no admissible left state in bracket");
    }

    RiemannState left{root, q_left(root)};
    const double scale = std::max({1.0, std::abs(v) * (h_R + std::abs(q_R)),
                                   g * h_R * h_R});
    const double r1 = -v * (h_R - left.h) + (q_R - left.q);
    const double r2 = resid2(left.h);
    if (std::abs(r1) > 1e-12 * scale || std::abs(r2) > 1e-12 * scale) {
        throw NumericalError("riemann_left_state: jump-condition residual above tolerance");
    }
    return left;
}

} // namespace siswe
