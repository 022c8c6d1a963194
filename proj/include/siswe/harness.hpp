#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "siswe/boundary.hpp"
#include "siswe/common.hpp"
#include "siswe/grid.hpp"
#include "siswe/reference.hpp"
#include "siswe/stepcontrol.hpp"
#include "siswe/timeint.hpp"

namespace siswe {

// ---------------------------------------------------------------------------
// Flat key = value configuration files (dotted keys, '#' comments).
// ---------------------------------------------------------------------------

class KeyValues {
public:
    static KeyValues from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return from_string(ss.str(), path);
    }

    static KeyValues from_string(const std::string& text, const std::string& origin = "<string>") {
        KeyValues kv;
        kv.origin_ = origin;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            const std::string t = trim(line);
            if (t.empty()) continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
            }
            const std::string key = trim(t.substr(0, eq));
            const std::string val = trim(t.substr(eq + 1));
            if (key.empty()) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
            }
            kv.map_[key] = val;
        }
        return kv;
    }

    bool has(const std::string& key) const { return map_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& dflt) const {
        used_.insert(key);
        const auto it = map_.find(key);
        return it == map_.end() ? dflt : it->second;
    }

    std::string require_string(const std::string& key) const {
        used_.insert(key);
        const auto it = map_.find(key);
        if (it == map_.end()) throw ConfigError(origin_ + ": missing required key '" + key + "'");
        return it->second;
    }

    double get_double(const std::string& key, double dflt) const {
        used_.insert(key);
        const auto it = map_.find(key);
        if (it == map_.end()) return dflt;
        return parse_double(key, it->second);
    }

    double require_double(const std::string& key) const {
        return parse_double(key, require_string(key));
    }

    int get_int(const std::string& key, int dflt) const {
        const double v = get_double(key, dflt);
        if (v != std::floor(v)) throw ConfigError(origin_ + ": key '" + key + "' must be an integer");
        return static_cast<int>(v);
    }

    bool get_bool(const std::string& key, bool dflt) const {
        const std::string v = get_string(key, dflt ? "true" : "false");
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError(origin_ + ": key '" + key + "' must be a boolean");
    }

    void set(const std::string& key, const std::string& value) { map_[key] = value; }

    void check_consumed() const {
        for (const auto& [k, v] : map_) {
            if (!used_.count(k)) {
                throw ConfigError(origin_ + ": unknown key '" + k + "'");
            }
        }
    }

    const std::string& origin() const { return origin_; }

private:
    double parse_double(const std::string& key, const std::string& v) const {
        try {
            std::size_t pos = 0;
            const double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ConfigError(origin_ + ": key '" + key + "' is not a number: '" + v + "'");
        }
    }

    std::map<std::string, std::string> map_;
    mutable std::set<std::string> used_;
    std::string origin_;
};

// ---------------------------------------------------------------------------
// Run configuration.
// ---------------------------------------------------------------------------

struct SpongeConfig {
    double width = 0.0;
    double eta_eq = 0.0, q_eq = 0.0, zb_eq = 0.0;
    bool track_ode = false;
    double wavelength_hint = 0.0;
};

struct RunConfig {
    std::string name = "case";
    Model model = Model::SWE;
    TimeScheme scheme = TimeScheme::ImexSSP3;
    SchemeVariant variant = SchemeVariant::Simplified;
    EigenMethod eigen = EigenMethod::DeVries;

    double x_a = 0.0, x_b = 1.0;
    int n_cells = 0;
    double t_end = 0.0;
    double g = kGravityDefault;
    CflPolicy cfl{};
    GrassParams grass{};

    std::string ic_family;
    std::map<std::string, double> ic;

    BcKind bc_left = BcKind::FreeOutflow;
    BcKind bc_right = BcKind::FreeOutflow;
    double wave_amplitude = 0.0, wave_omega = 0.0;

    SpongeConfig sponge_left, sponge_right;

    OdeRefParams ode{};
    bool has_ode = false;

    // optional equilibrium used as the error-norm denominator
    std::optional<double> eta_equil, q_equil, zb_equil;

    std::string out_prefix;
    double series_every = 0.0;
    bool step_log = false;

    std::vector<int> study_levels;
    int study_reference = 0; // 0: Richardson differencing
};

namespace detail {

inline std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stoi(item));
    }
    return out;
}

} // namespace detail

inline RunConfig parse_run_config(const KeyValues& kv) {
    RunConfig c;
    c.name = kv.get_string("name", "case");

    const std::string model = kv.get_string("model", "swe");
    if (model == "swe") c.model = Model::SWE;
    else if (model == "sve") c.model = Model::SVE;
    else throw ConfigError("model must be swe or sve");

    const std::string scheme = kv.get_string("time_scheme", "imex");
    if (scheme == "imex") c.scheme = TimeScheme::ImexSSP3;
    else if (scheme == "euler1") c.scheme = TimeScheme::Euler1;
    else if (scheme == "explicit3") c.scheme = TimeScheme::Explicit3;
    else if (scheme == "explicit1") c.scheme = TimeScheme::Explicit1;
    else throw ConfigError("time_scheme must be imex, euler1, explicit3 or explicit1");

    const std::string variant = kv.get_string("variant", "simplified");
    if (variant == "simplified") c.variant = SchemeVariant::Simplified;
    else if (variant == "fully_third_order") c.variant = SchemeVariant::FullyThirdOrder;
    else throw ConfigError("variant must be simplified or fully_third_order");

    const std::string eig = kv.get_string("eigenvalues", "devries");
    if (eig == "devries") c.eigen = EigenMethod::DeVries;
    else if (eig == "macca") c.eigen = EigenMethod::Macca;
    else if (eig == "exact") c.eigen = EigenMethod::Exact;
    else throw ConfigError("eigenvalues must be devries, macca or exact");

    c.x_a = kv.require_double("domain.x_a");
    c.x_b = kv.require_double("domain.x_b");
    c.n_cells = kv.get_int("domain.n_cells", 0);
    if (c.n_cells <= 0) throw ConfigError("domain.n_cells must be positive");
    c.t_end = kv.require_double("t_end");
    if (c.t_end < 0.0) throw ConfigError("t_end must be nonnegative");
    c.g = kv.get_double("gravity", kGravityDefault);

    c.cfl.mcfl = kv.get_double("cfl.mcfl", 0.4);
    c.cfl.cfl_imex = kv.get_double("cfl.cfl_imex", 1.0);
    c.cfl.cfl_imex_cap = kv.get_double("cfl.cfl_imex_cap", c.cfl.cfl_imex);
    c.cfl.cfl_explicit = kv.get_double("cfl.cfl_explicit", 0.45);
    c.cfl.fixed_dt = kv.get_double("cfl.fixed_dt", 0.0);
    c.cfl.mode = (c.scheme == TimeScheme::Explicit3 || c.scheme == TimeScheme::Explicit1)
                     ? CflMode::Explicit
                     : CflMode::SemiImplicit;
    c.cfl.validate();

    c.grass.A_g = kv.get_double("grass.A_g", 0.0);
    c.grass.m_g = kv.get_double("grass.m_g", 3.0);
    c.grass.rho0 = kv.get_double("grass.rho0", 0.0);
    if (c.grass.rho0 < 0.0 || c.grass.rho0 >= 1.0) throw ConfigError("grass.rho0 must be in [0,1)");

    c.ic_family = kv.require_string("ic.family");
    for (const char* key :
         {"ic.eta.base", "ic.eta.amp", "ic.eta.k", "ic.eta.x0", "ic.q0", "ic.zb.base",
          "ic.zb.amp", "ic.zb.k", "ic.zb.x0", "ic.b.base", "ic.b.amp", "ic.b.k", "ic.b.x0",
          "ic.zb.p8_scale", "ic.h_r", "ic.q_r", "ic.speed_offset", "ic.x0", "ic.u.base",
          "ic.u.amp", "ic.u.x0", "ic.u.width", "ic.h_at_xa", "ic.zb_at_xa"}) {
        if (kv.has(key)) c.ic[key] = kv.get_double(key, 0.0);
    }

    const auto parse_bc = [&](const std::string& v) {
        if (v == "free") return BcKind::FreeOutflow;
        if (v == "periodic") return BcKind::Periodic;
        if (v == "inflow_wave") return BcKind::InflowWave;
        if (v == "ode_reference") return BcKind::OdeReference;
        throw ConfigError("boundary must be free, periodic, inflow_wave or ode_reference");
    };
    c.bc_left = parse_bc(kv.get_string("boundary.left", "free"));
    c.bc_right = parse_bc(kv.get_string("boundary.right", "free"));
    c.wave_amplitude = kv.get_double("boundary.wave.amplitude", 0.0);
    c.wave_omega = kv.get_double("boundary.wave.omega", 0.0);

    const auto parse_sponge = [&](const std::string& prefix, SpongeConfig& s) {
        s.width = kv.get_double(prefix + ".width", 0.0);
        s.eta_eq = kv.get_double(prefix + ".eta_eq", 0.0);
        s.q_eq = kv.get_double(prefix + ".q_eq", 0.0);
        s.zb_eq = kv.get_double(prefix + ".zb_eq", 0.0);
        s.track_ode = kv.get_bool(prefix + ".track_ode", false);
        s.wavelength_hint = kv.get_double(prefix + ".wavelength_hint", 0.0);
    };
    parse_sponge("sponge.left", c.sponge_left);
    parse_sponge("sponge.right", c.sponge_right);

    c.has_ode = kv.has("ode_ref.h0");
    if (c.has_ode) {
        c.ode.h0 = kv.require_double("ode_ref.h0");
        c.ode.a_lin = kv.require_double("ode_ref.a");
        c.ode.b_lin = kv.require_double("ode_ref.b");
        c.ode.c_coef = kv.get_double("ode_ref.c", 1.0);
        c.ode.A_g = c.grass.A_g;
        c.ode.xi_por = c.grass.xi_por();
        c.ode.g = c.g;
    }

    if (kv.has("error.eta_equil")) c.eta_equil = kv.get_double("error.eta_equil", 0.0);
    if (kv.has("error.q_equil")) c.q_equil = kv.get_double("error.q_equil", 0.0);
    if (kv.has("error.zb_equil")) c.zb_equil = kv.get_double("error.zb_equil", 0.0);

    c.out_prefix = kv.get_string("output.prefix", "");
    c.series_every = kv.get_double("output.series_every", 0.0);
    c.step_log = kv.get_bool("output.step_log", false);

    if (kv.has("study.levels")) {
        c.study_levels = detail::parse_int_list(kv.require_string("study.levels"));
    }
    c.study_reference = kv.get_int("study.reference", 0);

    kv.check_consumed();
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    return parse_run_config(KeyValues::from_file(path));
}

// ---------------------------------------------------------------------------
// Initial conditions.
// ---------------------------------------------------------------------------

struct CaseSetup {
    ScalarField eta0, q0, zb0, b;
    bool riemann = false;
    double jump_x0 = 0.0;
    RiemannState left{}, right{};
    std::shared_ptr<QuasiStatParams> quasi; // kept for reference comparisons
};

inline double ic_param(const RunConfig& c, const std::string& key, double dflt) {
    const auto it = c.ic.find(key);
    return it == c.ic.end() ? dflt : it->second;
}

inline CaseSetup build_case_setup(const RunConfig& c) {
    CaseSetup s;
    const auto gaussian = [](double base, double amp, double k, double x0) -> ScalarField {
        return [=](double x) { return base + amp * std::exp(-k * sqr(x - x0)); };
    };

    if (c.ic_family == "gaussians") {
        s.eta0 = gaussian(ic_param(c, "ic.eta.base", 0.0), ic_param(c, "ic.eta.amp", 0.0),
                          ic_param(c, "ic.eta.k", 0.0), ic_param(c, "ic.eta.x0", 0.0));
        const double q0 = ic_param(c, "ic.q0", 0.0);
        s.q0 = [=](double) { return q0; };
        s.zb0 = gaussian(ic_param(c, "ic.zb.base", 0.0), ic_param(c, "ic.zb.amp", 0.0),
                         ic_param(c, "ic.zb.k", 0.0), ic_param(c, "ic.zb.x0", 0.0));
        s.b = gaussian(ic_param(c, "ic.b.base", 0.0), ic_param(c, "ic.b.amp", 0.0),
                       ic_param(c, "ic.b.k", 0.0), ic_param(c, "ic.b.x0", 0.0));
        return s;
    }

    if (c.ic_family == "exner_bump") {
        const double eta0 = ic_param(c, "ic.eta.base", 10.0);
        const double q0 = ic_param(c, "ic.q0", 10.0);
        const double zb_base = ic_param(c, "ic.zb.base", 0.1);
        const double zb_amp = ic_param(c, "ic.zb.amp", 2.0);
        const double p8 = ic_param(c, "ic.zb.p8_scale", 1e14);
        const double b0 = ic_param(c, "ic.b.base", 0.01);
        s.eta0 = [=](double) { return eta0; };
        s.q0 = [=](double) { return q0; };
        s.zb0 = [=](double x) {
            const double x2 = x * x;
            const double x8 = x2 * x2 * x2 * x2;
            return zb_base + zb_amp * std::exp(-x8 / p8);
        };
        s.b = [=](double) { return b0; };
        return s;
    }

    if (c.ic_family == "riemann") {
        const double h_r = ic_param(c, "ic.h_r", 0.6);
        const double q_r = ic_param(c, "ic.q_r", 0.2);
        const double offset = ic_param(c, "ic.speed_offset", 0.1);
        const double v = q_r / h_r + std::sqrt(c.g * h_r) + offset;
        s.riemann = true;
        s.jump_x0 = ic_param(c, "ic.x0", 0.0);
        s.right = {h_r, q_r};
        s.left = riemann_left_state(h_r, q_r, v, c.g);
        const double x0 = s.jump_x0;
        const RiemannState L = s.left, R = s.right;
        s.eta0 = [=](double x) { return x < x0 ? L.h : R.h; };
        s.q0 = [=](double x) { return x < x0 ? L.q : R.q; };
        s.zb0 = [](double) { return 0.0; };
        s.b = [](double) { return 0.0; };
        return s;
    }

    if (c.ic_family == "quasi_stationary") {
        const double u_base = ic_param(c, "ic.u.base", 0.1);
        const double u_amp = ic_param(c, "ic.u.amp", 6e-3);
        const double u_x0 = ic_param(c, "ic.u.x0", 0.4);
        const double u_w = ic_param(c, "ic.u.width", 0.5);
        const double h_a = ic_param(c, "ic.h_at_xa", 0.5);
        const double zb_a = ic_param(c, "ic.zb_at_xa", 0.1);
        const double b0 = ic_param(c, "ic.b.base", 0.0);
        const ScalarField u0 = [=](double x) {
            return u_base + u_amp * std::exp(-sqr(x - u_x0) / sqr(u_w));
        };
        const double u_at_a = u0(c.x_a);
        const double Q = h_a * u_at_a +
                         c.grass.xi_por() * c.grass.A_g * std::pow(u_at_a, c.grass.m_g);
        auto quasi = std::make_shared<QuasiStatParams>(
            0.5 * u_base, 2.0 * (u_base + u_amp), c.grass, Q, 0.0, b0, c.g);
        const double c_bern = quasi->G(u_at_a) + c.g * (h_a + zb_a + b0);
        quasi = std::make_shared<QuasiStatParams>(0.5 * u_base, 2.0 * (u_base + u_amp), c.grass,
                                                  Q, c_bern, b0, c.g);
        s.quasi = quasi;
        s.eta0 = [=](double x) {
            const double u = u0(x);
            return quasi->h_of_u(u) + quasi->zb_of_u(u) + b0;
        };
        s.q0 = [=](double x) { return quasi->q_of_u(u0(x)); };
        s.zb0 = [=](double x) { return quasi->zb_of_u(u0(x)); };
        s.b = [=](double) { return b0; };
        return s;
    }

    if (c.ic_family == "ode_reference") {
        if (!c.has_ode) throw ConfigError("ic.family ode_reference needs the ode_ref.* keys");
        const OdeRefParams p = c.ode;
        s.eta0 = [=](double x) { return p.h0 + p.zb_ini(x); };
        s.q0 = [=](double x) { return p.h0 * p.u_ini(x); };
        s.zb0 = [=](double x) { return p.zb_ini(x); };
        s.b = [](double) { return 0.0; };
        return s;
    }

    throw ConfigError("unknown ic.family '" + c.ic_family + "'");
}

// Exact cell averages of a two-state discontinuity.
inline void project_riemann(const GridSpec& grid, const CaseSetup& s, StaggeredState& st) {
    const auto avg = [&](double xl, double xr, double wl, double wr) {
        if (xr <= s.jump_x0) return wl;
        if (xl >= s.jump_x0) return wr;
        const double f = (s.jump_x0 - xl) / (xr - xl);
        return f * wl + (1.0 - f) * wr;
    };
    for (int i = 0; i < grid.n_cells; ++i) {
        const double xl = grid.interface(i), xr = grid.interface(i + 1);
        st.eta[static_cast<std::size_t>(i)] = avg(xl, xr, s.left.h, s.right.h);
        st.zb[static_cast<std::size_t>(i)] = 0.0;
        st.b[static_cast<std::size_t>(i)] = 0.0;
    }
    for (int k = 0; k <= grid.n_cells; ++k) {
        const double xc = grid.interface(k);
        st.q[static_cast<std::size_t>(k)] =
            avg(xc - 0.5 * grid.dx, xc + 0.5 * grid.dx, s.left.q, s.right.q);
    }
}

// ---------------------------------------------------------------------------
// Case runner.
// ---------------------------------------------------------------------------

struct RunResult {
    GridSpec grid;          // includes sponge extensions
    int interior_begin = 0; // first cell of [x_a, x_b]
    int interior_n = 0;
    StaggeredState initial;
    StaggeredState state;
    std::vector<double> q_primal; // final q averaged to cells
    long steps = 0;
    std::vector<StepRecord> step_records;
    StepFluxes flux_integral;
    double mass_residual_eta = 0.0; // relative discrete balance defect
    double mass_residual_zb = 0.0;
    double runtime_seconds = 0.0;
};

namespace detail {

inline std::string out_dir_override() {
    if (const char* env = std::getenv("SISWE_OUT_DIR")) return env;
    return {};
}

inline std::string resolve_prefix(const std::string& prefix) {
    if (prefix.empty()) return prefix;
    std::filesystem::path p(prefix);
    const std::string dir = out_dir_override();
    if (!dir.empty()) p = std::filesystem::path(dir) / p.filename();
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    return p.string();
}

inline void write_state_csv(const std::string& path, const GridSpec& grid,
                            const StaggeredState& s, const std::vector<double>& q_primal) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << "x,eta,h,q,zb,b\n";
    char buf[256];
    for (int i = 0; i < grid.n_cells; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", grid.center(i),
                      s.eta[static_cast<std::size_t>(i)], s.h(i),
                      q_primal[static_cast<std::size_t>(i)], s.zb[static_cast<std::size_t>(i)],
                      s.b[static_cast<std::size_t>(i)]);
        out << buf;
    }
}

inline void write_dual_csv(const std::string& path, const GridSpec& grid,
                           const StaggeredState& s) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << "x,q\n";
    char buf[128];
    for (int k = 0; k <= grid.n_cells; ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", grid.interface(k),
                      s.q[static_cast<std::size_t>(k)]);
        out << buf;
    }
}

inline void write_step_log(const std::string& path, const std::vector<StepRecord>& recs) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << "t,dt,cfl,mcfl\n";
    char buf[192];
    for (const auto& r : recs) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", r.t, r.dt, r.cfl, r.mcfl);
        out << buf;
    }
}

// q averaged back to the primal cells via the four-slot formula, one-sided
// copies at the two edge cells.
inline std::vector<double> q_to_primal(const GridSpec& grid, const StaggeredState& s) {
    const int n = grid.n_cells;
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) {
        if (c == 0 || c == n - 1) {
            out[static_cast<std::size_t>(c)] =
                0.5 * (s.q[static_cast<std::size_t>(c)] + s.q[static_cast<std::size_t>(c + 1)]);
        } else {
            out[static_cast<std::size_t>(c)] =
                (-s.q[static_cast<std::size_t>(c - 1)] + 9.0 * s.q[static_cast<std::size_t>(c)] +
                 9.0 * s.q[static_cast<std::size_t>(c + 1)] - s.q[static_cast<std::size_t>(c + 2)]) /
                16.0;
        }
    }
    return out;
}

} // namespace detail

struct CaseInstance {
    GridSpec grid;
    int interior_begin = 0;
    int interior_n = 0;
    StaggeredState state;
    BoundaryPolicy bc;
    std::vector<SpongeSpec> sponges;
    std::shared_ptr<OdeRefTrajectory> traj;
    Workspace ws;
    CaseSetup setup;
    ImexTableau tableau;
};

// Builds grid (with whole-cell sponge extensions), initial state, boundary
// policy, sponge specs and workspace for a config, optionally overriding the
// interior resolution.
inline CaseInstance build_case(const RunConfig& c, int n_override = 0) {
    CaseInstance inst;
    const int n_interior = n_override > 0 ? n_override : c.n_cells;
    const double dx = (c.x_b - c.x_a) / n_interior;
    const int nl = c.sponge_left.width > 0.0
                       ? static_cast<int>(std::ceil(c.sponge_left.width / dx - 1e-9))
                       : 0;
    const int nr = c.sponge_right.width > 0.0
                       ? static_cast<int>(std::ceil(c.sponge_right.width / dx - 1e-9))
                       : 0;
    inst.grid = build_grid(c.x_a - nl * dx, c.x_b + nr * dx, n_interior + nl + nr);
    inst.interior_begin = nl;
    inst.interior_n = n_interior;

    inst.setup = build_case_setup(c);
    const bool periodic = c.bc_left == BcKind::Periodic;
    if (inst.setup.riemann) {
        inst.state.eta.resize(static_cast<std::size_t>(inst.grid.n_cells));
        inst.state.zb.resize(static_cast<std::size_t>(inst.grid.n_cells));
        inst.state.b.resize(static_cast<std::size_t>(inst.grid.n_cells));
        inst.state.q.resize(static_cast<std::size_t>(inst.grid.n_cells + 1));
        project_riemann(inst.grid, inst.setup, inst.state);
    } else {
        inst.state = project_initial(inst.grid, inst.setup.eta0, inst.setup.q0, inst.setup.zb0,
                                     inst.setup.b, periodic);
    }

    if (c.has_ode || c.bc_left == BcKind::OdeReference || c.bc_right == BcKind::OdeReference ||
        c.sponge_left.track_ode || c.sponge_right.track_ode) {
        if (!c.has_ode) throw ConfigError("ode_reference boundary needs the ode_ref.* keys");
        inst.traj = std::make_shared<OdeRefTrajectory>(c.ode);
    }

    inst.bc.left.kind = c.bc_left;
    inst.bc.right.kind = c.bc_right;
    inst.bc.grass = c.grass;
    inst.bc.ode_ref = inst.traj;
    const auto wave_spec = [&](double x_bc) {
        InflowWaveSpec w;
        w.amplitude = c.wave_amplitude;
        w.omega = c.wave_omega;
        const double h0 = inst.setup.eta0(x_bc) - inst.setup.zb0(x_bc) - inst.setup.b(x_bc);
        const double q0 = inst.setup.q0(x_bc);
        w.u0 = q0 / h0;
        w.Q0 = q0 + (c.grass.active() ? grass_qb(h0, q0, c.grass) : 0.0);
        return w;
    };
    if (c.bc_left == BcKind::InflowWave) inst.bc.left.wave = wave_spec(inst.grid.x_a);
    if (c.bc_right == BcKind::InflowWave) inst.bc.right.wave = wave_spec(inst.grid.x_b);
    inst.bc.validate();

    const auto make_sponge = [&](const SpongeConfig& sc, bool left) {
        SpongeSpec sp;
        sp.x_start = left ? c.x_a : c.x_b;
        sp.x_end = left ? inst.grid.x_a : inst.grid.x_b;
        sp.eta_eq = sc.eta_eq;
        sp.q_eq = sc.q_eq;
        sp.zb_eq = sc.zb_eq;
        sp.track_ode = sc.track_ode;
        sp.wavelength_hint = sc.wavelength_hint;
        if (sp.too_short()) {
            std::fprintf(stderr, "warning: sponge layer shorter than twice the wavelength hint\n");
        }
        return sp;
    };
    if (nl > 0) inst.sponges.push_back(make_sponge(c.sponge_left, true));
    if (nr > 0) inst.sponges.push_back(make_sponge(c.sponge_right, false));

    inst.ws.init(inst.grid);
    inst.ws.model = c.model;
    inst.ws.variant = c.variant;
    inst.ws.grass = c.grass;
    inst.ws.g = c.g;
    inst.ws.set_bathymetry(inst.setup.b, periodic);

    inst.tableau = tableau_ssp3();
    return inst;
}

inline RunResult run_case(const RunConfig& c, int n_override = 0) {
    const auto t_start = std::chrono::steady_clock::now();
    CaseInstance inst = build_case(c, n_override);

    RunResult res;
    res.grid = inst.grid;
    res.interior_begin = inst.interior_begin;
    res.interior_n = inst.interior_n;
    res.initial = inst.state;

    const double dxw = inst.grid.dx;
    double mass0_eta = 0.0, mass0_zb = 0.0;
    for (int i = 0; i < inst.grid.n_cells; ++i) {
        mass0_eta += inst.state.eta[static_cast<std::size_t>(i)] * dxw;
        mass0_zb += inst.state.zb[static_cast<std::size_t>(i)] * dxw;
    }

    // collocated twin state for the first-order explicit baseline
    CollocatedState col;
    if (c.scheme == TimeScheme::Explicit1) {
        const int n = inst.grid.n_cells;
        col.h.resize(static_cast<std::size_t>(n));
        col.q.resize(static_cast<std::size_t>(n));
        col.zb.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double xl = inst.grid.interface(i), xr = inst.grid.interface(i + 1);
            col.h[static_cast<std::size_t>(i)] = gauss3_average(
                [&](double x) { return inst.setup.eta0(x) - inst.setup.zb0(x) - inst.setup.b(x); },
                xl, xr);
            col.q[static_cast<std::size_t>(i)] = gauss3_average(inst.setup.q0, xl, xr);
            col.zb[static_cast<std::size_t>(i)] = gauss3_average(inst.setup.zb0, xl, xr);
        }
    }

    long step = 0;
    double next_snapshot = c.series_every > 0.0 ? c.series_every : -1.0;
    int snapshot_idx = 0;
    const std::string prefix = detail::resolve_prefix(c.out_prefix);

    try {
        while (inst.state.t < c.t_end - 1e-12 * std::max(1.0, c.t_end)) {
            if (c.scheme == TimeScheme::Explicit1) {
                // sync the staggered view used by the controller
                for (int i = 0; i < inst.grid.n_cells; ++i) {
                    inst.state.eta[static_cast<std::size_t>(i)] =
                        col.h[static_cast<std::size_t>(i)] + col.zb[static_cast<std::size_t>(i)] +
                        inst.state.b[static_cast<std::size_t>(i)];
                    inst.state.zb[static_cast<std::size_t>(i)] = col.zb[static_cast<std::size_t>(i)];
                }
                for (int k = 0; k <= inst.grid.n_cells; ++k) {
                    const int cl = std::max(k - 1, 0), cr = std::min(k, inst.grid.n_cells - 1);
                    inst.state.q[static_cast<std::size_t>(k)] =
                        0.5 * (col.q[static_cast<std::size_t>(cl)] + col.q[static_cast<std::size_t>(cr)]);
                }
            }
            DtInfo info = compute_dt(inst.state, inst.grid, c.cfl, c.model, c.grass, c.eigen, c.g);
            info.dt = std::min(info.dt, c.t_end - inst.state.t);

            StepFluxes f;
            switch (c.scheme) {
            case TimeScheme::Euler1:
                f = euler_step(inst.ws, inst.bc, inst.state, info.dt);
                break;
            case TimeScheme::ImexSSP3:
                f = imex_step(inst.ws, inst.bc, inst.tableau, inst.state, info.dt);
                break;
            case TimeScheme::Explicit3:
                f = explicit3_step(inst.ws, inst.bc, inst.state, info.dt);
                break;
            case TimeScheme::Explicit1:
                col.t = inst.state.t;
                explicit1_step(inst.ws, inst.bc, col, info.dt);
                inst.state.t = col.t;
                break;
            }
            res.flux_integral.add(f);
            ++step;

            for (const auto& sp : inst.sponges) {
                if (c.scheme == TimeScheme::Explicit1) {
                    // blend the collocated fields directly
                    for (int i = 0; i < inst.grid.n_cells; ++i) {
                        const double x = inst.grid.center(i);
                        const double w = sponge_weight(x, sp);
                        if (w >= 1.0) continue;
                        double h_eq = sp.eta_eq - sp.zb_eq - inst.state.b[static_cast<std::size_t>(i)];
                        double q_eq = sp.q_eq;
                        double zb_eq = sp.zb_eq;
                        if (sp.track_ode) {
                            h_eq = inst.traj->h_at(inst.state.t);
                            q_eq = inst.traj->q_at(x, inst.state.t);
                            zb_eq = inst.traj->zb_at(x, inst.state.t);
                        }
                        col.h[static_cast<std::size_t>(i)] =
                            w * col.h[static_cast<std::size_t>(i)] + (1.0 - w) * h_eq;
                        col.q[static_cast<std::size_t>(i)] =
                            w * col.q[static_cast<std::size_t>(i)] + (1.0 - w) * q_eq;
                        col.zb[static_cast<std::size_t>(i)] =
                            w * col.zb[static_cast<std::size_t>(i)] + (1.0 - w) * zb_eq;
                    }
                } else {
                    apply_sponge(inst.state, inst.grid, sp, inst.traj.get(), inst.state.t);
                }
            }

            res.step_records.push_back(
                {inst.state.t, info.dt, info.cfl(inst.grid.dx), info.mcfl(inst.grid.dx)});

            if (next_snapshot > 0.0 && inst.state.t >= next_snapshot - 1e-12 && !prefix.empty()) {
                if (c.scheme != TimeScheme::Explicit1) {
                    const auto qp = detail::q_to_primal(inst.grid, inst.state);
                    detail::write_state_csv(prefix + "_state_" + std::to_string(snapshot_idx) +
                                                ".csv",
                                            inst.grid, inst.state, qp);
                }
                ++snapshot_idx;
                next_snapshot += c.series_every;
            }
        }
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " [case " + c.name + ", t = " +
                             std::to_string(inst.state.t) + ", step " + std::to_string(step) + "]");
    }

    if (c.scheme == TimeScheme::Explicit1) {
        for (int i = 0; i < inst.grid.n_cells; ++i) {
            inst.state.eta[static_cast<std::size_t>(i)] =
                col.h[static_cast<std::size_t>(i)] + col.zb[static_cast<std::size_t>(i)] +
                inst.state.b[static_cast<std::size_t>(i)];
            inst.state.zb[static_cast<std::size_t>(i)] = col.zb[static_cast<std::size_t>(i)];
        }
        for (int k = 0; k <= inst.grid.n_cells; ++k) {
            const int cl = std::max(k - 1, 0), cr = std::min(k, inst.grid.n_cells - 1);
            inst.state.q[static_cast<std::size_t>(k)] =
                0.5 * (col.q[static_cast<std::size_t>(cl)] + col.q[static_cast<std::size_t>(cr)]);
        }
        res.q_primal = col.q;
    } else {
        res.q_primal = detail::q_to_primal(inst.grid, inst.state);
    }

    res.state = inst.state;
    res.steps = step;

    double mass_eta = 0.0, mass_zb = 0.0, abs_eta = 0.0, abs_zb = 0.0;
    for (int i = 0; i < inst.grid.n_cells; ++i) {
        mass_eta += inst.state.eta[static_cast<std::size_t>(i)] * dxw;
        mass_zb += inst.state.zb[static_cast<std::size_t>(i)] * dxw;
        abs_eta += std::abs(inst.state.eta[static_cast<std::size_t>(i)]) * dxw;
        abs_zb += std::abs(inst.state.zb[static_cast<std::size_t>(i)]) * dxw;
    }
    res.mass_residual_eta =
        std::abs(mass_eta - mass0_eta +
                 (res.flux_integral.mass_right - res.flux_integral.mass_left)) /
        std::max(abs_eta, 1e-30);
    res.mass_residual_zb = std::abs(mass_zb - mass0_zb + (res.flux_integral.zb_right -
                                                          res.flux_integral.zb_left)) /
                           std::max(abs_zb, 1e-30);

    if (!prefix.empty()) {
        detail::write_state_csv(prefix + "_state.csv", inst.grid, inst.state, res.q_primal);
        detail::write_dual_csv(prefix + "_q.csv", inst.grid, inst.state);
        if (c.step_log) detail::write_step_log(prefix + "_steps.csv", res.step_records);
    }

    res.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

// ---------------------------------------------------------------------------
// Error norms and convergence studies.
// ---------------------------------------------------------------------------

// Relative L1 error. With an equilibrium profile the denominator is
// ||equil - ref||_1 (the norm of the deviation being resolved); otherwise
// ||ref||_1.
inline double error_norm(const std::vector<double>& num, const std::vector<double>& ref,
                         const std::vector<double>* equil, double dx) {
    if (num.size() != ref.size()) throw ConfigError("error_norm: array sizes differ");
    double err = 0.0, den = 0.0;
    for (std::size_t i = 0; i < num.size(); ++i) {
        err += std::abs(num[i] - ref[i]) * dx;
        den += equil ? std::abs((*equil)[i] - ref[i]) * dx : std::abs(ref[i]) * dx;
    }
    if (den <= 1e-300) throw NumericalError("error_norm: zero denominator");
    return err / den;
}

// Exact aggregation of fine cell averages onto a coarse nested grid.
inline std::vector<double> restrict_averages(const std::vector<double>& fine, int ratio) {
    if (ratio < 1 || static_cast<int>(fine.size()) % ratio != 0) {
        throw ConfigError("restrict_averages: grids are not nested");
    }
    std::vector<double> out(fine.size() / static_cast<std::size_t>(ratio), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double acc = 0.0;
        for (int j = 0; j < ratio; ++j) {
            acc += fine[i * static_cast<std::size_t>(ratio) + static_cast<std::size_t>(j)];
        }
        out[i] = acc / ratio;
    }
    return out;
}

inline std::vector<double> interior_slice(const std::vector<double>& field, int begin, int count) {
    return std::vector<double>(field.begin() + begin, field.begin() + begin + count);
}

struct StudyLevel {
    int n = 0;
    double err_eta = 0.0, err_q = 0.0, err_zb = 0.0;
    double ord_eta = 0.0, ord_q = 0.0, ord_zb = 0.0;
    long steps = 0;
    double runtime_seconds = 0.0;
};

struct StudyReport {
    std::vector<StudyLevel> levels;
    bool richardson = false;
};

inline void fill_orders(StudyReport& rep, const std::vector<int>& ns) {
    for (std::size_t k = 1; k < rep.levels.size(); ++k) {
        const double r = std::log2(static_cast<double>(ns[k]) / ns[k - 1]);
        const auto ord = [&](double e0, double e1) {
            return (e0 > 0.0 && e1 > 0.0) ? std::log2(e0 / e1) / r : 0.0;
        };
        rep.levels[k].ord_eta = ord(rep.levels[k - 1].err_eta, rep.levels[k].err_eta);
        rep.levels[k].ord_q = ord(rep.levels[k - 1].err_q, rep.levels[k].err_q);
        rep.levels[k].ord_zb = ord(rep.levels[k - 1].err_zb, rep.levels[k].err_zb);
    }
}

// Grid-refinement study. reference_n > 0 compares each level against a fine
// run restricted to the level's grid; reference_n = 0 uses Richardson
// differencing of successive levels (the error listed at level k is
// ||u_k - u_{2k}|| on the k grid).
inline StudyReport convergence_study(const RunConfig& cfg, const std::vector<int>& levels,
                                     int reference_n) {
    if (levels.size() < 2) throw ConfigError("convergence_study: need at least two levels");
    for (std::size_t k = 1; k < levels.size(); ++k) {
        if (levels[k] <= levels[k - 1] || levels[k] % levels[k - 1] != 0) {
            throw ConfigError("convergence_study: levels must be increasing and nested");
        }
    }
    if (reference_n > 0 && (reference_n % levels.back() != 0 || reference_n / levels.back() < 4)) {
        throw ConfigError("convergence_study: reference grid must be nested and at least 4x finest");
    }

    struct LevelData {
        std::vector<double> eta, q, zb;
        long steps;
        double runtime;
    };
    const auto run_level = [&](int n) {
        const RunResult r = run_case(cfg, n);
        LevelData d;
        d.eta = interior_slice(r.state.eta, r.interior_begin, r.interior_n);
        d.q = interior_slice(r.q_primal, r.interior_begin, r.interior_n);
        d.zb = interior_slice(r.state.zb, r.interior_begin, r.interior_n);
        d.steps = r.steps;
        d.runtime = r.runtime_seconds;
        return d;
    };

    std::vector<LevelData> data;
    data.reserve(levels.size());
    for (int n : levels) data.push_back(run_level(n));

    StudyReport rep;
    rep.richardson = reference_n == 0;
    const double span = cfg.x_b - cfg.x_a;
    const bool sve = cfg.model == Model::SVE;

    const auto equil_vec = [&](const std::optional<double>& v, int n) -> std::optional<std::vector<double>> {
        if (!v) return std::nullopt;
        return std::vector<double>(static_cast<std::size_t>(n), *v);
    };

    if (reference_n > 0) {
        const LevelData ref = run_level(reference_n);
        for (std::size_t k = 0; k < levels.size(); ++k) {
            const int n = levels[static_cast<std::size_t>(k)];
            const int ratio = reference_n / n;
            const double dx = span / n;
            StudyLevel lv;
            lv.n = n;
            lv.steps = data[k].steps;
            lv.runtime_seconds = data[k].runtime;
            const auto ref_eta = restrict_averages(ref.eta, ratio);
            const auto ref_q = restrict_averages(ref.q, ratio);
            const auto eq_eta = equil_vec(cfg.eta_equil, n);
            const auto eq_q = equil_vec(cfg.q_equil, n);
            lv.err_eta = error_norm(data[k].eta, ref_eta, eq_eta ? &*eq_eta : nullptr, dx);
            lv.err_q = error_norm(data[k].q, ref_q, eq_q ? &*eq_q : nullptr, dx);
            if (sve) {
                const auto ref_zb = restrict_averages(ref.zb, ratio);
                const auto eq_zb = equil_vec(cfg.zb_equil, n);
                lv.err_zb = error_norm(data[k].zb, ref_zb, eq_zb ? &*eq_zb : nullptr, dx);
            }
            rep.levels.push_back(lv);
        }
        fill_orders(rep, levels);
    } else {
        std::vector<int> ns;
        for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
            const int n = levels[k];
            const int ratio = levels[k + 1] / n;
            const double dx = span / n;
            StudyLevel lv;
            lv.n = n;
            lv.steps = data[k].steps;
            lv.runtime_seconds = data[k].runtime;
            const auto ref_eta = restrict_averages(data[k + 1].eta, ratio);
            const auto ref_q = restrict_averages(data[k + 1].q, ratio);
            const auto eq_eta = equil_vec(cfg.eta_equil, n);
            const auto eq_q = equil_vec(cfg.q_equil, n);
            lv.err_eta = error_norm(data[k].eta, ref_eta, eq_eta ? &*eq_eta : nullptr, dx);
            lv.err_q = error_norm(data[k].q, ref_q, eq_q ? &*eq_q : nullptr, dx);
            if (sve) {
                const auto ref_zb = restrict_averages(data[k + 1].zb, ratio);
                const auto eq_zb = equil_vec(cfg.zb_equil, n);
                lv.err_zb = error_norm(data[k].zb, ref_zb, eq_zb ? &*eq_zb : nullptr, dx);
            }
            rep.levels.push_back(lv);
            ns.push_back(n);
        }
        fill_orders(rep, ns);
    }
    return rep;
}

inline void write_study_csv(const std::string& path, const StudyReport& rep, bool sve) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << (sve ? "n,err_eta,ord_eta,err_q,ord_q,err_zb,ord_zb\n" : "n,err_eta,ord_eta,err_q,ord_q\n");
    char buf[320];
    for (const auto& lv : rep.levels) {
        if (sve) {
            std::snprintf(buf, sizeof(buf), "%d,%.6e,%.3f,%.6e,%.3f,%.6e,%.3f\n", lv.n, lv.err_eta,
                          lv.ord_eta, lv.err_q, lv.ord_q, lv.err_zb, lv.ord_zb);
        } else {
            std::snprintf(buf, sizeof(buf), "%d,%.6e,%.3f,%.6e,%.3f\n", lv.n, lv.err_eta,
                          lv.ord_eta, lv.err_q, lv.ord_q);
        }
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// Catalog of shipped experiment configs.
// ---------------------------------------------------------------------------

inline std::string catalog_dir() {
    if (const char* env = std::getenv("SISWE_CATALOG_DIR")) return env;
#ifdef SISWE_CATALOG_DIR
    return SISWE_CATALOG_DIR;
#else
    return "catalog";
#endif
}

inline std::vector<std::string> catalog_entries() {
    std::vector<std::string> names;
    const std::string dir = catalog_dir();
    if (!std::filesystem::is_directory(dir)) return names;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() == ".cfg") names.push_back(e.path().stem().string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

inline RunConfig load_catalog_case(const std::string& name) {
    const std::string path = (std::filesystem::path(catalog_dir()) / (name + ".cfg")).string();
    if (!std::filesystem::exists(path)) {
        throw ConfigError("catalog entry not found: " + name + " (looked in " + catalog_dir() + ")");
    }
    return load_run_config(path);
}

} // namespace siswe
