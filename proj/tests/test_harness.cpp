#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "siswe/harness.hpp"
#include "test_util.hpp"

using namespace siswe;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig tiny_config(double t_end) {
    const std::string text = R"(
name = tiny
model = swe
domain.x_a = -4
domain.x_b = 6
domain.n_cells = 64
t_end = )" + std::to_string(t_end) + R"(
cfl.cfl_imex = 15.4
ic.family = gaussians
ic.eta.base = 0.7
ic.eta.amp = 0.2
ic.eta.k = 3
ic.eta.x0 = 1
ic.q0 = 0
)";
    return parse_run_config(KeyValues::from_string(text));
}

} // namespace

TEST_CASE("key-value parsing") {
    const auto kv = KeyValues::from_string("a.b = 3.5 # comment\n# full comment\nflag = true\nname = hi\n");
    CHECK(kv.get_double("a.b", 0.0) == 3.5);
    CHECK(kv.get_bool("flag", false));
    CHECK(kv.get_string("name", "") == "hi");
    kv.check_consumed();

    CHECK_THROWS_AS(KeyValues::from_string("novalue\n"), ConfigError);
    const auto bad = KeyValues::from_string("x = notanumber\n");
    CHECK_THROWS_AS(bad.get_double("x", 0.0), ConfigError);
    const auto unk = KeyValues::from_string("bogus.key = 1\n");
    CHECK_THROWS_AS(unk.check_consumed(), ConfigError);
}

TEST_CASE("config rejects unknown enum values and bad domains") {
    auto kv = KeyValues::from_string("model = nope\ndomain.x_a = 0\ndomain.x_b = 1\n"
                                     "domain.n_cells = 16\nt_end = 1\nic.family = gaussians\n");
    CHECK_THROWS_AS(parse_run_config(kv), ConfigError);

    auto kv2 = KeyValues::from_string("domain.x_a = 0\ndomain.x_b = 1\ndomain.n_cells = -3\n"
                                      "t_end = 1\nic.family = gaussians\n");
    CHECK_THROWS_AS(parse_run_config(kv2), ConfigError);

    auto kv3 = KeyValues::from_string("domain.x_a = 0\ndomain.x_b = 1\ndomain.n_cells = 16\n"
                                      "t_end = 1\nic.family = gaussians\nunknown.key = 2\n");
    CHECK_THROWS_AS(parse_run_config(kv3), ConfigError);
}

TEST_CASE("error norm") {
    const double dx = 0.1;
    const std::vector<double> ref = {1.0, 2.0, 3.0, 4.0};
    SECTION("exact match is zero") {
        CHECK(error_norm(ref, ref, nullptr, dx) == 0.0);
    }
    SECTION("constant offset against an equilibrium denominator") {
        std::vector<double> num = ref;
        for (auto& v : num) v += 0.25;
        const std::vector<double> equil = {2.0, 2.0, 2.0, 2.0};
        // denominator = sum |equil - ref| dx = (1+0+1+2)*0.1 = 0.4
        const double expect = 0.25 * 4 * dx / 0.4;
        CHECK(error_norm(num, ref, &equil, dx) == Catch::Approx(expect).margin(1e-14));
    }
    SECTION("zero denominator raises") {
        const std::vector<double> zeros(4, 0.0);
        CHECK_THROWS_AS(error_norm(zeros, zeros, nullptr, dx), NumericalError);
    }
}

TEST_CASE("nested restriction is exact for cell averages of a linear field") {
    // averages of a linear function on the fine grid aggregate exactly
    const int nf = 32, ratio = 4;
    std::vector<double> fine(nf);
    const double dxf = 1.0 / nf;
    for (int i = 0; i < nf; ++i) fine[i] = 3.0 * (i + 0.5) * dxf + 1.0;
    const auto coarse = restrict_averages(fine, ratio);
    const double dxc = 1.0 / (nf / ratio);
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        CHECK(coarse[i] ==
              Catch::Approx(3.0 * (static_cast<double>(i) + 0.5) * dxc + 1.0).margin(1e-14));
    }
    CHECK_THROWS_AS(restrict_averages(fine, 5), ConfigError);
}

TEST_CASE("synthetic error sequence yields the exact order") {
    StudyReport rep;
    const std::vector<int> ns = {100, 200, 400, 800};
    for (int n : ns) {
        StudyLevel lv;
        lv.n = n;
        lv.err_eta = 5.0 * std::pow(n, -3.0);
        lv.err_q = 2.0 * std::pow(n, -3.0);
        lv.err_zb = 1.0 * std::pow(n, -3.0);
        rep.levels.push_back(lv);
    }
    fill_orders(rep, ns);
    for (std::size_t k = 1; k < rep.levels.size(); ++k) {
        CHECK(rep.levels[k].ord_eta == Catch::Approx(3.0).margin(1e-12));
        CHECK(rep.levels[k].ord_q == Catch::Approx(3.0).margin(1e-12));
        CHECK(rep.levels[k].ord_zb == Catch::Approx(3.0).margin(1e-12));
    }
}

TEST_CASE("zero-horizon run returns the projected initial condition") {
    const RunConfig cfg = tiny_config(0.0);
    const RunResult res = run_case(cfg);
    CHECK(res.steps == 0);
    CHECK(res.state.t == 0.0);
    CHECK(testutil::max_abs_diff(res.state.eta, res.initial.eta) == 0.0);
    CHECK(testutil::max_abs_diff(res.state.q, res.initial.q) == 0.0);
}

TEST_CASE("sponge extension keeps the interior window intact") {
    RunConfig cfg = load_catalog_case("ex_acc");
    const CaseInstance inst = build_case(cfg, 100);
    // dx = 4, requested 45 m -> 12 whole cells on each side
    CHECK(inst.grid.dx == Catch::Approx(4.0).margin(1e-12));
    CHECK(inst.interior_begin == 12);
    CHECK(inst.interior_n == 100);
    CHECK(inst.grid.n_cells == 124);
    CHECK(inst.grid.x_a == Catch::Approx(-248.0).margin(1e-10));
    CHECK(inst.grid.x_b == Catch::Approx(248.0).margin(1e-10));
    CHECK(inst.sponges.size() == 2);
}

TEST_CASE("catalog lists and loads every shipped case") {
    const auto names = catalog_entries();
    for (const char* expect :
         {"sw_acc_flat", "sw_acc_bottom", "ex_acc", "wb_sw_flat", "wb_sw_bump", "wb_exner",
          "riemann_shock", "sed_evolution", "sed_evolution_long", "sed_evolution_shock",
          "ode_ref", "ex_waves_w07", "ex_waves_w7"}) {
        CAPTURE(expect);
        CHECK(std::find(names.begin(), names.end(), expect) != names.end());
        const RunConfig cfg = load_catalog_case(expect);
        CHECK(cfg.t_end > 0.0);
        // every catalog case must also build
        const CaseInstance inst = build_case(cfg, 0);
        CHECK(inst.grid.n_cells >= cfg.n_cells);
    }
}

TEST_CASE("identical configs produce byte-identical CSV artifacts") {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "siswe_determinism";
    fs::remove_all(base);
    RunConfig cfg = tiny_config(0.25);
    cfg.step_log = true;

    for (const char* sub : {"a", "b"}) {
        fs::create_directories(base / sub);
        setenv("SISWE_OUT_DIR", (base / sub).c_str(), 1);
        cfg.out_prefix = "tiny";
        (void)run_case(cfg);
    }
    unsetenv("SISWE_OUT_DIR");

    for (const char* file : {"tiny_state.csv", "tiny_q.csv", "tiny_steps.csv"}) {
        CAPTURE(file);
        CHECK(slurp((base / "a" / file).string()) == slurp((base / "b" / file).string()));
    }
}

TEST_CASE("short lake-at-rest run keeps the discrete balance") {
    RunConfig cfg = load_catalog_case("wb_sw_flat");
    cfg.t_end = 2.0;
    cfg.out_prefix.clear();
    const RunResult res = run_case(cfg);
    CHECK(res.mass_residual_eta <= 1e-12);
    CHECK(res.steps > 0);
    // all but the final (clamped) step run at the configured wave CFL
    for (std::size_t i = 0; i + 1 < res.step_records.size(); ++i) {
        CHECK(res.step_records[i].cfl == Catch::Approx(40.0).margin(1e-6));
    }
}
