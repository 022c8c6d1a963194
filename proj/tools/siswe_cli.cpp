// Batch driver for the staggered semi-implicit shallow-water / Exner solver.
//
//   siswe_cli run <config|catalog-name> [--variant V] [--time-scheme S] [--out-dir D]
//   siswe_cli study <config|catalog-name> [--levels 100,200,400,800] [--reference N]
//   siswe_cli catalog list
//
// Exit codes: 0 success, 2 numerical failure, 3 configuration error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "siswe/harness.hpp"

namespace {

long rng_requests = 0; // the solver is deterministic; --seedless asserts this stays 0

siswe::RunConfig load_config_arg(const std::string& arg) {
    if (std::filesystem::exists(arg)) return siswe::load_run_config(arg);
    return siswe::load_catalog_case(arg);
}

void apply_overrides(siswe::RunConfig& cfg, const std::string& variant,
                     const std::string& scheme) {
    if (!variant.empty()) {
        if (variant == "simplified") cfg.variant = siswe::SchemeVariant::Simplified;
        else if (variant == "fully_third_order") cfg.variant = siswe::SchemeVariant::FullyThirdOrder;
        else throw siswe::ConfigError("--variant must be simplified or fully_third_order");
    }
    if (!scheme.empty()) {
        if (scheme == "imex") cfg.scheme = siswe::TimeScheme::ImexSSP3;
        else if (scheme == "euler1") cfg.scheme = siswe::TimeScheme::Euler1;
        else if (scheme == "explicit3") cfg.scheme = siswe::TimeScheme::Explicit3;
        else if (scheme == "explicit1") cfg.scheme = siswe::TimeScheme::Explicit1;
        else throw siswe::ConfigError("--time-scheme must be imex, euler1, explicit3 or explicit1");
        cfg.cfl.mode = (cfg.scheme == siswe::TimeScheme::Explicit3 ||
                        cfg.scheme == siswe::TimeScheme::Explicit1)
                           ? siswe::CflMode::Explicit
                           : siswe::CflMode::SemiImplicit;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"staggered semi-implicit shallow-water / Exner batch solver"};
    app.require_subcommand(1);

    std::string config_arg, variant, scheme, out_dir, levels_arg;
    int reference = -1;
    bool seedless = false;

    auto* run = app.add_subcommand("run", "run one case");
    run->add_option("config", config_arg, "config file or catalog name")->required();
    run->add_option("--variant", variant, "simplified | fully_third_order");
    run->add_option("--time-scheme", scheme, "imex | euler1 | explicit3 | explicit1");
    run->add_option("--out-dir", out_dir, "directory for CSV artifacts");
    run->add_flag("--seedless", seedless, "assert that no randomness is consumed");

    auto* study = app.add_subcommand("study", "grid convergence study");
    study->add_option("config", config_arg, "config file or catalog name")->required();
    study->add_option("--levels", levels_arg, "comma-separated nested cell counts");
    study->add_option("--reference", reference, "reference cells (omit for Richardson)");
    study->add_option("--variant", variant, "simplified | fully_third_order");
    study->add_option("--time-scheme", scheme, "imex | euler1 | explicit3 | explicit1");
    study->add_option("--out-dir", out_dir, "directory for CSV artifacts");
    study->add_flag("--seedless", seedless, "assert that no randomness is consumed");

    auto* catalog = app.add_subcommand("catalog", "catalog operations");
    std::string catalog_op;
    catalog->add_option("op", catalog_op, "list")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (!out_dir.empty()) {
            std::filesystem::create_directories(out_dir);
            setenv("SISWE_OUT_DIR", out_dir.c_str(), 1);
        }

        if (catalog->parsed()) {
            if (catalog_op != "list") throw siswe::ConfigError("unknown catalog operation");
            for (const auto& name : siswe::catalog_entries()) std::printf("%s\n", name.c_str());
            return 0;
        }

        siswe::RunConfig cfg = load_config_arg(config_arg);
        apply_overrides(cfg, variant, scheme);

        if (run->parsed()) {
            const siswe::RunResult res = siswe::run_case(cfg);
            std::printf("case %s: %ld steps to t = %.6g, runtime %.3f s\n", cfg.name.c_str(),
                        res.steps, res.state.t, res.runtime_seconds);
            std::printf("mass balance residual: eta %.3e, zb %.3e\n", res.mass_residual_eta,
                        res.mass_residual_zb);
        } else {
            std::vector<int> levels = cfg.study_levels;
            if (!levels_arg.empty()) levels = siswe::detail::parse_int_list(levels_arg);
            if (levels.empty()) levels = {100, 200, 400, 800};
            const int ref = reference >= 0 ? reference : cfg.study_reference;
            const siswe::StudyReport rep = siswe::convergence_study(cfg, levels, ref);
            const bool sve = cfg.model == siswe::Model::SVE;
            std::printf("%6s %12s %7s %12s %7s", "n", "err_eta", "ord", "err_q", "ord");
            if (sve) std::printf(" %12s %7s", "err_zb", "ord");
            std::printf(" %8s %9s\n", "steps", "time[s]");
            for (const auto& lv : rep.levels) {
                std::printf("%6d %12.4e %7.3f %12.4e %7.3f", lv.n, lv.err_eta, lv.ord_eta,
                            lv.err_q, lv.ord_q);
                if (sve) std::printf(" %12.4e %7.3f", lv.err_zb, lv.ord_zb);
                std::printf(" %8ld %9.3f\n", lv.steps, lv.runtime_seconds);
            }
            if (!cfg.out_prefix.empty()) {
                siswe::write_study_csv(siswe::detail::resolve_prefix(cfg.out_prefix) + "_study.csv",
                                       rep, sve);
            }
        }

        if (seedless && rng_requests != 0) {
            std::fprintf(stderr, "numerical failure: randomness was consumed in a seedless run\n");
            return 2;
        }
        return 0;
    } catch (const siswe::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 3;
    } catch (const siswe::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
