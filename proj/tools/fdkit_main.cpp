#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fdkit/scenario.hpp"
#include "fdkit/verify.hpp"

namespace {

struct CommonOpts {
    std::string config;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<double> burn_in;
};

fdkit::Scenario load_scenario(const CommonOpts& opt) {
    fdkit::Scenario sc = fdkit::parse_scenario(opt.config);
    if (opt.seed) sc.seed = *opt.seed;
    if (opt.burn_in) {
        if (*opt.burn_in < 0.0 || *opt.burn_in >= 1.0)
            throw fdkit::ConfigInvalid("burn-in fraction must lie in [0, 1)");
        sc.burn_in = *opt.burn_in;
    }
    return sc;
}

void add_common(CLI::App* cmd, CommonOpts& opt) {
    cmd->add_option("--config", opt.config, "scenario config file")->required();
    cmd->add_option("--out", opt.out_dir, "output directory (must exist)");
    cmd->add_option("--seed", opt.seed, "override the scenario seed");
    cmd->add_option("--burn-in", opt.burn_in, "override the burn-in fraction");
}

int print_report(const fdkit::RunReport& rep) {
    std::cout << fdkit::render_report(rep);
    return rep.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"projection-based fault detection and estimation toolkit"};
    app.require_subcommand(1);

    CommonOpts sim_opt, sir_opt, skr_opt, est_opt;
    auto* sim = app.add_subcommand("simulate", "simulate a scenario and write data.csv");
    add_common(sim, sim_opt);
    auto* sir = app.add_subcommand("detect-sir", "image-side projection detection");
    add_common(sir, sir_opt);
    auto* skr = app.add_subcommand("detect-skr", "kernel-side projection detection");
    add_common(skr, skr_opt);
    auto* est = app.add_subcommand("estimate", "uncertainty estimation");
    add_common(est, est_opt);

    std::string suite = "all";
    std::uint64_t verify_seed = 20240;
    auto* ver = app.add_subcommand("verify", "run an invariant suite");
    ver->add_option("suite", suite,
                    "factorization|projection|divergence|estimation|lti_oracle|detection|all");
    ver->add_option("--seed", verify_seed, "suite seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return print_report(fdkit::run_simulate(load_scenario(sim_opt), sim_opt.out_dir));
        if (sir->parsed()) return print_report(fdkit::run_detect_sir(load_scenario(sir_opt), sir_opt.out_dir));
        if (skr->parsed()) return print_report(fdkit::run_detect_skr(load_scenario(skr_opt), skr_opt.out_dir));
        if (est->parsed()) return print_report(fdkit::run_estimate(load_scenario(est_opt), est_opt.out_dir));
        if (ver->parsed()) {
            const auto results = fdkit::run_verify_suite(suite, verify_seed);
            int failures = 0;
            for (const auto& r : results) {
                const bool ok = r.pass;
                failures += ok ? 0 : 1;
                std::printf("[%s] %s/%s: value=%.3e %s %.3e%s%s\n", ok ? "PASS" : "FAIL",
                            r.suite.c_str(), r.name.c_str(), r.defect,
                            r.lower_is_bound ? ">=" : "<=", r.bound,
                            r.note.empty() ? "" : "  # ", r.note.c_str());
            }
            std::printf("%d/%zu checks passed\n", static_cast<int>(results.size()) - failures,
                        results.size());
            return failures == 0 ? 0 : 1;
        }
    } catch (const fdkit::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
