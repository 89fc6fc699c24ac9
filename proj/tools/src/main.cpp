#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sforge_cli/commands.hpp"

namespace {

// "5-10" or a single number
bool parse_range(const std::string& s, int& lo, int& hi) {
    auto dash = s.find('-');
    try {
        if (dash == std::string::npos) {
            lo = hi = std::stoi(s);
        } else {
            lo = std::stoi(s.substr(0, dash));
            hi = std::stoi(s.substr(dash + 1));
        }
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

} // namespace

int main(int argc, char** argv) {
    using namespace sforge::cli;

    CLI::App app{"Differentiable solver search for few-step diffusion ODE sampling"};
    app.require_subcommand(1);

    SearchOptions so;
    auto* search = app.add_subcommand("search", "Search solver timesteps and coefficients");
    search->add_option("--problem", so.problem, "Builtin problem name or problem file");
    search->add_option("--scheduler", so.scheduler, "rf or vp (must match the problem)");
    search->add_option("--nfe", so.nfe, "Number of solver steps");
    search->add_option("--ref-steps", so.ref_steps, "Reference trajectory resolution");
    search->add_option("--batch", so.batch, "Noise samples per iteration");
    search->add_option("--iters", so.iters, "Optimization iterations");
    search->add_option("--lr", so.lr, "Learning rate");
    search->add_option("--seed", so.seed, "PRNG seed");
    search->add_option("--max-order", so.max_order, "Per-row lookback cap (0 = unlimited)");
    search->add_option("--out", so.out, "Output schedule file");
    search->add_option("--loss-out", so.loss_out, "Loss history CSV (default <out>.loss.csv)");

    BenchOptions bo;
    std::string nfe_range = "5-10";
    auto* bench = app.add_subcommand("bench", "Benchmark solvers against the dense oracle");
    bench->add_option("--problem", bo.problem, "Builtin problem name or problem file");
    bench->add_option("--solvers", bo.solvers,
                      "Solvers: euler heun ab2 ab4 dpmpp2m, or schedule files")
        ->delimiter(',');
    bench->add_option("--nfe-range", nfe_range, "NFE sweep, e.g. 5-10");
    bench->add_option("--oracle-steps", bo.oracle_steps, "Oracle integration steps");
    bench->add_option("--seeds", bo.seeds, "Number of noise seeds");
    bench->add_option("--out", bo.out, "Output CSV");
    bench->add_flag("--timing", bo.timing, "Record wall times (breaks byte determinism)");

    ValidateOptions vo;
    auto* validate = app.add_subcommand("validate", "Validate schedule files");
    validate->add_option("--file", vo.files, "Schedule file(s) to validate");
    validate->add_flag("--paper-tables", vo.paper_tables, "Validate the 18 bundled tables");

    BoundCheckOptions ko;
    auto* bound = app.add_subcommand("bound_check", "Check the perturbation error bound");
    bound->add_option("--eta", ko.eta, "Velocity perturbation budget (L1)");
    bound->add_option("--trials", ko.trials, "Number of random trials");
    bound->add_option("--schedule", ko.schedule, "Schedule file or <model_tag>:<nfe>")
        ->required();
    bound->add_option("--problem", ko.problem, "Builtin problem name or problem file");

    RespaceOptions ro;
    auto* respace = app.add_subcommand("respace", "Print a respaced timestep grid");
    respace->add_option("--family", ro.family, "reflow or ddpm");
    respace->add_option("--nfe", ro.nfe, "Number of steps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kUsageError;
    }

    if (search->parsed()) return cmd_search(so, std::cout);
    if (bench->parsed()) {
        if (!parse_range(nfe_range, bo.nfe_lo, bo.nfe_hi)) {
            std::cout << "error: bad --nfe-range '" << nfe_range << "'\n";
            return kUsageError;
        }
        return cmd_bench(bo, std::cout);
    }
    if (validate->parsed()) return cmd_validate(vo, std::cout);
    if (bound->parsed()) return cmd_bound_check(ko, std::cout);
    if (respace->parsed()) return cmd_respace(ro, std::cout);
    return kUsageError;
}
