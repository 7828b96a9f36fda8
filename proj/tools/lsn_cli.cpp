#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "lsn/cli.hpp"

namespace {

void add_common_options(CLI::App* cmd, lsn::CliOptions& opt) {
    cmd->add_option("--config", opt.config_path, "scenario config file (key = value)");
    cmd->add_option("--preset", opt.preset,
                    "builtin scenario: vacuum, advection, sech2_benchmark, "
                    "powerlaw_global, blowdown_exp");
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--cells", opt.cells, "finite-volume cell count override");
    cmd->add_option("--horizon", opt.horizon, "time horizon override");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nucleation inflow solver for size-structured growth kinetics"};
    app.require_subcommand(1);

    lsn::CliOptions opt;
    CLI::App* solve =
        app.add_subcommand("solve", "run the characteristics solver, write series, "
                                    "snapshots and a summary record");
    CLI::App* validate =
        app.add_subcommand("validate", "check the structural hypotheses and report");
    CLI::App* compare =
        app.add_subcommand("compare", "run both solvers and report the gaps");
    add_common_options(solve, opt);
    add_common_options(validate, opt);
    add_common_options(compare, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 4;
    }

    if (solve->parsed()) opt.subcommand = "solve";
    else if (validate->parsed()) opt.subcommand = "validate";
    else opt.subcommand = "compare";

    return lsn::run_cli(opt);
}
