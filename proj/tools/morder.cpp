// morder: simulate, estimate, sweep and verify from a config file.
//
//   morder <simulate|estimate|sweep|verify> --config FILE [--seed S] [--jobs J] [--out DIR]

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "morder/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Penalized-likelihood order estimation for finite-alphabet Markov chains"};
    app.require_subcommand(1);

    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    unsigned jobs = 1;

    for (const char* name : {"simulate", "estimate", "sweep", "verify"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "experiment config file")->required();
        sub->add_option("--seed", seed, "master seed, overrides the config");
        sub->add_option("--jobs", jobs, "worker threads over replications")->check(CLI::PositiveNumber);
        sub->add_option("--out", out, "output directory, overrides the config");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? morder::kExitOk : morder::kExitFailure;
    }

    morder::RunOverrides overrides;
    overrides.seed = seed;
    overrides.out = out;
    overrides.jobs = jobs;
    return morder::run_command(app.get_subcommands().front()->get_name(), config, overrides, std::cout, std::cerr);
}
