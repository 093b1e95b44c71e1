#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "qswitch/cli.hpp"
#include "qswitch/io.hpp"

using namespace qswitch;

int main(int argc, char** argv) {
    CLI::App app{"Entanglement switch scheduling: capacity analysis, simulation and oracle checks", "qswitch"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    std::string scenario;
    std::string out_dir;
    unsigned threads = 0;

    auto* capacity = app.add_subcommand("capacity", "Solve the capacity LP and write a certificate");
    capacity->add_option("--scenario", scenario, "Scenario JSON file")->required();
    capacity->add_option("--out", out_dir, "Output directory")->required();

    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> horizon;
    auto* simulate = app.add_subcommand("simulate", "Run a scenario and write trace, metadata and chart");
    simulate->add_option("--scenario", scenario, "Scenario JSON file")->required();
    simulate->add_option("--out", out_dir, "Output directory")->required();
    simulate->add_option("--seed", seed, "Base seed override");
    simulate->add_option("--horizon", horizon, "Horizon override (slots)");
    simulate->add_option("--threads", threads, "Worker threads (0: all cores)");

    std::string preset_name;
    std::optional<int> replications;
    auto* reproduce = app.add_subcommand("reproduce", "Run a built-in experiment preset end to end");
    reproduce->add_option("preset", preset_name, "sim1, sim2 or sim3")
        ->required()
        ->check(CLI::IsMember({"sim1", "sim2", "sim3"}));
    reproduce->add_option("--out", out_dir, "Output directory")->required();
    reproduce->add_option("--horizon", horizon, "Horizon override (slots)");
    reproduce->add_option("--replications", replications, "Replication count override");
    reproduce->add_option("--seed", seed, "Base seed override");
    reproduce->add_option("--threads", threads, "Worker threads (0: all cores)");

    cli::OracleOptions oracle;
    std::string fault;
    auto* oracle_check = app.add_subcommand("oracle-check", "Compare fast solvers against brute force");
    oracle_check->add_option("--max-n", oracle.max_n, "Largest instance size")->capture_default_str();
    oracle_check->add_option("--inject-fault", fault, "Deliberate defect for mutation testing")
        ->check(CLI::IsMember({"capped-off-by-one"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kInputError;
    }

    const cli::Streams io{std::cout, std::cerr};
    return cli::guarded(std::cerr, [&] {
        if (*capacity) {
            return cli::cmd_capacity(scenario, out_dir, io);
        }
        if (*simulate) {
            return cli::cmd_simulate(scenario, out_dir, {seed, horizon, threads}, io);
        }
        if (*reproduce) {
            return cli::cmd_reproduce(preset_name, out_dir, {horizon, replications, seed, threads}, io);
        }
        if (fault == "capped-off-by-one") {
            oracle.fault = OracleFault::capped_off_by_one;
        }
        return cli::cmd_oracle_check(oracle, io);
    });
}
