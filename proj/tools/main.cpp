#include "rpmchain/audit.hpp"
#include "rpmchain/error.hpp"
#include "rpmchain/scenario.hpp"
#include "rpmchain/simulator.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Blockchain-backed remote patient monitoring simulator"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir, ledger_path, cloud_dir;
    int64_t seed_override = -1;

    auto* simulate = app.add_subcommand("simulate", "Run a scenario end to end");
    simulate->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    simulate->add_option("--out", out_dir, "Output directory")->required();
    simulate->add_option("--seed", seed_override, "Override the scenario seed");

    auto* audit = app.add_subcommand("audit", "Verify the chain and every referenced cloud block");
    audit->add_option("--ledger", ledger_path, "Ledger dump file")->required();
    audit->add_option("--cloud", cloud_dir, "Cloud block directory")->required();

    auto* verify = app.add_subcommand("verify-chain", "Verify chain links and signatures");
    verify->add_option("--ledger", ledger_path, "Ledger dump file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : rpmchain::sim::kExitInputError;
    }

    try {
        if (simulate->parsed()) {
            auto scenario = rpmchain::sim::load_scenario(scenario_path);
            if (seed_override >= 0) scenario.seed = static_cast<uint64_t>(seed_override);
            auto report = rpmchain::sim::run_scenario(scenario, out_dir);
            std::cout << report.text();
            return rpmchain::sim::kExitOk;
        }
        if (audit->parsed()) {
            auto result = rpmchain::sim::audit_run(ledger_path, cloud_dir);
            std::cout << result.report;
            return result.exit_code;
        }
        auto result = rpmchain::sim::verify_chain_file(ledger_path);
        std::cout << result.report;
        return result.exit_code;
    } catch (const rpmchain::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return rpmchain::sim::kExitInputError;
    }
}
