#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mfg/scenarios.hpp"

int main(int argc, char** argv) {
    CLI::App app{"mfg-lab: scenario runner for finite-state mean field game experiments"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run one scenario from a JSON config");
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int threads = 0;
    run->add_option("--config", config_path, "scenario config file (JSON)")->required();
    auto* out_opt = run->add_option("--out", out_dir, "output directory (overrides config)");
    auto* seed_opt = run->add_option("--seed", seed, "seed (overrides config)");
    auto* threads_opt =
        run->add_option("--threads", threads, "worker threads for inner sweeps");

    auto* list = app.add_subcommand("list", "list available scenarios");

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        for (const auto& [name, desc] : mfg::scenario_catalog())
            std::printf("%-26s %s\n", name.c_str(), desc.c_str());
        return 0;
    }

    mfg::RunOverrides overrides;
    if (*out_opt) overrides.out_dir = out_dir;
    if (*seed_opt) overrides.seed = seed;
    if (*threads_opt) overrides.threads = threads;
    return mfg::run_scenario_file(config_path, overrides);
}
