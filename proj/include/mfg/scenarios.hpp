#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mfg {

/// name -> one-line description, in catalog order
const std::vector<std::pair<std::string, std::string>>& scenario_catalog();

struct RunOverrides {
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

/// Runs one scenario described by a JSON config. Writes summary.json plus
/// scenario-specific CSV files into the output directory.
/// Exit status: 0 success, 2 config/validation failure, 3 solver failure.
int run_scenario(const nlohmann::json& config, const RunOverrides& overrides = {});

/// Same, reading the config from a file.
int run_scenario_file(const std::string& config_path, const RunOverrides& overrides = {});

} // namespace mfg
