// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfjcas/montecarlo.hpp"
#include "cfjcas/scenario.hpp"

namespace cfjcas {

inline constexpr const char* kVersion = "1.0.0";

struct RunConfig {
  ScenarioConfig scenario;
  ExperimentPlan plan;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

/// Parses a JSON config. Unknown keys are rejected with the offending key
/// named in the error message.
RunConfig parse_config(const nlohmann::json& j, const std::string& source);
RunConfig load_config(const std::string& path);

/// Cross-field validation (counts, ranges, layout sizes). Throws
/// InvalidConfigError naming the first offending key.
void validate_config(const RunConfig& config);

nlohmann::json config_to_json(const RunConfig& config);

/// "start:stop:count" (inclusive linspace) or a single number.
std::vector<double> parse_range(const std::string& text);

}  // namespace cfjcas
