#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chainforge/chipcost.hpp"
#include "chainforge/experiments.hpp"
#include "chainforge/market.hpp"
#include "chainforge/optimize.hpp"

// Config file loading. The format is JSON with // and /* */ comments allowed;
// unknown keys are errors so typos cannot silently change a run.

namespace chainforge::config {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ResolvedConfig {
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = logical cores
    chipcost::CostParams cost;
    OptimizerConfig optimizer;
    std::optional<MarketSpec> market;  // explicit market, overrides the builder
    std::vector<experiments::ExperimentPlan> plans;
};

// Throws ConfigError naming the config path of the offending key.
ResolvedConfig load_config(const std::string& path);
ResolvedConfig parse_config_text(const std::string& text, const std::string& origin);

// Provenance dump of the resolved configuration.
std::string resolved_config_json(const ResolvedConfig& config);

// Market serialization in the config schema; parse_config_text reads it back.
std::string market_to_json(const MarketSpec& spec);

const experiments::ExperimentPlan* find_plan(const ResolvedConfig& config,
                                             const std::string& name);

}  // namespace chainforge::config
