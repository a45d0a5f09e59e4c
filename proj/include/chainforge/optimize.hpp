#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chainforge/engine.hpp"
#include "chainforge/market.hpp"
#include "chainforge/recourse.hpp"
#include "chainforge/uncertainty.hpp"

// Stage-1 search over order quantities and order indicators, maximizing
// sample-average expected profit with the inner recourse solved per candidate.
// The same scenario set is reused for every candidate (common random numbers),
// so the outer search is a deterministic optimization problem.

namespace chainforge {

struct AnnealSchedule {
    double t0 = 1.0;        // initial temperature, relative to the profit scale
    double cooling = 0.97;  // per-step multiplier, in (0,1)
    int steps = 4000;
};

struct OptimizerConfig {
    enum class Method { SubsetNelderMead, SimulatedAnnealing };
    Method method = Method::SubsetNelderMead;
    int restarts = 2;              // extra Nelder-Mead starts per subset
    int nm_max_iter = 500;         // iterations per Nelder-Mead run
    int max_evals_per_subset = 20000;
    AnnealSchedule anneal;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct OptimizationResult {
    DecisionPolicy policy;
    double expected_profit = 0.0;  // equals re-evaluation of policy on the set
    std::vector<double> incumbent_trace;
    bool budget_exhausted = false;
    std::uint64_t seed = 0;
    std::uint64_t scenario_seed = 0;
    std::string method;
    std::string rng_name;
};

OptimizationResult optimize(const MarketSpec& spec, const ScenarioSet& scenarios,
                            const OptimizerConfig& config);

// Solves unconstrained once, then re-optimizes with q_i <= factor * q_unc_i on
// the named goods.
OptimizationResult constrained_rerun(const MarketSpec& spec, const ScenarioSet& scenarios,
                                     const OptimizerConfig& config, double factor,
                                     const std::vector<std::string>& good_ids);

// Writes the incumbent trace as CSV (iteration, incumbent profit).
std::string trace_csv(const OptimizationResult& result);

}  // namespace chainforge
