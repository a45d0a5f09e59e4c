#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chainforge/engine.hpp"
#include "chainforge/lp.hpp"
#include "chainforge/market.hpp"

// The inner recourse problem: optimal mapping usages U for known obtained
// quantities, either per scenario (stage 3, demand known) or once per supply
// realization against a set of demand samples (stage 2).

namespace chainforge::recourse {

struct UsageSolution {
    std::vector<double> usage;  // one entry per mapping, spec order
    double value = 0.0;         // scenario profit excluding TC_prod (stage-1 sunk cost)
};

// Exact accounting of tc_ben + tc_salv - tc_map - tc_short for a given usage
// (sold = min(demanded, built)). Used to score LP results so reported values
// never depend on linearization error.
double recourse_value(const CompiledMarket& market, std::span<const double> obtained,
                      std::span<const double> demanded, std::span<const double> usage);

// Stage 3: maximize over U with both supply and demand known. Always feasible
// (U = 0).
UsageSolution optimal_usage_stage3(const CompiledMarket& market, std::span<const double> obtained,
                                   std::span<const double> demanded, lp::LpWorkspace& ws);
UsageSolution optimal_usage_stage3(const MarketSpec& spec,
                                   const std::map<std::string, double>& obtained,
                                   const std::map<std::string, double>& demanded);

// Stage 2: one U maximizing the weighted value over demand samples, as a
// single LP with per-sample sold variables. The objective is separable per
// demanded good, so the LP is built on the per-good sample marginals.
struct DemandAtoms {
    // per demanded good: (demand quantity, probability) pairs
    std::vector<std::vector<std::pair<double, double>>> atoms;
};
UsageSolution optimal_usage_stage2(const CompiledMarket& market, std::span<const double> obtained,
                                   const DemandAtoms& demand, lp::LpWorkspace& ws);
UsageSolution optimal_usage_stage2(
    const MarketSpec& spec, const std::map<std::string, double>& obtained,
    const std::vector<std::pair<std::map<std::string, double>, double>>& demand_samples);

// Debug dump of the stage-3 LP in the textual interchange format.
std::string dump_stage3_lp(const MarketSpec& spec, const std::map<std::string, double>& obtained,
                           const std::map<std::string, double>& demanded);

// Test oracle: exhaustive search over an integer grid of usages.
UsageSolution brute_force_usage(const CompiledMarket& market, std::span<const double> obtained,
                                std::span<const double> demanded, double grid_step);
UsageSolution brute_force_usage(const MarketSpec& spec,
                                const std::map<std::string, double>& obtained,
                                const std::map<std::string, double>& demanded, double grid_step);

// Stage-resolved expected profit of an order policy over a scenario set, with
// recourse usages chosen optimally. Scenario results reduce in index order;
// threads > 1 only changes wall time, never the value.
class StagedEvaluator {
  public:
    StagedEvaluator(const MarketSpec& spec, const ScenarioSet& set, int threads = 1);

    // NRE is charged for goods with q > kOrderEps.
    double evaluate(std::span<const double> order_qty, RecourseStage stage) const;
    // Optimal usages per scenario for the returned policy.
    std::vector<std::vector<double>> usages(std::span<const double> order_qty,
                                            RecourseStage stage) const;
    // Expected profit of a fixed usage schedule (no recourse re-optimization).
    double evaluate_fixed(std::span<const double> order_qty,
                          const std::vector<std::vector<double>>& usage) const;

    const CompiledMarket& market() const { return market_; }
    const ScenarioSet& scenarios() const { return *set_; }

  private:
    struct ScenarioView;
    double group_value(std::span<const double> order_qty, RecourseStage stage, std::size_t group,
                       lp::LpWorkspace& ws, std::vector<double>* usage_out) const;

    const ScenarioSet* set_;
    CompiledMarket market_;
    int threads_;
};

}  // namespace chainforge::recourse
