#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chainforge/market.hpp"
#include "chainforge/uncertainty.hpp"

// Profit accounting for one scenario and aggregation into report statistics.
// evaluate_scenario is pure; scenarios may be evaluated in parallel and
// reduced in fixed index order.

namespace chainforge {

struct DecisionPolicy {
    std::map<std::string, double> order_qty;  // produced id -> q
    std::map<std::string, int> ordered;       // produced id -> o in {0,1}
    // Mapping usages per scenario (stage-2 policies repeat one usage across a
    // supply group's scenarios).
    std::vector<std::map<std::string, double>> mapping_usage;
};

inline constexpr double kOrderEps = 1e-9;  // ordered_i = 1 <=> order_qty_i > eps

// Derives the order indicators from quantities.
std::map<std::string, int> derive_ordered(const std::map<std::string, double>& order_qty);

struct ProfitBreakdown {
    std::vector<double> received, obtained, used;  // per produced good
    std::vector<double> built, demanded, sold;     // per demanded good
    double tc_prod = 0.0, tc_map = 0.0, tc_ben = 0.0, tc_short = 0.0, tc_salv = 0.0;
    double profit = 0.0;  // tc_ben + tc_salv - tc_prod - tc_map - tc_short
};

// Index-based view of a spec against a scenario set's axes, for hot loops.
struct CompiledMarket {
    std::vector<std::string> produced_ids;
    std::vector<double> unit_cost, nre, yield_rate;
    std::vector<int> supply_axis;  // index into ScenarioSet supplier axes, -1 = none

    std::vector<std::string> demanded_ids;
    std::vector<double> base_demand, unit_benefit, unit_shortage, salvage;
    std::vector<int> demand_axis;  // -1 = none
    std::vector<char> has_curve;
    std::vector<double> curve_elasticity, curve_base_price;

    struct Use {
        int good;
        double qty;
    };
    std::vector<std::string> mapping_ids;
    std::vector<std::vector<Use>> mapping_inputs;  // per mapping
    std::vector<int> mapping_output;
    std::vector<double> mapping_cost;
    bool any_curve = false;

    std::size_t num_produced() const { return produced_ids.size(); }
    std::size_t num_demanded() const { return demanded_ids.size(); }
    std::size_t num_mappings() const { return mapping_ids.size(); }

    static CompiledMarket compile(const MarketSpec& spec,
                                  const std::vector<std::string>& supplier_ids,
                                  const std::vector<std::string>& demand_ids);
    static CompiledMarket compile(const MarketSpec& spec, const ScenarioSet& set) {
        return compile(spec, set.supplier_ids, set.demand_ids);
    }

    void supply_multipliers(const ScenarioSet& set, std::size_t k, std::span<double> out) const;
    void demand_quantities(const ScenarioSet& set, std::size_t k, std::span<double> out) const;
};

// Accounting for one scenario given dense decisions. `usage` has one entry per
// mapping. Throws if usage draws more of a good than was obtained.
ProfitBreakdown evaluate_compiled(const CompiledMarket& market, std::span<const double> order_qty,
                                  std::span<const char> ordered, std::span<const double> usage,
                                  const ScenarioSet& set, std::size_t k);

ProfitBreakdown evaluate_scenario(const MarketSpec& spec, const DecisionPolicy& policy,
                                  const ScenarioSet& set, std::size_t k);

// Probability-weighted profit, accumulated in scenario-index order.
double expected_profit(const MarketSpec& spec, const DecisionPolicy& policy,
                       const ScenarioSet& set);

// Per-scenario profits of one policy, in scenario order.
std::vector<double> scenario_profits(const MarketSpec& spec, const DecisionPolicy& policy,
                                     const ScenarioSet& set);

struct BaselineRef {
    double mean = 0.0;                   // baseline mean profit
    double zero_uncertainty_mean = 0.0;  // baseline mean profit at zero uncertainty
};

struct ProfitReport {
    std::vector<double> profits, weights;
    double mean = 0.0, stddev = 0.0;
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
    std::vector<double> outliers;  // beyond 1.5 x IQR fences
    std::map<std::string, double> order_shares;
    std::optional<double> lambda;      // % of uncertainty loss recovered
    bool lambda_undefined = false;     // baseline given but denominator ~ 0
};

ProfitReport make_report(std::vector<double> profits, std::vector<double> weights,
                         std::optional<BaselineRef> baseline = std::nullopt);

// lambda = 100 * (intervention_mean - baseline_mean) /
//                (baseline_zero_uncertainty_mean - baseline_mean)
std::optional<double> lambda_metric(double intervention_mean, const BaselineRef& baseline);

}  // namespace chainforge
