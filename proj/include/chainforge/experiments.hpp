#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chainforge/chipcost.hpp"
#include "chainforge/engine.hpp"
#include "chainforge/market.hpp"
#include "chainforge/optimize.hpp"
#include "chainforge/uncertainty.hpp"

// Declarative experiment harness: builds a spec per sweep point, samples
// scenarios, optimizes, and reports statistics plus lambda against the
// no-intervention baseline at the same axis point.

namespace chainforge::experiments {

enum class Intervention {
    Composition,
    Adaptation,
    DispersionUnique,
    DispersionTwo,
    JustInTime,       // mapping decisions deferred until demand is known
    MarketMechanism,  // linear demand curves
};

enum class SweepAxis {
    SupplySigma,
    DemandSigma,
    BothSigma,
    ConstraintFactor,
    ShockFactor,
    SalvageFactor,
    InterposerConstraint,
    NreReuse,
    DemandPcc,
    MultiIsaCostScale,
};

const char* axis_name(SweepAxis axis);
const char* intervention_name(Intervention iv);

struct ExperimentPlan {
    std::string name;
    std::set<Intervention> interventions;
    SweepAxis axis = SweepAxis::BothSigma;
    std::vector<double> values;  // sorted ascending

    std::uint64_t seed = 1;
    SampleStrategyKind strategy = SampleStrategyKind::StratifiedEquiProbable;
    int scenario_budget = 512;  // total scenarios; stratified axes split it
    int n_supply_cells = 0;     // optional explicit per-axis cells
    int n_demand_cells = 0;

    std::vector<int> core_counts{16, 8, 4};
    chipcost::CostParams cost;
    OptimizerConfig optimizer;

    double nre_share = 1.0;  // DispersionTwo / NreReuse axis default
    double base_supply_sigma = 0.0;   // sigmas used on non-sigma axes
    double base_demand_sigma = 0.0;
    bool shock_supply = true;   // which sides a ShockFactor sweep hits
    bool shock_demand = true;
    std::vector<std::string> constraint_goods;  // ConstraintFactor targets
    double multi_isa_pcc = 0.0;

    std::optional<MarketSpec> explicit_base;  // overrides the builder entirely
};

struct SweepPointResult {
    double value = 0.0;
    bool failed = false;
    std::string error;

    ProfitReport report;
    std::map<std::string, double> order_qty;
    std::map<std::string, double> order_shares;
    double zero_uncertainty_mean = 0.0;      // this spec, zero uncertainty
    double baseline_mean = 0.0;              // no-intervention baseline, same point
    double baseline_zero_mean = 0.0;         // no-intervention baseline, zero uncertainty
    std::optional<double> lambda;
    bool lambda_undefined = false;
    // Lambda with the zero-uncertainty gain of the intervention subtracted
    // (composition's yield savings are factored out this way).
    std::optional<double> lambda_yield_norm;
    std::vector<double> incumbent_trace;  // outer-search convergence trace
    double wall_seconds = 0.0;
};

struct SweepResult {
    std::string name;
    SweepAxis axis = SweepAxis::BothSigma;
    std::vector<SweepPointResult> points;
    std::uint64_t seed = 0;
    std::string rng_name;
    std::string strategy_desc;
    int threads = 1;
};

// Builds the intervention spec for one sweep point (exposed for tests).
MarketSpec build_point_spec(const ExperimentPlan& plan, double value, bool with_interventions);

// Resolves the plan's sampling strategy against a spec's uncertainty config:
// stratified budgets are split across the non-degenerate axes.
SampleStrategy resolve_strategy(const ExperimentPlan& plan, const UncertaintyConfig& config);

SweepResult run(const ExperimentPlan& plan);

// Lambda per point of `intervention` against `baseline`; the two results must
// share the sweep axis and values.
std::vector<std::optional<double>> lambda_table(const SweepResult& intervention,
                                                const SweepResult& baseline);

// CSV schema: experiment,parameter,mean,std,min,q1,median,q3,max,n_outliers,
// lambda,order_share_<good>...
std::string sweep_csv(const SweepResult& result);
std::string sweep_json(const SweepResult& result);
std::string policy_shares_csv(const SweepResult& result);
std::string trace_csv(const SweepResult& result);  // parameter,iteration,incumbent

}  // namespace chainforge::experiments
