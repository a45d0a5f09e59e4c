#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

// Supply/demand multiplier distributions and reproducible scenario sampling.
// A scenario is one joint realization of all supply multipliers (one per
// supplier) and all demand multipliers (one per demanded good), with a
// probability weight.

namespace chainforge {

struct Distribution {
    enum class Kind { Deterministic, Normal, Shock, Scaled };
    Kind kind = Kind::Deterministic;
    double value = 1.0;       // Deterministic
    double sigma = 0.0;       // Normal with mean 1, draws clamped at zero
    double shock_prob = 0.0;  // Shock: multiplier 0 with this probability, else 1
    double scale_factor = 1.0;
    std::shared_ptr<const Distribution> inner;  // Scaled

    static Distribution deterministic(double v);
    static Distribution normal(double sigma);
    static Distribution shock(double p);
    static Distribution scaled(Distribution inner, double factor);

    bool finite_support() const;
    // Exact atoms (value, probability) for finite-support kinds.
    std::vector<std::pair<double, double>> atoms() const;
};

struct CorrelationMatrix {
    std::vector<std::string> ids;  // demand good ids, row/column order
    std::vector<double> values;    // row-major, ids.size()^2

    double at(std::size_t i, std::size_t j) const { return values[i * ids.size() + j]; }
    bool identity() const;
};

struct UncertaintyConfig {
    std::map<std::string, Distribution> supply;  // supplier id -> distribution
    std::map<std::string, Distribution> demand;  // demanded good id -> distribution
    std::optional<CorrelationMatrix> demand_correlation;  // Gaussian copula over demand
};

enum class SampleStrategyKind { MonteCarlo, StratifiedEquiProbable, Exhaustive };

struct SampleStrategy {
    SampleStrategyKind kind = SampleStrategyKind::MonteCarlo;
    int n = 512;         // MonteCarlo: joint draws; Stratified: cells per axis
    int n_supply = 0;    // optional per-side cell override (0 = use n)
    int n_demand = 0;

    static SampleStrategy monte_carlo(int n);
    static SampleStrategy stratified(int n_per_axis);
    static SampleStrategy stratified(int n_supply, int n_demand);
    static SampleStrategy exhaustive();
};

struct ScenarioSet {
    std::vector<std::string> supplier_ids;  // axis order (sorted)
    std::vector<std::string> demand_ids;    // axis order (config order)
    std::vector<double> supply_values;      // size() * supplier_ids.size(), row-major
    std::vector<double> demand_values;      // size() * demand_ids.size(), row-major
    std::vector<double> weights;            // positive, sum to 1
    std::uint64_t seed = 0;
    SampleStrategy strategy;
    std::string rng_name;
    // Contiguous runs of scenarios sharing one supply realization, in order.
    // Stage-2 recourse decides one mapping usage per run.
    std::vector<std::pair<std::size_t, std::size_t>> supply_groups;

    std::size_t size() const { return weights.size(); }
    const double* supply_row(std::size_t k) const {
        return supply_values.data() + k * supplier_ids.size();
    }
    const double* demand_row(std::size_t k) const {
        return demand_values.data() + k * demand_ids.size();
    }
};

// Pure function of (config, strategy, seed). Scenarios are ordered
// lexicographically by cell/draw index, supply axes first.
ScenarioSet sample(const UncertaintyConfig& config, SampleStrategy strategy, std::uint64_t seed);

// Weighted (mean, variance) of one multiplier axis; axis_id names a supplier
// or a demanded good.
std::pair<double, double> moments(const ScenarioSet& set, const std::string& axis_id);

// Audit export: index, weight, one column per multiplier.
void write_scenarios_csv(const ScenarioSet& set, std::ostream& out);

}  // namespace chainforge
