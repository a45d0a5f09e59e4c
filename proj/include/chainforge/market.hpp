#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chainforge/chipcost.hpp"
#include "chainforge/uncertainty.hpp"

// The market specification: produced goods a firm can order from foundries,
// market-facing demanded goods, and the mapping rules that turn the former
// into the latter. Specs are immutable after construction and safe to share
// across parallel scenario evaluators.

namespace chainforge {

struct DemandCurve {
    double elasticity = 0.0;  // money per unit^2; negative slopes downward
    double base_price = 0.0;  // price at which base demand clears
};

struct ProducedGood {
    std::string id;
    double unit_cost = 0.0;
    double nre = 0.0;          // fixed charge iff the good is ordered at all
    double yield_rate = 1.0;   // in (0, 1]
    std::string supplier_id;   // goods sharing a supplier share one supply draw
};

struct DemandedGood {
    std::string id;
    double base_demand = 0.0;
    double unit_benefit = 0.0;
    double unit_shortage_cost = 0.0;
    double salvage_value = 0.0;  // per built-but-unsold unit
    std::optional<DemandCurve> demand_curve;
};

struct Mapping {
    std::string id;
    std::map<std::string, double> inputs;  // produced id -> units consumed per use
    std::string output;                    // demanded id
    double cost_per_use = 0.0;
};

struct OrderConstraint {
    enum class Kind { SupplyCap, SupplyCapFactor, OrderEquality };
    Kind kind = Kind::SupplyCap;
    std::string good_id;   // SupplyCap / SupplyCapFactor
    double cap = 0.0;      // SupplyCap
    double factor = 1.0;   // SupplyCapFactor, in [0,1]
    std::map<std::string, double> reference;  // SupplyCapFactor reference policy;
                                              // empty -> resolved by a nested solve
    std::vector<std::string> group;  // OrderEquality members (>= 2)

    static OrderConstraint supply_cap(std::string good, double cap);
    static OrderConstraint supply_cap_factor(std::string good, double factor);
    static OrderConstraint order_equality(std::vector<std::string> goods);
};

enum class RecourseStage {
    MappingAfterSupply,           // stage 2: U decided once supply is known
    MappingAfterSupplyAndDemand,  // stage 3: U decided per (supply, demand)
};

struct MarketSpec {
    std::vector<ProducedGood> produced;
    std::vector<DemandedGood> demanded;
    std::vector<Mapping> mappings;
    std::vector<OrderConstraint> constraints;
    UncertaintyConfig uncertainty;
    RecourseStage recourse_stage = RecourseStage::MappingAfterSupplyAndDemand;

    const ProducedGood* find_produced(const std::string& id) const;
    const DemandedGood* find_demanded(const std::string& id) const;
    const Mapping* find_mapping(const std::string& id) const;
};

struct Violation {
    std::string path;     // e.g. "produced[16c].yield_rate"
    std::string message;
};

// Returns every invariant violation; an empty list means the spec is valid.
std::vector<Violation> validate(const MarketSpec& spec);

// One produced and one demanded good per core count, economics from the cost
// model, plus one zero-cost identity mapping per pair.
MarketSpec build_baseline(const std::vector<int>& core_counts, const chipcost::CostParams& params);

// Adds the chiplet composition mappings {2x8c, 4x4c, 1x8c+2x4c} -> 16c and
// 2x4c -> 8c. The 8-core composition costs half the 16-core interposer. With
// interposer_as_good, interposers become an explicit produced good consumed by
// the composition mappings instead of a per-use cost.
MarketSpec add_composition(MarketSpec spec, double interposer_cost_16,
                           bool interposer_as_good = false);

// Adds the core-disabling mappings 16c->8c, 16c->4c, 8c->4c at zero cost.
// Idempotent.
MarketSpec add_adaptation(MarketSpec spec);

enum class DispersionMode {
    UniquePerGood,    // each produced good gets its own independent supplier
    TwoSuppliersAll,  // every good cloned across two suppliers, equal orders
};

// nre_share is the fraction of NRE reused by the second supplier's copy
// (1 -> free clone, 0 -> full NRE again). Only meaningful for TwoSuppliersAll.
MarketSpec add_dispersion(MarketSpec spec, DispersionMode mode, double nre_share);

// Names used by the builders.
std::string core_good_id(int cores);
std::string identity_mapping_id(int cores);
inline constexpr const char* kInterposerGoodId = "interposer";

}  // namespace chainforge
