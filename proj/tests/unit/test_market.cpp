#include <doctest.h>

#include <algorithm>
#include <set>

#include "chainforge/market.hpp"

using namespace chainforge;

namespace {
const chipcost::CostParams kParams;
MarketSpec baseline() { return build_baseline({16, 8, 4}, kParams); }
}  // namespace

TEST_SUITE("market") {

TEST_CASE("baseline builder: one good, demand and identity mapping per core count") {
    const MarketSpec spec = baseline();
    CHECK(spec.produced.size() == 3);
    CHECK(spec.demanded.size() == 3);
    CHECK(spec.mappings.size() == 3);
    CHECK(validate(spec).empty());
    for (const auto& m : spec.mappings) {
        CHECK(m.cost_per_use == 0.0);
        CHECK(m.inputs.size() == 1);
        CHECK(m.inputs.begin()->second == 1.0);
        CHECK(m.inputs.begin()->first == m.output);
    }
    // Economics flow from the cost model, shortage cost equals unit benefit.
    for (const auto& d : spec.demanded) {
        CHECK(d.unit_shortage_cost == d.unit_benefit);
        CHECK(d.base_demand == kParams.base_demand);
    }
    // All goods share one supplier: one supply draw for the whole order book.
    std::set<std::string> suppliers;
    for (const auto& g : spec.produced) suppliers.insert(g.supplier_id);
    CHECK(suppliers.size() == 1);
}

TEST_CASE("baseline builder edge cases") {
    const MarketSpec one = build_baseline({16}, kParams);
    CHECK(one.produced.size() == 1);
    CHECK(one.demanded.size() == 1);
    CHECK(one.mappings.size() == 1);
    CHECK_THROWS_AS(build_baseline({}, kParams), std::invalid_argument);
    CHECK_THROWS_AS(build_baseline({8, 8}, kParams), std::invalid_argument);
}

TEST_CASE("validate flags bad yield and unknown mapping references") {
    MarketSpec spec = baseline();
    spec.produced[0].yield_rate = 0.0;
    auto violations = validate(spec);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].path.find(spec.produced[0].id) != std::string::npos);
    CHECK(violations[0].path.find("yield_rate") != std::string::npos);

    spec = baseline();
    Mapping bad;
    bad.id = "bad";
    bad.inputs["nonexistent"] = 1.0;
    bad.output = "16c";
    spec.mappings.push_back(bad);
    violations = validate(spec);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].path.find("nonexistent") != std::string::npos);
}

TEST_CASE("validate covers the remaining invariants") {
    MarketSpec spec = baseline();
    spec.demanded[0].salvage_value = spec.demanded[0].unit_benefit;  // must be strictly below
    CHECK(validate(spec).size() == 1);

    spec = baseline();
    spec.demanded[0].salvage_value = 0.0;  // zero salvage is always fine
    CHECK(validate(spec).empty());

    spec = baseline();
    spec.mappings[0].inputs.clear();
    CHECK(!validate(spec).empty());

    spec = baseline();
    spec.constraints.push_back(OrderConstraint::order_equality({"16c"}));
    CHECK(validate(spec).size() == 1);

    spec = baseline();
    spec.constraints.push_back(OrderConstraint::supply_cap_factor("16c", 1.5));
    CHECK(validate(spec).size() == 1);

    spec = baseline();
    spec.uncertainty.demand["16c"] = Distribution::normal(-0.1);
    CHECK(validate(spec).size() == 1);

    // A demanded good with no mapping is legal (it scores pure shortage).
    spec = baseline();
    DemandedGood orphan;
    orphan.id = "orphan";
    orphan.base_demand = 10.0;
    orphan.unit_benefit = 1.0;
    orphan.unit_shortage_cost = 1.0;
    spec.demanded.push_back(orphan);
    spec.uncertainty.demand["orphan"] = Distribution::deterministic(1.0);
    CHECK(validate(spec).empty());
}

TEST_CASE("validate checks correlation matrices") {
    MarketSpec spec = baseline();
    CorrelationMatrix corr;
    corr.ids = {"16c", "8c"};
    corr.values = {1.0, 0.5, 0.5, 1.0};
    spec.uncertainty.demand_correlation = corr;
    CHECK(validate(spec).empty());

    corr.values = {1.0, 0.5, 0.3, 1.0};  // asymmetric
    spec.uncertainty.demand_correlation = corr;
    CHECK(!validate(spec).empty());

    corr.values = {1.0, 1.2, 1.2, 1.0};  // not PSD
    spec.uncertainty.demand_correlation = corr;
    CHECK(!validate(spec).empty());
}

TEST_CASE("composition adds the four chiplet mappings") {
    const MarketSpec spec = add_composition(baseline(), 0.002);
    CHECK(spec.mappings.size() == 7);
    CHECK(validate(spec).empty());
    const Mapping* m16 = spec.find_mapping("2x8c->16c");
    REQUIRE(m16 != nullptr);
    CHECK(m16->cost_per_use == 0.002);
    const Mapping* m8 = spec.find_mapping("2x4c->8c");
    REQUIRE(m8 != nullptr);
    // The 8-core interposer is half the size, so half the cost.
    CHECK(m8->cost_per_use == doctest::Approx(0.001).epsilon(1e-12));
    const Mapping* mix = spec.find_mapping("1x8c+2x4c->16c");
    REQUIRE(mix != nullptr);
    CHECK(mix->inputs.at("8c") == 1.0);
    CHECK(mix->inputs.at("4c") == 2.0);

    const MarketSpec free_spec = add_composition(baseline(), 0.0);
    for (const char* id : {"2x8c->16c", "4x4c->16c", "1x8c+2x4c->16c", "2x4c->8c"})
        CHECK(free_spec.find_mapping(id)->cost_per_use == 0.0);

    CHECK_THROWS_AS(add_composition(build_baseline({16}, kParams), 0.0), std::invalid_argument);
}

TEST_CASE("composition with the interposer modeled as a produced good") {
    const MarketSpec spec = add_composition(baseline(), 0.002, true);
    const ProducedGood* ip = spec.find_produced(kInterposerGoodId);
    REQUIRE(ip != nullptr);
    CHECK(ip->unit_cost == 0.002);
    CHECK(ip->nre == 0.0);
    CHECK(spec.find_mapping("2x8c->16c")->inputs.at(kInterposerGoodId) == 1.0);
    CHECK(spec.find_mapping("2x4c->8c")->inputs.at(kInterposerGoodId) == 0.5);
    CHECK(spec.find_mapping("2x8c->16c")->cost_per_use == 0.0);
    CHECK(validate(spec).empty());
}

TEST_CASE("adaptation adds free down-mappings and is idempotent") {
    const MarketSpec spec = add_adaptation(baseline());
    CHECK(spec.mappings.size() == 6);
    CHECK(validate(spec).empty());
    for (const char* id : {"16c->8c", "16c->4c", "8c->4c"}) {
        const Mapping* m = spec.find_mapping(id);
        REQUIRE(m != nullptr);
        CHECK(m->cost_per_use == 0.0);
    }
    // Adapted output sells at the purpose-built demand's benefit: the mapping
    // targets the existing demanded good, no price penalty.
    CHECK(spec.find_mapping("16c->8c")->output == "8c");

    const MarketSpec twice = add_adaptation(spec);
    CHECK(twice.mappings.size() == 6);
}

TEST_CASE("builder outputs keep the baseline mappings (superset property)") {
    const MarketSpec base = baseline();
    for (const MarketSpec& spec : {add_composition(baseline(), 0.002), add_adaptation(baseline())})
        for (const auto& m : base.mappings) CHECK(spec.find_mapping(m.id) != nullptr);
}

TEST_CASE("builders are deterministic") {
    const MarketSpec a = add_adaptation(add_composition(baseline(), 0.002));
    const MarketSpec b = add_adaptation(add_composition(baseline(), 0.002));
    REQUIRE(a.mappings.size() == b.mappings.size());
    for (std::size_t i = 0; i < a.mappings.size(); ++i) {
        CHECK(a.mappings[i].id == b.mappings[i].id);
        CHECK(a.mappings[i].inputs == b.mappings[i].inputs);
    }
    for (std::size_t i = 0; i < a.produced.size(); ++i) {
        CHECK(a.produced[i].id == b.produced[i].id);
        CHECK(a.produced[i].unit_cost == b.produced[i].unit_cost);
    }
}

TEST_CASE("unique-supplier dispersion decouples the supply draws") {
    MarketSpec base = baseline();
    base.uncertainty.supply["foundry"] = Distribution::normal(0.3);
    const MarketSpec spec = add_dispersion(base, DispersionMode::UniquePerGood, 0.0);
    CHECK(validate(spec).empty());
    std::set<std::string> suppliers;
    for (const auto& g : spec.produced) suppliers.insert(g.supplier_id);
    CHECK(suppliers.size() == 3);
    // Each new supplier inherits the shared distribution.
    for (const auto& sid : suppliers) {
        REQUIRE(spec.uncertainty.supply.count(sid) == 1);
        CHECK(spec.uncertainty.supply.at(sid).kind == Distribution::Kind::Normal);
        CHECK(spec.uncertainty.supply.at(sid).sigma == 0.3);
    }
}

TEST_CASE("two-supplier dispersion clones goods with equality constraints") {
    const MarketSpec spec = add_dispersion(baseline(), DispersionMode::TwoSuppliersAll, 0.25);
    CHECK(validate(spec).empty());
    CHECK(spec.produced.size() == 6);
    CHECK(spec.mappings.size() == 6);
    int equalities = 0;
    for (const auto& c : spec.constraints)
        if (c.kind == OrderConstraint::Kind::OrderEquality) ++equalities;
    CHECK(equalities == 3);

    const ProducedGood* a = spec.find_produced("16c@A");
    const ProducedGood* b = spec.find_produced("16c@B");
    REQUIRE(a != nullptr);
    REQUIRE(b != nullptr);
    CHECK(a->supplier_id == "supA");
    CHECK(b->supplier_id == "supB");
    // Second source reuses a quarter of the engineering.
    CHECK(b->nre == doctest::Approx(a->nre * 0.75).epsilon(1e-12));
    CHECK(a->unit_cost == b->unit_cost);

    const MarketSpec full = add_dispersion(baseline(), DispersionMode::TwoSuppliersAll, 1.0);
    CHECK(full.find_produced("16c@B")->nre == 0.0);
    const MarketSpec none = add_dispersion(baseline(), DispersionMode::TwoSuppliersAll, 0.0);
    CHECK(none.find_produced("16c@B")->nre == none.find_produced("16c@A")->nre);
}

}  // TEST_SUITE
