#include <doctest.h>

#include <cmath>

#include "chainforge/experiments.hpp"

using namespace chainforge;
using namespace chainforge::experiments;

namespace {

ExperimentPlan tiny_plan() {
    ExperimentPlan plan;
    plan.name = "tiny";
    plan.axis = SweepAxis::DemandSigma;
    plan.values = {0.0, 0.2};
    plan.core_counts = {16, 8};
    plan.scenario_budget = 16;
    plan.optimizer.restarts = 0;
    plan.optimizer.nm_max_iter = 200;
    plan.seed = 21;
    return plan;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("axis parameters wire into the spec") {
    ExperimentPlan plan = tiny_plan();

    plan.axis = SweepAxis::SupplySigma;
    MarketSpec spec = build_point_spec(plan, 0.3, true);
    CHECK(spec.uncertainty.supply.at("foundry").kind == Distribution::Kind::Normal);
    CHECK(spec.uncertainty.supply.at("foundry").sigma == 0.3);
    CHECK(spec.uncertainty.demand.at("16c").kind == Distribution::Kind::Deterministic);

    plan.axis = SweepAxis::BothSigma;
    spec = build_point_spec(plan, 0.25, true);
    CHECK(spec.uncertainty.supply.at("foundry").sigma == 0.25);
    CHECK(spec.uncertainty.demand.at("8c").sigma == 0.25);

    plan.axis = SweepAxis::ShockFactor;
    plan.shock_demand = false;
    spec = build_point_spec(plan, 0.4, true);
    CHECK(spec.uncertainty.supply.at("foundry").kind == Distribution::Kind::Shock);
    CHECK(spec.uncertainty.supply.at("foundry").shock_prob == 0.4);
    CHECK(spec.uncertainty.demand.at("16c").kind == Distribution::Kind::Deterministic);

    plan.axis = SweepAxis::SalvageFactor;
    spec = build_point_spec(plan, 0.5, true);
    for (const auto& d : spec.demanded) {
        const ProducedGood* p = spec.find_produced(d.id);
        REQUIRE(p != nullptr);
        CHECK(d.salvage_value == doctest::Approx(0.5 * p->unit_cost));
    }

    plan.axis = SweepAxis::DemandPcc;
    spec = build_point_spec(plan, 0.6, true);
    REQUIRE(spec.uncertainty.demand_correlation.has_value());
    CHECK(spec.uncertainty.demand_correlation->at(0, 1) == 0.6);
    CHECK(spec.uncertainty.demand_correlation->at(0, 0) == 1.0);

    // The interposer-constraint axis forces the interposer-as-good encoding
    // even for the no-intervention variant.
    plan = tiny_plan();
    plan.core_counts = {16, 8, 4};
    plan.axis = SweepAxis::InterposerConstraint;
    spec = build_point_spec(plan, 0.5, true);
    CHECK(spec.find_produced(kInterposerGoodId) != nullptr);
    CHECK(spec.find_mapping("4x4c->16c")->inputs.count(kInterposerGoodId) == 1);
    CHECK(spec.find_mapping("4x4c->16c")->cost_per_use == 0.0);
}

TEST_CASE("multi-ISA axis builds the consolidated-design market") {
    ExperimentPlan plan = tiny_plan();
    plan.axis = SweepAxis::MultiIsaCostScale;
    plan.multi_isa_pcc = -0.4;
    const MarketSpec spec = build_point_spec(plan, 0.05, true);
    REQUIRE(spec.produced.size() == 3);
    const ProducedGood* multi = spec.find_produced("multi");
    REQUIRE(multi != nullptr);
    const ProducedGood* single = spec.find_produced("isa1");
    CHECK(multi->unit_cost == doctest::Approx(single->unit_cost * 1.05));
    CHECK(multi->nre == doctest::Approx(single->nre * 1.05));
    CHECK(spec.mappings.size() == 4);  // two identities + two multi adaptations
    REQUIRE(spec.uncertainty.demand_correlation.has_value());
    CHECK(spec.uncertainty.demand_correlation->at(0, 1) == -0.4);
    CHECK(validate(spec).empty());

    // The no-intervention variant drops the cost overhead but keeps the
    // market (isa goods are never scaled, so they are the reference).
    const MarketSpec base = build_point_spec(plan, 0.05, false);
    CHECK(base.find_produced("multi")->unit_cost == doctest::Approx(single->unit_cost));
}

TEST_CASE("interventions change mappings, staging and curves") {
    ExperimentPlan plan = tiny_plan();
    plan.core_counts = {16, 8, 4};

    plan.interventions = {Intervention::Composition};
    MarketSpec spec = build_point_spec(plan, 0.1, true);
    CHECK(spec.mappings.size() == 7);
    CHECK(spec.recourse_stage == RecourseStage::MappingAfterSupply);

    plan.interventions = {Intervention::Composition, Intervention::JustInTime};
    spec = build_point_spec(plan, 0.1, true);
    CHECK(spec.recourse_stage == RecourseStage::MappingAfterSupplyAndDemand);

    plan.interventions = {Intervention::Adaptation};
    spec = build_point_spec(plan, 0.1, true);
    CHECK(spec.mappings.size() == 6);
    CHECK(spec.recourse_stage == RecourseStage::MappingAfterSupplyAndDemand);

    plan.interventions = {Intervention::DispersionTwo};
    spec = build_point_spec(plan, 0.1, true);
    CHECK(spec.produced.size() == 6);

    plan.interventions = {Intervention::MarketMechanism};
    spec = build_point_spec(plan, 0.1, true);
    for (const auto& d : spec.demanded) {
        REQUIRE(d.demand_curve.has_value());
        CHECK(d.demand_curve->base_price == d.unit_benefit);
        // Revenue vertex at base demand: elasticity = -price / base demand.
        CHECK(d.demand_curve->elasticity ==
              doctest::Approx(-d.unit_benefit / d.base_demand));
    }

    // The baseline variant ignores the interventions.
    spec = build_point_spec(plan, 0.1, false);
    for (const auto& d : spec.demanded) CHECK(!d.demand_curve.has_value());
}

TEST_CASE("stratified budgets split across stochastic axes") {
    ExperimentPlan plan = tiny_plan();
    plan.scenario_budget = 512;

    plan.axis = SweepAxis::SupplySigma;
    const MarketSpec s1 = build_point_spec(plan, 0.3, true);
    const SampleStrategy st1 = resolve_strategy(plan, s1.uncertainty);
    CHECK(st1.n == 512);  // one stochastic axis gets the whole budget

    plan.axis = SweepAxis::DemandSigma;
    plan.core_counts = {16, 8, 4};
    const MarketSpec s3 = build_point_spec(plan, 0.3, true);
    const SampleStrategy st3 = resolve_strategy(plan, s3.uncertainty);
    CHECK(st3.n == 8);  // 8^3 = 512 across three demand axes

    // All-deterministic config collapses to the exhaustive single scenario.
    const MarketSpec s0 = build_point_spec(plan, 0.0, true);
    CHECK(resolve_strategy(plan, s0.uncertainty).kind == SampleStrategyKind::Exhaustive);
}

TEST_CASE("run produces reports, lambda and deterministic CSV output") {
    const ExperimentPlan plan = tiny_plan();
    const SweepResult result = run(plan);
    REQUIRE(result.points.size() == 2);
    for (const auto& p : result.points) CHECK(!p.failed);

    // Point 0 has zero uncertainty: the lambda denominator vanishes.
    CHECK(result.points[0].lambda_undefined);
    CHECK(!result.points[0].lambda.has_value());

    // Plain baseline plan: intervention mean equals baseline mean, lambda 0.
    REQUIRE(result.points[1].lambda.has_value());
    CHECK(*result.points[1].lambda == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(result.points[1].report.mean < result.points[0].report.mean);

    // Identical seeds reproduce byte-identical CSV output (the JSON carries
    // wall-clock metadata, so only the CSVs are compared).
    const SweepResult again = run(plan);
    CHECK(sweep_csv(result) == sweep_csv(again));
    CHECK(policy_shares_csv(result) == policy_shares_csv(again));

    const std::string csv = sweep_csv(result);
    CHECK(csv.rfind("experiment,parameter,mean,std,min,q1,median,q3,max,n_outliers,lambda",
                    0) == 0);
    CHECK(csv.find("order_share_16c") != std::string::npos);
    CHECK(csv.find("tiny,0.2,") != std::string::npos);
}

TEST_CASE("adaptation at demand sigma recovers part of the loss") {
    ExperimentPlan plan = tiny_plan();
    plan.name = "adapt";
    plan.core_counts = {16, 8, 4};
    plan.values = {0.3};
    plan.scenario_budget = 125;
    plan.interventions = {Intervention::Adaptation};
    const SweepResult result = run(plan);
    REQUIRE(result.points.size() == 1);
    REQUIRE(!result.points[0].failed);
    REQUIRE(result.points[0].lambda.has_value());
    CHECK(*result.points[0].lambda > 0.0);
    // Adaptation has no zero-uncertainty gain, so both lambdas agree up to
    // solver noise in the two zero-uncertainty solves.
    REQUIRE(result.points[0].lambda_yield_norm.has_value());
    CHECK(*result.points[0].lambda_yield_norm ==
          doctest::Approx(*result.points[0].lambda).epsilon(0.005));
}

TEST_CASE("lambda_table pairs matching sweeps and rejects mismatches") {
    ExperimentPlan base = tiny_plan();
    const SweepResult baseline = run(base);

    ExperimentPlan adapt = tiny_plan();
    adapt.name = "adapt";
    adapt.core_counts = {16, 8};
    adapt.interventions = {Intervention::Adaptation};
    // Needs 4c for the builder: use 16/8/4 for both to compare apples.
    base.core_counts = {16, 8, 4};
    adapt.core_counts = {16, 8, 4};
    const SweepResult b2 = run(base);
    const SweepResult a2 = run(adapt);
    const auto table = lambda_table(a2, b2);
    REQUIRE(table.size() == 2);
    CHECK(!table[0].has_value());  // zero-uncertainty point is undefined
    CHECK(table[1].has_value());

    SweepResult wrong = b2;
    wrong.points.pop_back();
    CHECK_THROWS_AS(lambda_table(a2, wrong), std::invalid_argument);
}

TEST_CASE("zero shock factor reproduces the deterministic baseline") {
    ExperimentPlan det = tiny_plan();
    det.values = {0.0};
    det.axis = SweepAxis::BothSigma;
    ExperimentPlan shock = tiny_plan();
    shock.name = "shock";
    shock.values = {0.0};
    shock.axis = SweepAxis::ShockFactor;
    shock.strategy = SampleStrategyKind::Exhaustive;
    const SweepResult a = run(det);
    const SweepResult b = run(shock);
    REQUIRE(!a.points[0].failed);
    REQUIRE(!b.points[0].failed);
    CHECK(b.points[0].report.mean ==
          doctest::Approx(a.points[0].report.mean).epsilon(1e-6));
}

TEST_CASE("market-mechanism experiment runs with curve pricing end to end") {
    ExperimentPlan plan = tiny_plan();
    plan.name = "mm";
    plan.values = {0.25};
    plan.axis = SweepAxis::BothSigma;
    plan.scenario_budget = 64;
    plan.interventions = {Intervention::MarketMechanism};
    const SweepResult result = run(plan);
    REQUIRE(result.points.size() == 1);
    REQUIRE(!result.points[0].failed);
    CHECK(result.points[0].report.mean > 0.0);
    REQUIRE(result.points[0].lambda.has_value());
    // Curve awareness pads losses when supply is short or demand is high, so
    // it behaves like a (weak) intervention.
    CHECK(*result.points[0].lambda > -5.0);
    CHECK(*result.points[0].lambda < 60.0);
}

TEST_CASE("point failures are recorded, not thrown") {
    ExperimentPlan plan = tiny_plan();
    plan.axis = SweepAxis::DemandPcc;
    plan.values = {0.9};  // PCC needs MonteCarlo; stratified sampling throws
    plan.strategy = SampleStrategyKind::StratifiedEquiProbable;
    plan.base_demand_sigma = 0.2;
    const SweepResult result = run(plan);
    REQUIRE(result.points.size() == 1);
    CHECK(result.points[0].failed);
    CHECK(!result.points[0].error.empty());
    const std::string csv = sweep_csv(result);
    CHECK(csv.find("error") != std::string::npos);
}

}  // TEST_SUITE
