#include <doctest.h>

#include <cmath>

#include "chainforge/optimize.hpp"

using namespace chainforge;

namespace {

MarketSpec newsvendor(double yield, double unit_cost, double nre, double base_demand,
                      double unit_benefit, double shortage) {
    MarketSpec spec;
    spec.produced.push_back({"g", unit_cost, nre, yield, "s"});
    DemandedGood d{"d", base_demand, unit_benefit, shortage, 0.0, std::nullopt};
    spec.demanded = {d};
    Mapping m;
    m.id = "g->d";
    m.inputs["g"] = 1.0;
    m.output = "d";
    spec.mappings = {m};
    spec.uncertainty.supply["s"] = Distribution::deterministic(1.0);
    spec.uncertainty.demand["d"] = Distribution::deterministic(1.0);
    return spec;
}

OptimizerConfig quick_config() {
    OptimizerConfig config;
    config.restarts = 1;
    config.nm_max_iter = 400;
    config.seed = 5;
    return config;
}

}  // namespace

TEST_SUITE("optimize") {

TEST_CASE("deterministic newsvendor finds q* = demand") {
    // Enumerating q in {0,...,200} puts the optimum at q = 100, E[P] = 90.
    const MarketSpec spec = newsvendor(1.0, 1.0, 10.0, 100.0, 2.0, 2.0);
    const ScenarioSet set = sample(spec.uncertainty, SampleStrategy::exhaustive(), 1);
    const OptimizationResult res = optimize(spec, set, quick_config());
    CHECK(res.policy.order_qty.at("g") == doctest::Approx(100.0).epsilon(1e-3));
    CHECK(res.expected_profit == doctest::Approx(90.0).epsilon(1e-6));
    CHECK(res.policy.ordered.at("g") == 1);
}

TEST_CASE("high NRE still beats pure shortage") {
    // n = 150: ordering loses 50, but ordering nothing loses 200.
    const MarketSpec spec = newsvendor(1.0, 1.0, 150.0, 100.0, 2.0, 2.0);
    const ScenarioSet set = sample(spec.uncertainty, SampleStrategy::exhaustive(), 1);
    const OptimizationResult res = optimize(spec, set, quick_config());
    CHECK(res.policy.order_qty.at("g") == doctest::Approx(100.0).epsilon(1e-3));
    CHECK(res.expected_profit == doctest::Approx(-50.0).epsilon(1e-6));
}

TEST_CASE("unprofitable good is not ordered at all") {
    // Benefit below cost and no shortage pressure: the empty subset wins.
    const MarketSpec spec = newsvendor(1.0, 2.0, 10.0, 100.0, 1.0, 0.0);
    const ScenarioSet set = sample(spec.uncertainty, SampleStrategy::exhaustive(), 1);
    const OptimizationResult res = optimize(spec, set, quick_config());
    CHECK(res.policy.order_qty.at("g") <= kOrderEps);
    CHECK(res.expected_profit == doctest::Approx(0.0));
    CHECK(res.policy.ordered.at("g") == 0);
}

TEST_CASE("zero-uncertainty baseline orders b/y per good") {
    const MarketSpec spec = build_baseline({16, 8, 4}, {});
    const ScenarioSet set = sample(spec.uncertainty, SampleStrategy::exhaustive(), 1);
    OptimizerConfig config = quick_config();
    const OptimizationResult res = optimize(spec, set, config);
    for (const auto& g : spec.produced) {
        const double expected = spec.demanded[0].base_demand / g.yield_rate;
        CHECK(res.policy.order_qty.at(g.id) == doctest::Approx(expected).epsilon(1e-3));
    }
}

TEST_CASE("zero-uncertainty composition orders only 4-core chiplets") {
    const MarketSpec spec = add_composition(build_baseline({16, 8, 4}, {}), 0.002);
    const ScenarioSet set = sample(spec.uncertainty, SampleStrategy::exhaustive(), 1);
    const OptimizationResult res = optimize(spec, set, quick_config());
    CHECK(res.policy.order_qty.at("16c") <= kOrderEps);
    CHECK(res.policy.order_qty.at("8c") <= kOrderEps);
    CHECK(res.policy.order_qty.at("4c") > 0.0);
}

TEST_CASE("two-good search matches exhaustive grid enumeration") {
    // Integer-friendly data, discrete demand scenarios; grid step 1 over both
    // order quantities is the independent optimum.
    MarketSpec spec;
    spec.produced.push_back({"a", 1.0, 6.0, 1.0, "s"});
    spec.produced.push_back({"b", 2.0, 4.0, 1.0, "s"});
    spec.demanded.push_back({"a", 10.0, 3.0, 3.0, 0.0, std::nullopt});
    spec.demanded.push_back({"b", 8.0, 4.0, 4.0, 0.0, std::nullopt});
    Mapping ma, mb, cross;
    ma.id = "a->a";
    ma.inputs["a"] = 1.0;
    ma.output = "a";
    mb.id = "b->b";
    mb.inputs["b"] = 1.0;
    mb.output = "b";
    cross.id = "a->b";  // adaptation path
    cross.inputs["a"] = 1.0;
    cross.output = "b";
    spec.mappings = {ma, mb, cross};
    spec.uncertainty.supply["s"] = Distribution::deterministic(1.0);
    spec.uncertainty.demand["a"] = Distribution::shock(0.4);
    spec.uncertainty.demand["b"] = Distribution::shock(0.25);
    const ScenarioSet set = sample(spec.uncertainty, SampleStrategy::exhaustive(), 1);

    const recourse::StagedEvaluator eval(spec, set);
    double best_grid = -1e300;
    std::vector<double> q(2);
    for (int qa = 0; qa <= 30; ++qa) {
        for (int qb = 0; qb <= 30; ++qb) {
            q[0] = qa;
            q[1] = qb;
            best_grid =
                std::max(best_grid, eval.evaluate(q, RecourseStage::MappingAfterSupplyAndDemand));
        }
    }
    const OptimizationResult res = optimize(spec, set, quick_config());
    CHECK(res.expected_profit >= best_grid - 0.005 * std::fabs(best_grid));
}

TEST_CASE("reported profit equals re-evaluating the returned policy") {
    MarketSpec spec = build_baseline({16, 8}, {});
    spec.uncertainty.supply["foundry"] = Distribution::normal(0.3);
    const ScenarioSet set = sample(spec.uncertainty, SampleStrategy::stratified(16), 3);
    const OptimizationResult res = optimize(spec, set, quick_config());
    CHECK(res.expected_profit ==
          doctest::Approx(expected_profit(spec, res.policy, set)).epsilon(1e-12));
    CHECK(res.scenario_seed == set.seed);
    CHECK(!res.incumbent_trace.empty());
}

TEST_CASE("scale invariance: scaling money leaves the optimal order unchanged") {
    MarketSpec spec = newsvendor(0.8, 1.0, 20.0, 100.0, 2.5, 2.5);
    spec.uncertainty.demand["d"] = Distribution::normal(0.25);
    const ScenarioSet set = sample(spec.uncertainty, SampleStrategy::stratified(24), 7);
    const OptimizationResult base = optimize(spec, set, quick_config());

    const double k = 12.5;
    MarketSpec scaled = spec;
    scaled.produced[0].unit_cost *= k;
    scaled.produced[0].nre *= k;
    scaled.demanded[0].unit_benefit *= k;
    scaled.demanded[0].unit_shortage_cost *= k;
    const OptimizationResult big = optimize(scaled, set, quick_config());
    // The SAA objective is piecewise linear; near-flat segments admit any
    // point between adjacent scenario kinks, so q matches to the kink spacing
    // while the value matches tightly.
    CHECK(big.policy.order_qty.at("g") ==
          doctest::Approx(base.policy.order_qty.at("g")).epsilon(0.02));
    CHECK(big.expected_profit == doctest::Approx(k * base.expected_profit).epsilon(0.005));
}

TEST_CASE("supply caps and order equality are honored") {
    MarketSpec spec = build_baseline({16, 8}, {});
    spec.constraints.push_back(OrderConstraint::supply_cap("16c", 5e7));
    const ScenarioSet set = sample(spec.uncertainty, SampleStrategy::exhaustive(), 1);
    const OptimizationResult capped = optimize(spec, set, quick_config());
    CHECK(capped.policy.order_qty.at("16c") <= 5e7 * (1.0 + 1e-9));

    const MarketSpec disp = add_dispersion(build_baseline({16, 8}, {}),
                                           DispersionMode::TwoSuppliersAll, 1.0);
    const ScenarioSet dset = sample(disp.uncertainty, SampleStrategy::exhaustive(), 1);
    const OptimizationResult eq = optimize(disp, dset, quick_config());
    for (const char* good : {"16c", "8c"}) {
        const double a = eq.policy.order_qty.at(std::string(good) + "@A");
        const double b = eq.policy.order_qty.at(std::string(good) + "@B");
        CHECK(a == b);  // one shared variable per equality class
    }
}

TEST_CASE("constrained rerun caps orders against the unconstrained policy") {
    MarketSpec spec = build_baseline({16, 8}, {});
    spec.uncertainty.supply["foundry"] = Distribution::normal(0.2);
    const ScenarioSet set = sample(spec.uncertainty, SampleStrategy::stratified(12), 9);
    const OptimizerConfig config = quick_config();

    const OptimizationResult unconstrained = optimize(spec, set, config);
    const OptimizationResult full = constrained_rerun(spec, set, config, 1.0, {"16c", "8c"});
    CHECK(full.expected_profit ==
          doctest::Approx(unconstrained.expected_profit).epsilon(0.005));

    const OptimizationResult zero = constrained_rerun(spec, set, config, 0.0, {"16c", "8c"});
    CHECK(zero.policy.order_qty.at("16c") == 0.0);
    CHECK(zero.policy.order_qty.at("8c") == 0.0);
    CHECK(zero.expected_profit < unconstrained.expected_profit);

    // Monotone in the constraint factor (within solver noise).
    double prev = zero.expected_profit;
    for (double s : {0.4, 0.7, 1.0}) {
        const OptimizationResult r = constrained_rerun(spec, set, config, s, {"16c", "8c"});
        CHECK(r.expected_profit >= prev - 0.005 * std::fabs(prev));
        prev = r.expected_profit;
    }
}

TEST_CASE("simulated annealing lands near the subset-enumeration optimum") {
    MarketSpec spec = build_baseline({16, 8}, {});
    spec.uncertainty.demand["16c"] = Distribution::normal(0.3);
    spec.uncertainty.demand["8c"] = Distribution::normal(0.3);
    const ScenarioSet set = sample(spec.uncertainty, SampleStrategy::stratified(8), 13);

    const OptimizationResult nm = optimize(spec, set, quick_config());
    OptimizerConfig sa = quick_config();
    sa.method = OptimizerConfig::Method::SimulatedAnnealing;
    sa.anneal.t0 = 0.05;
    sa.anneal.cooling = 0.995;
    sa.anneal.steps = 2500;
    const OptimizationResult annealed = optimize(spec, set, sa);
    CHECK(annealed.method == "simulated-annealing");
    CHECK(annealed.expected_profit >=
          nm.expected_profit - 0.02 * std::fabs(nm.expected_profit));
}

TEST_CASE("trace csv has a header and one row per incumbent") {
    const MarketSpec spec = newsvendor(1.0, 1.0, 10.0, 100.0, 2.0, 2.0);
    const ScenarioSet set = sample(spec.uncertainty, SampleStrategy::exhaustive(), 1);
    const OptimizationResult res = optimize(spec, set, quick_config());
    const std::string csv = trace_csv(res);
    CHECK(csv.rfind("iteration,incumbent_profit\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') ==
          static_cast<long>(res.incumbent_trace.size()) + 1);
}

}  // TEST_SUITE
