// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion pins its tolerances in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "chainforge/chipcost.hpp"
#include "chainforge/closed_form.hpp"
#include "chainforge/engine.hpp"
#include "chainforge/experiments.hpp"
#include "chainforge/format.hpp"
#include "chainforge/market.hpp"
#include "chainforge/optimize.hpp"
#include "chainforge/recourse.hpp"
#include "chainforge/rng.hpp"

using namespace chainforge;

namespace {

int g_failures = 0;
std::chrono::steady_clock::time_point g_start;

void begin() { g_start = std::chrono::steady_clock::now(); }

void result(int criterion, const char* name, bool pass, const std::string& detail) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - g_start).count();
    std::printf("[%s] criterion %2d: %-28s %s (%.1fs)\n", pass ? "PASS" : "FAIL", criterion, name,
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::mt19937_64 g_gen(20240811);
double uniform(double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(g_gen() >> 11) * 0x1.0p-53;
}

int hw_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

MarketSpec random_market(int max_goods, int max_mappings, bool adaptation_only,
                         bool integer_data) {
    MarketSpec spec;
    const int np = 1 + static_cast<int>(g_gen() % max_goods);
    const int nd = 1 + static_cast<int>(g_gen() % 3);
    for (int i = 0; i < np; ++i) {
        ProducedGood g;
        g.id = "p" + std::to_string(i);
        g.unit_cost = integer_data ? static_cast<double>(1 + g_gen() % 4) : uniform(0.1, 3.0);
        g.nre = integer_data ? static_cast<double>(g_gen() % 20) : uniform(0.0, 50.0);
        g.yield_rate = integer_data ? 1.0 : uniform(0.4, 1.0);
        g.supplier_id = "s" + std::to_string(g_gen() % 2);
        spec.produced.push_back(std::move(g));
    }
    for (int d = 0; d < nd; ++d) {
        DemandedGood dd;
        dd.id = "d" + std::to_string(d);
        dd.base_demand = static_cast<double>(1 + g_gen() % 20);
        dd.unit_benefit = integer_data ? static_cast<double>(2 + g_gen() % 6) : uniform(0.5, 6.0);
        dd.unit_shortage_cost =
            integer_data ? static_cast<double>(g_gen() % 6) : uniform(0.0, 6.0);
        dd.salvage_value = 0.0;
        spec.demanded.push_back(std::move(dd));
    }
    const int nm = 1 + static_cast<int>(g_gen() % max_mappings);
    for (int j = 0; j < nm; ++j) {
        Mapping m;
        m.id = "m" + std::to_string(j);
        if (adaptation_only) {
            m.inputs["p" + std::to_string(g_gen() % np)] = 1.0;
        } else {
            const int n_inputs = 1 + static_cast<int>(g_gen() % 2);
            for (int t = 0; t < n_inputs; ++t)
                m.inputs["p" + std::to_string(g_gen() % np)] =
                    static_cast<double>(1 + g_gen() % 3);
        }
        m.output = "d" + std::to_string(g_gen() % nd);
        m.cost_per_use = integer_data ? static_cast<double>(g_gen() % 3) : uniform(0.0, 1.0);
        spec.mappings.push_back(std::move(m));
    }
    for (const auto& g : spec.produced)
        if (!spec.uncertainty.supply.count(g.supplier_id))
            spec.uncertainty.supply[g.supplier_id] = Distribution::deterministic(1.0);
    for (const auto& d : spec.demanded)
        spec.uncertainty.demand[d.id] = Distribution::deterministic(1.0);
    return spec;
}

experiments::ExperimentPlan base_plan(const char* name, experiments::SweepAxis axis,
                                      std::vector<double> values) {
    experiments::ExperimentPlan plan;
    plan.name = name;
    plan.axis = axis;
    plan.values = std::move(values);
    plan.seed = 1;
    plan.scenario_budget = 512;
    plan.optimizer.threads = hw_threads();
    return plan;
}

// ---------------------------------------------------------------------------

void criterion1_accounting_identity() {
    begin();
    const std::size_t target = 100000;
    std::size_t done = 0;
    bool pass = true;
    double worst = 0.0;
    while (done < target) {
        MarketSpec spec = random_market(3, 4, done % 2 == 0, false);
        for (auto& [sid, dist] : spec.uncertainty.supply)
            dist = (g_gen() % 2) ? Distribution::normal(uniform(0.0, 0.4))
                                 : Distribution::shock(uniform(0.0, 0.5));
        for (auto& [did, dist] : spec.uncertainty.demand)
            dist = Distribution::normal(uniform(0.0, 0.4));
        const ScenarioSet set =
            sample(spec.uncertainty, SampleStrategy::monte_carlo(25), g_gen());
        const CompiledMarket market = CompiledMarket::compile(spec, set);

        std::vector<double> q(market.num_produced());
        std::vector<char> o(market.num_produced());
        for (std::size_t i = 0; i < q.size(); ++i) {
            q[i] = uniform(0.0, 40.0);
            o[i] = q[i] > kOrderEps;
        }
        std::vector<double> usage(market.num_mappings());
        std::vector<double> used(market.num_produced());
        for (std::size_t k = 0; k < set.size() && done < target; ++k, ++done) {
            for (auto& u : usage) u = uniform(0.0, 10.0);
            // Scale usage into feasibility for this scenario's obtained units.
            std::fill(used.begin(), used.end(), 0.0);
            for (std::size_t j = 0; j < usage.size(); ++j)
                for (const auto& use : market.mapping_inputs[j])
                    used[use.good] += usage[j] * use.qty;
            double scale = 1.0;
            const double* srow = set.supply_row(k);
            for (std::size_t i = 0; i < q.size(); ++i) {
                const double zs = market.supply_axis[i] >= 0 ? srow[market.supply_axis[i]] : 1.0;
                const double obtained = q[i] * zs * market.yield_rate[i];
                if (used[i] > 0.0) scale = std::min(scale, obtained / used[i]);
            }
            for (auto& u : usage) u *= 0.999 * std::max(0.0, scale);

            const ProfitBreakdown b = evaluate_compiled(market, q, o, usage, set, k);
            const double recon = b.tc_ben + b.tc_salv - b.tc_prod - b.tc_map - b.tc_short;
            const double scale_ref =
                std::max({1.0, std::fabs(b.tc_ben), std::fabs(b.tc_prod), std::fabs(b.tc_short)});
            const double err = std::fabs(b.profit - recon) / scale_ref;
            worst = std::max(worst, err);
            if (err > 1e-9) pass = false;

            // Independent recomputation of each component from the vectors.
            double ben = 0.0, sh = 0.0, salv = 0.0, prod = 0.0, mapc = 0.0;
            for (std::size_t d = 0; d < market.num_demanded(); ++d) {
                ben += market.unit_benefit[d] * b.sold[d];
                sh += market.unit_shortage[d] * (b.demanded[d] - b.sold[d]);
                salv += market.salvage[d] * (b.built[d] - b.sold[d]);
            }
            for (std::size_t i = 0; i < market.num_produced(); ++i) {
                prod += b.received[i] * market.unit_cost[i];
                if (o[i]) prod += market.nre[i];
            }
            for (std::size_t j = 0; j < usage.size(); ++j)
                mapc += usage[j] * market.mapping_cost[j];
            if (std::fabs(ben - b.tc_ben) / scale_ref > 1e-9 ||
                std::fabs(sh - b.tc_short) / scale_ref > 1e-9 ||
                std::fabs(salv - b.tc_salv) / scale_ref > 1e-9 ||
                std::fabs(prod - b.tc_prod) / scale_ref > 1e-9 ||
                std::fabs(mapc - b.tc_map) / scale_ref > 1e-9)
                pass = false;
        }
    }
    result(1, "accounting identity", pass,
           std::to_string(done) + " triples, worst rel err " + fmt_double(worst));
}

void criterion2_lp_oracle() {
    begin();
    bool pass = true;
    int checked = 0, ties = 0;
    double worst_gap = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const bool adaptation_only = trial % 2 == 0;
        const MarketSpec spec = random_market(3, 4, adaptation_only, true);
        std::map<std::string, double> obtained, demanded;
        for (const auto& g : spec.produced)
            obtained[g.id] = static_cast<double>(g_gen() % 21);
        for (const auto& d : spec.demanded)
            demanded[d.id] = static_cast<double>(g_gen() % 21);
        const auto lp = recourse::optimal_usage_stage3(spec, obtained, demanded);
        const auto oracle = recourse::brute_force_usage(spec, obtained, demanded, 1.0);
        ++checked;
        if (lp.value < oracle.value - 1e-6) pass = false;
        if (adaptation_only) {
            // Unit inputs and integer data: the LP has an integral optimum.
            if (std::fabs(lp.value - oracle.value) > 1e-6) pass = false;
            ++ties;
        }
        worst_gap = std::max(worst_gap, oracle.value - lp.value);
    }
    result(2, "LP vs integer oracle", pass,
           std::to_string(checked) + " instances, " + std::to_string(ties) +
               " exact ties required, worst oracle-over-LP " + fmt_double(worst_gap));
}

void criterion3_staging_monotonicity() {
    begin();
    bool pass = true;
    std::string note;
    for (int trial = 0; trial < 20; ++trial) {
        MarketSpec spec = random_market(3, 4, trial % 2 == 0, false);
        for (auto& [sid, dist] : spec.uncertainty.supply)
            dist = Distribution::normal(uniform(0.1, 0.4));
        for (auto& [did, dist] : spec.uncertainty.demand)
            dist = Distribution::normal(uniform(0.1, 0.4));
        const ScenarioSet set =
            sample(spec.uncertainty, SampleStrategy::stratified(4), 1000 + trial);
        const recourse::StagedEvaluator eval(spec, set, 1);
        const CompiledMarket& market = eval.market();

        std::vector<double> q(market.num_produced());
        for (std::size_t i = 0; i < q.size(); ++i) q[i] = uniform(5.0, 40.0);

        const double stage3 = eval.evaluate(q, RecourseStage::MappingAfterSupplyAndDemand);
        const double stage2 = eval.evaluate(q, RecourseStage::MappingAfterSupply);

        // Fixed usage: stage-2 optimum at the mean supply realization, then
        // rationed pro-rata wherever a scenario obtains less than assumed.
        std::vector<double> mean_supply(set.supplier_ids.size(), 0.0);
        for (std::size_t k = 0; k < set.size(); ++k)
            for (std::size_t s = 0; s < mean_supply.size(); ++s)
                mean_supply[s] += set.weights[k] * set.supply_row(k)[s];
        std::vector<double> mean_obtained(market.num_produced());
        for (std::size_t i = 0; i < market.num_produced(); ++i) {
            const double zs =
                market.supply_axis[i] >= 0 ? mean_supply[market.supply_axis[i]] : 1.0;
            mean_obtained[i] = q[i] * zs * market.yield_rate[i];
        }
        recourse::DemandAtoms atoms;
        atoms.atoms.resize(market.num_demanded());
        std::vector<double> dem(market.num_demanded());
        for (std::size_t k = 0; k < set.size(); ++k) {
            market.demand_quantities(set, k, dem);
            for (std::size_t d = 0; d < dem.size(); ++d)
                atoms.atoms[d].push_back({dem[d], set.weights[k]});
        }
        lp::LpWorkspace ws;
        const auto fixed_sol = recourse::optimal_usage_stage2(market, mean_obtained, atoms, ws);

        std::vector<std::vector<double>> usage(set.size());
        std::vector<double> used(market.num_produced());
        for (std::size_t k = 0; k < set.size(); ++k) {
            std::fill(used.begin(), used.end(), 0.0);
            for (std::size_t j = 0; j < fixed_sol.usage.size(); ++j)
                for (const auto& use : market.mapping_inputs[j])
                    used[use.good] += fixed_sol.usage[j] * use.qty;
            double ration = 1.0;
            const double* srow = set.supply_row(k);
            for (std::size_t i = 0; i < market.num_produced(); ++i) {
                const double zs = market.supply_axis[i] >= 0 ? srow[market.supply_axis[i]] : 1.0;
                const double obtained = q[i] * zs * market.yield_rate[i];
                if (used[i] > obtained) ration = std::min(ration, obtained / used[i]);
            }
            usage[k] = fixed_sol.usage;
            for (auto& u : usage[k]) u *= ration;
        }
        const double fixed = eval.evaluate_fixed(q, usage);

        const double tol = 0.005 * std::max({1.0, std::fabs(stage3), std::fabs(stage2)});
        if (stage3 < stage2 - tol || stage2 < fixed - tol) {
            pass = false;
            note = " violating trial " + std::to_string(trial);
        }
    }
    result(3, "staging monotonicity", pass, "20 random specs, gaps >= -0.5%" + note);
}

void criterion4_zero_uncertainty() {
    begin();
    const chipcost::CostParams params;
    OptimizerConfig config;
    config.threads = hw_threads();
    config.seed = 2;

    const MarketSpec base = build_baseline({16, 8, 4}, params);
    const ScenarioSet zero = sample(base.uncertainty, SampleStrategy::exhaustive(), 1);
    const OptimizationResult base_res = optimize(base, zero, config);
    bool q_ok = true;
    for (const auto& g : base.produced) {
        const double expected = params.base_demand / g.yield_rate;
        if (std::fabs(base_res.policy.order_qty.at(g.id) - expected) > 0.001 * expected)
            q_ok = false;
    }

    const double gamma16 =
        chipcost::interposer_cost(chipcost::die_for_cores(16, params).area_mm2, params);
    const MarketSpec comp = add_composition(base, gamma16);
    const ScenarioSet zero_c = sample(comp.uncertainty, SampleStrategy::exhaustive(), 1);
    const OptimizationResult comp_res = optimize(comp, zero_c, config);
    const bool only4 = comp_res.policy.order_qty.at("16c") <= kOrderEps &&
                       comp_res.policy.order_qty.at("8c") <= kOrderEps &&
                       comp_res.policy.order_qty.at("4c") > 0.0;
    const bool gain = comp_res.expected_profit >= 1.10 * base_res.expected_profit &&
                      base_res.expected_profit > 0.0;
    result(4, "zero-uncertainty optimum", q_ok && only4 && gain,
           "q=b/y " + std::string(q_ok ? "ok" : "OFF") + ", 4c-only " +
               (only4 ? "ok" : "OFF") + ", comp gain " +
               fmt_double(std::round(
                   1000.0 * (comp_res.expected_profit / base_res.expected_profit - 1.0)) /
                          10.0) +
               "% (need >= 10)");
}

void criterion5_adaptation_null() {
    begin();
    auto plan =
        base_plan("adapt_supply", experiments::SweepAxis::SupplySigma, {0.12, 0.24, 0.36});
    plan.interventions = {experiments::Intervention::Adaptation};
    const experiments::SweepResult res = experiments::run(plan);
    bool pass = true;
    std::string detail = "lambda:";
    for (const auto& p : res.points) {
        if (p.failed || !p.lambda) {
            pass = false;
            detail += " err";
            continue;
        }
        detail += " " + fmt_double(std::round(*p.lambda * 100.0) / 100.0);
        if (std::fabs(*p.lambda) > 2.0) pass = false;
    }
    result(5, "adaptation supply-only null", pass, detail + " (need within +/-2)");
}

void criterion6_adaptation_demand() {
    begin();
    auto plan = base_plan("adapt_demand", experiments::SweepAxis::DemandSigma, {0.36});
    plan.interventions = {experiments::Intervention::Adaptation};
    const experiments::SweepResult res = experiments::run(plan);
    bool pass = !res.points[0].failed && res.points[0].lambda.has_value();
    double lam = 0.0;
    if (pass) {
        lam = *res.points[0].lambda;
        pass = lam >= 10.0 && lam <= 35.0;
    }
    result(6, "adaptation demand benefit", pass,
           "lambda " + fmt_double(std::round(lam * 100.0) / 100.0) + " (need in [10,35])");
}

void criterion7_dispersion() {
    begin();
    // Unique suppliers: matched per-axis stratification so the baseline and
    // dispersed means are comparable cell for cell.
    auto unique_plan = base_plan("disp_unique", experiments::SweepAxis::SupplySigma, {0.36});
    unique_plan.interventions = {experiments::Intervention::DispersionUnique};
    unique_plan.n_supply_cells = 12;
    unique_plan.n_demand_cells = 1;
    auto unique_base = base_plan("disp_unique_base", experiments::SweepAxis::SupplySigma, {0.36});
    unique_base.n_supply_cells = 12;
    unique_base.n_demand_cells = 1;
    const experiments::SweepResult unique = experiments::run(unique_plan);
    const experiments::SweepResult ubase = experiments::run(unique_base);

    bool pass = !unique.points[0].failed && !ubase.points[0].failed;
    double mean_diff = 0.0, std_red = 0.0;
    if (pass) {
        mean_diff = 100.0 * (unique.points[0].report.mean - ubase.points[0].report.mean) /
                    std::fabs(ubase.points[0].report.mean);
        std_red =
            100.0 * (1.0 - unique.points[0].report.stddev / ubase.points[0].report.stddev);
        pass = std::fabs(mean_diff) <= 1.0 && std_red >= 20.0;
    }

    // Two suppliers per good: lambda against the internal same-axis baseline.
    auto two_plan = base_plan("disp_two", experiments::SweepAxis::SupplySigma, {0.36});
    two_plan.interventions = {experiments::Intervention::DispersionTwo};
    two_plan.nre_share = 1.0;
    const experiments::SweepResult two = experiments::run(two_plan);
    double lam = 0.0;
    bool two_ok = !two.points[0].failed && two.points[0].lambda.has_value();
    if (two_ok) {
        lam = *two.points[0].lambda;
        two_ok = lam >= 30.0 && lam <= 60.0;
    }
    result(7, "dispersion", pass && two_ok,
           "unique: mean diff " + fmt_double(std::round(mean_diff * 100.0) / 100.0) +
               "% (|.|<=1), std red " + fmt_double(std::round(std_red * 10.0) / 10.0) +
               "% (>=20); two-supplier lambda " + fmt_double(std::round(lam * 10.0) / 10.0) +
               " (in [30,60])");
}

void criterion8_jit_dominance() {
    begin();
    auto stage2 = base_plan("comp_stage2", experiments::SweepAxis::DemandSigma, {0.36});
    stage2.interventions = {experiments::Intervention::Composition};
    auto jit = base_plan("comp_jit", experiments::SweepAxis::DemandSigma, {0.36});
    jit.interventions = {experiments::Intervention::Composition,
                         experiments::Intervention::JustInTime};
    const experiments::SweepResult r2 = experiments::run(stage2);
    const experiments::SweepResult r3 = experiments::run(jit);
    bool pass = !r2.points[0].failed && !r3.points[0].failed &&
                r2.points[0].lambda_yield_norm.has_value() &&
                r3.points[0].lambda_yield_norm.has_value();
    double l2 = 0.0, l3 = 0.0;
    if (pass) {
        l2 = *r2.points[0].lambda_yield_norm;
        l3 = *r3.points[0].lambda_yield_norm;
        pass = l3 - l2 >= 10.0;
    }
    result(8, "just-in-time composition", pass,
           "yield-normalized lambda JIT " + fmt_double(std::round(l3 * 10.0) / 10.0) +
               " vs stage-2 " + fmt_double(std::round(l2 * 10.0) / 10.0) + " (gap >= 10)");
}

void criterion9_baseline_fragility() {
    begin();
    struct Case {
        experiments::SweepAxis axis;
        double min_drop;
        const char* tag;
    };
    const Case cases[] = {{experiments::SweepAxis::BothSigma, 75.0, "s+d"},
                          {experiments::SweepAxis::DemandSigma, 40.0, "d"},
                          {experiments::SweepAxis::SupplySigma, 45.0, "s"}};
    bool pass = true;
    std::string detail;
    for (const Case& c : cases) {
        const auto plan = base_plan("fragility", c.axis, {0.36});
        const experiments::SweepResult res = experiments::run(plan);
        if (res.points[0].failed) {
            pass = false;
            detail += std::string(" ") + c.tag + ":err";
            continue;
        }
        const double drop =
            100.0 * (1.0 - res.points[0].report.mean / res.points[0].zero_uncertainty_mean);
        detail += std::string(" ") + c.tag + ":" + fmt_double(std::round(drop * 10.0) / 10.0) +
                  "%(>=" + fmt_double(c.min_drop) + ")";
        if (drop < c.min_drop) pass = false;
    }
    result(9, "baseline fragility", pass, "drops" + detail);
}

void criterion10_cost_calibration() {
    begin();
    const chipcost::CostParams params;
    const double ratio = chipcost::composition_validation(params);
    const double u16 = chipcost::good_economics(16, params).unit_cost;
    const double u8 = chipcost::good_economics(8, params).unit_cost;
    const double u4 = chipcost::good_economics(4, params).unit_cost;
    const bool pass = std::fabs(ratio - 1.71) <= 0.05 && std::fabs(u16 - 0.12) <= 0.15 * 0.12 &&
                      std::fabs(u8 - 0.05) <= 0.15 * 0.05 && std::fabs(u4 - 0.024) <= 0.15 * 0.024;
    result(10, "cost-model calibration", pass,
           "ratio " + fmt_double(ratio) + " (1.71+/-0.05), unit costs " + fmt_double(u16) + "/" +
               fmt_double(u8) + "/" + fmt_double(u4) + " ({0.12,0.05,0.024} +/-15%)");
}

void criterion11_closed_form() {
    begin();
    // Break-even flip within one grid step.
    closed_form::SubstitutionScenario s;
    s.r = 8.0;
    s.t = 0.0;
    s.c1 = 1.0;
    s.c2 = 2.0;
    s.n1 = 100.0;
    s.n2 = 40.0;
    const double breakeven = closed_form::break_even_demand(s.n1, s.n2, s.c1, s.c2);
    OptimizerConfig config;
    config.seed = 4;
    const double step = 2.0;
    double flip = -1.0;
    bool grid_ok = true;
    for (double zd = 40.0; zd <= 80.0; zd += step) {
        s.zd = zd;
        const MarketSpec spec = closed_form::substitution_market(s);
        const ScenarioSet set = sample(spec.uncertainty, SampleStrategy::exhaustive(), 1);
        const OptimizationResult res = optimize(spec, set, config);
        const bool substitute = res.policy.order_qty.at("g2") > res.policy.order_qty.at("g1");
        if (substitute != closed_form::prefer_substitute(s) && std::fabs(zd - breakeven) > step)
            grid_ok = false;
        if (!substitute && flip < 0.0) flip = zd;
    }
    const bool flip_ok = std::fabs(flip - breakeven) <= step;

    // Programmability threshold by exhaustive enumeration for k <= 12.
    closed_form::ProgrammabilityScenario ps;
    ps.m = 100.0;
    ps.p = 0.5;
    ps.margin = 1.0;
    ps.salvage = 0.0;
    ps.nre_asic = 60.0;
    ps.nre_prog = 300.0;
    const double threshold = ps.nre_prog / (ps.p * ps.m * ps.margin);
    bool prog_ok = true, went_positive = false;
    for (int k = 1; k <= 12; ++k) {
        ps.k = k;
        if (closed_form::asic_expected_profit(ps, ps.m) != 0.0) prog_ok = false;
        double best_enum = 0.0;
        for (int units = 1; units <= k; ++units)
            best_enum = std::max(best_enum,
                                 closed_form::programmable_profit_enumerated(ps, units * ps.m));
        if (best_enum > 0.0) {
            went_positive = true;
            if (static_cast<double>(k) <= threshold) prog_ok = false;
        }
    }
    result(11, "closed-form oracles", grid_ok && flip_ok && prog_ok && went_positive,
           "flip at " + fmt_double(flip) + " vs analytic " + fmt_double(breakeven) +
               ", programmability threshold " + fmt_double(threshold));
}

void criterion12_determinism() {
    begin();
    auto plan = base_plan("determinism", experiments::SweepAxis::BothSigma, {0.24});
    plan.scenario_budget = 256;
    bool pass = true;
    std::string csv1, csv4;
    {
        auto p = plan;
        p.optimizer.threads = 1;
        const auto r1 = experiments::run(p);
        const auto r2 = experiments::run(p);
        csv1 = experiments::sweep_csv(r1);
        if (csv1 != experiments::sweep_csv(r2)) pass = false;
        if (experiments::policy_shares_csv(r1) != experiments::policy_shares_csv(r2))
            pass = false;
    }
    {
        auto p = plan;
        p.optimizer.threads = 4;
        const auto r4 = experiments::run(p);
        csv4 = experiments::sweep_csv(r4);
    }
    if (csv1 != csv4) pass = false;
    result(12, "determinism across threads", pass,
           std::string("CSV bytes identical at threads {1,4}: ") + (pass ? "yes" : "NO"));
}

}  // namespace

int main() {
    std::printf("chainforge acceptance suite (threads: %d)\n", hw_threads());
    criterion1_accounting_identity();
    criterion2_lp_oracle();
    criterion3_staging_monotonicity();
    criterion4_zero_uncertainty();
    criterion5_adaptation_null();
    criterion6_adaptation_demand();
    criterion7_dispersion();
    criterion8_jit_dominance();
    criterion9_baseline_fragility();
    criterion10_cost_calibration();
    criterion11_closed_form();
    criterion12_determinism();
    std::printf("%s: %d criterion(s) failed\n", g_failures == 0 ? "SUCCESS" : "FAILURE",
                g_failures);
    return g_failures == 0 ? 0 : 1;
}
