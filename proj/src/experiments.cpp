#include "chainforge/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "chainforge/format.hpp"
#include "chainforge/rng.hpp"

namespace chainforge::experiments {

const char* axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::SupplySigma: return "supply_sigma";
        case SweepAxis::DemandSigma: return "demand_sigma";
        case SweepAxis::BothSigma: return "both_sigma";
        case SweepAxis::ConstraintFactor: return "constraint_factor";
        case SweepAxis::ShockFactor: return "shock_factor";
        case SweepAxis::SalvageFactor: return "salvage_factor";
        case SweepAxis::InterposerConstraint: return "interposer_constraint";
        case SweepAxis::NreReuse: return "nre_reuse";
        case SweepAxis::DemandPcc: return "demand_pcc";
        case SweepAxis::MultiIsaCostScale: return "multi_isa_cost_scale";
    }
    return "unknown";
}

const char* intervention_name(Intervention iv) {
    switch (iv) {
        case Intervention::Composition: return "composition";
        case Intervention::Adaptation: return "adaptation";
        case Intervention::DispersionUnique: return "dispersion_unique";
        case Intervention::DispersionTwo: return "dispersion_two";
        case Intervention::JustInTime: return "just_in_time";
        case Intervention::MarketMechanism: return "market_mechanism";
    }
    return "unknown";
}

namespace {

MarketSpec multi_isa_base(const ExperimentPlan& plan, double cost_scale) {
    // Two single-ISA microcontrollers plus a consolidated design that can be
    // sold into either demand; overhead scales its unit cost and NRE.
    const auto econ = chipcost::good_economics(8, plan.cost);
    MarketSpec spec;
    for (const char* id : {"isa1", "isa2"}) {
        ProducedGood p;
        p.id = id;
        p.unit_cost = econ.unit_cost;
        p.nre = econ.nre;
        p.yield_rate = econ.yield;
        p.supplier_id = "foundry";
        spec.produced.push_back(p);

        DemandedGood d;
        d.id = id;
        d.base_demand = plan.cost.base_demand;
        d.unit_benefit = econ.unit_benefit;
        d.unit_shortage_cost = econ.unit_benefit;
        spec.demanded.push_back(d);

        Mapping m;
        m.id = std::string(id) + "->" + id;
        m.inputs[id] = 1.0;
        m.output = id;
        spec.mappings.push_back(m);

        spec.uncertainty.demand[id] = Distribution::deterministic(1.0);
    }
    ProducedGood multi;
    multi.id = "multi";
    multi.unit_cost = econ.unit_cost * (1.0 + cost_scale);
    multi.nre = econ.nre * (1.0 + cost_scale);
    multi.yield_rate = econ.yield;
    multi.supplier_id = "foundry";
    spec.produced.push_back(multi);
    for (const char* id : {"isa1", "isa2"}) {
        Mapping m;
        m.id = std::string("multi->") + id;
        m.inputs["multi"] = 1.0;
        m.output = id;
        spec.mappings.push_back(m);
    }
    spec.uncertainty.supply["foundry"] = Distribution::deterministic(1.0);
    if (plan.multi_isa_pcc != 0.0) {
        CorrelationMatrix corr;
        corr.ids = {"isa1", "isa2"};
        corr.values = {1.0, plan.multi_isa_pcc, plan.multi_isa_pcc, 1.0};
        spec.uncertainty.demand_correlation = corr;
    }
    return spec;
}

Distribution sigma_dist(double sigma) {
    return sigma > 0.0 ? Distribution::normal(sigma) : Distribution::deterministic(1.0);
}

}  // namespace

MarketSpec build_point_spec(const ExperimentPlan& plan, double value, bool with_interventions) {
    const bool iv = with_interventions;
    auto has = [&](Intervention i) { return iv && plan.interventions.count(i) > 0; };

    MarketSpec spec;
    if (plan.axis == SweepAxis::MultiIsaCostScale) {
        spec = multi_isa_base(plan, iv ? value : 0.0);
    } else if (plan.explicit_base) {
        spec = *plan.explicit_base;
    } else {
        spec = build_baseline(plan.core_counts, plan.cost);
    }

    if (has(Intervention::Composition) || plan.axis == SweepAxis::InterposerConstraint) {
        const double area16 = chipcost::die_for_cores(16, plan.cost).area_mm2;
        const double gamma16 = chipcost::interposer_cost(area16, plan.cost);
        spec = add_composition(std::move(spec), gamma16,
                               plan.axis == SweepAxis::InterposerConstraint);
    }
    if (has(Intervention::Adaptation)) spec = add_adaptation(std::move(spec));
    if (has(Intervention::DispersionUnique))
        spec = add_dispersion(std::move(spec), DispersionMode::UniquePerGood, plan.nre_share);
    if (has(Intervention::DispersionTwo)) {
        const double share = plan.axis == SweepAxis::NreReuse ? value : plan.nre_share;
        spec = add_dispersion(std::move(spec), DispersionMode::TwoSuppliersAll, share);
    }
    if (has(Intervention::MarketMechanism)) {
        for (auto& d : spec.demanded) {
            DemandCurve curve;
            curve.base_price = d.unit_benefit;
            // Elasticity chosen so the revenue-optimal point sits at base
            // demand sold at base price, matching the flat-price model.
            curve.elasticity = d.base_demand > 0.0 ? -d.unit_benefit / d.base_demand : 0.0;
            d.demand_curve = curve;
        }
    }

    // Mapping stage: composition packs before demand is known unless
    // just-in-time packaging (or late-stage adaptation) is in play.
    if (has(Intervention::Composition) && !has(Intervention::JustInTime) &&
        !has(Intervention::Adaptation))
        spec.recourse_stage = RecourseStage::MappingAfterSupply;
    else
        spec.recourse_stage = RecourseStage::MappingAfterSupplyAndDemand;

    // Uncertainty for this point.
    double supply_sigma = plan.base_supply_sigma;
    double demand_sigma = plan.base_demand_sigma;
    if (plan.axis == SweepAxis::SupplySigma) supply_sigma = value;
    if (plan.axis == SweepAxis::DemandSigma) demand_sigma = value;
    if (plan.axis == SweepAxis::BothSigma) supply_sigma = demand_sigma = value;

    for (auto& [sid, dist] : spec.uncertainty.supply) dist = sigma_dist(supply_sigma);
    for (auto& [did, dist] : spec.uncertainty.demand) dist = sigma_dist(demand_sigma);
    if (plan.axis == SweepAxis::ShockFactor) {
        if (plan.shock_supply)
            for (auto& [sid, dist] : spec.uncertainty.supply) dist = Distribution::shock(value);
        if (plan.shock_demand)
            for (auto& [did, dist] : spec.uncertainty.demand) dist = Distribution::shock(value);
    }
    if (plan.axis == SweepAxis::DemandPcc && value != 0.0 && spec.demanded.size() > 1) {
        CorrelationMatrix corr;
        for (const auto& d : spec.demanded) corr.ids.push_back(d.id);
        const std::size_t n = corr.ids.size();
        corr.values.assign(n * n, value);
        for (std::size_t i = 0; i < n; ++i) corr.values[i * n + i] = 1.0;
        spec.uncertainty.demand_correlation = corr;
    }
    if (plan.axis == SweepAxis::SalvageFactor) {
        for (auto& d : spec.demanded) {
            const ProducedGood* p = spec.find_produced(d.id);
            if (p) d.salvage_value = value * p->unit_cost;
        }
    }
    return spec;
}

SampleStrategy resolve_strategy(const ExperimentPlan& plan, const UncertaintyConfig& config) {
    if (plan.strategy == SampleStrategyKind::MonteCarlo)
        return SampleStrategy::monte_carlo(plan.scenario_budget);
    if (plan.strategy == SampleStrategyKind::Exhaustive) return SampleStrategy::exhaustive();

    if (plan.n_supply_cells > 0 || plan.n_demand_cells > 0)
        return SampleStrategy::stratified(std::max(1, plan.n_supply_cells),
                                          std::max(1, plan.n_demand_cells));

    // Split the scenario budget across the stochastic axes.
    int stochastic = 0;
    auto degenerate = [](const Distribution& d) {
        return d.finite_support() && d.atoms().size() == 1;
    };
    for (const auto& [id, d] : config.supply)
        if (!degenerate(d)) ++stochastic;
    for (const auto& [id, d] : config.demand)
        if (!degenerate(d)) ++stochastic;
    if (stochastic == 0) return SampleStrategy::exhaustive();
    const int per_axis = std::max(
        2, static_cast<int>(std::lround(std::pow(static_cast<double>(plan.scenario_budget),
                                                 1.0 / static_cast<double>(stochastic)))));
    return SampleStrategy::stratified(per_axis);
}

namespace {

struct PointRun {
    OptimizationResult result;
    ScenarioSet scenarios;
};

PointRun run_point_spec(const ExperimentPlan& plan, const MarketSpec& spec, double value,
                        std::uint64_t point_seed) {
    PointRun out;
    out.scenarios = sample(spec.uncertainty, resolve_strategy(plan, spec.uncertainty), point_seed);
    OptimizerConfig config = plan.optimizer;
    config.seed = rng::derive_seed(plan.seed, "optimizer", point_seed);

    if (plan.axis == SweepAxis::ConstraintFactor || plan.axis == SweepAxis::InterposerConstraint) {
        std::vector<std::string> goods = plan.constraint_goods;
        if (plan.axis == SweepAxis::InterposerConstraint) goods = {kInterposerGoodId};
        if (goods.empty())
            for (const auto& g : spec.produced) goods.push_back(g.id);
        // Goods the cap cannot apply to (not in this spec) are dropped.
        std::erase_if(goods, [&](const std::string& id) { return !spec.find_produced(id); });
        out.result = constrained_rerun(spec, out.scenarios, config, value, goods);
    } else {
        out.result = optimize(spec, out.scenarios, config);
    }
    return out;
}

double zero_uncertainty_mean(const ExperimentPlan& plan, const MarketSpec& spec_at_point) {
    MarketSpec zero = spec_at_point;
    for (auto& [sid, dist] : zero.uncertainty.supply) dist = Distribution::deterministic(1.0);
    for (auto& [did, dist] : zero.uncertainty.demand) dist = Distribution::deterministic(1.0);
    zero.uncertainty.demand_correlation.reset();
    const ScenarioSet scenarios =
        sample(zero.uncertainty, SampleStrategy::exhaustive(), plan.seed);
    OptimizerConfig config = plan.optimizer;
    config.seed = rng::derive_seed(plan.seed, "zero-uncertainty", 0);
    return optimize(zero, scenarios, config).expected_profit;
}

}  // namespace

SweepResult run(const ExperimentPlan& plan) {
    if (!std::is_sorted(plan.values.begin(), plan.values.end()))
        throw std::invalid_argument("run: sweep values must be sorted ascending");
    if (plan.interventions.count(Intervention::DispersionUnique) &&
        plan.interventions.count(Intervention::DispersionTwo))
        throw std::invalid_argument("run: DispersionTwo excludes DispersionUnique");

    SweepResult out;
    out.name = plan.name;
    out.axis = plan.axis;
    out.seed = plan.seed;
    out.rng_name = rng::kGeneratorName;
    out.threads = plan.optimizer.threads;
    {
        std::ostringstream desc;
        switch (plan.strategy) {
            case SampleStrategyKind::MonteCarlo: desc << "monte-carlo(" << plan.scenario_budget << ")"; break;
            case SampleStrategyKind::StratifiedEquiProbable:
                desc << "stratified(budget " << plan.scenario_budget << ")";
                break;
            case SampleStrategyKind::Exhaustive: desc << "exhaustive"; break;
        }
        out.strategy_desc = desc.str();
    }

    const bool is_baseline_plan = plan.interventions.empty() &&
                                  plan.axis != SweepAxis::ConstraintFactor &&
                                  plan.axis != SweepAxis::InterposerConstraint;

    for (std::size_t i = 0; i < plan.values.size(); ++i) {
        SweepPointResult point;
        point.value = plan.values[i];
        const auto start = std::chrono::steady_clock::now();
        try {
            // Common random numbers: the seed depends on the point, not the
            // intervention set, so baselines pair with interventions.
            const std::uint64_t point_seed = rng::derive_seed(plan.seed, "point", i);

            const MarketSpec spec = build_point_spec(plan, point.value, true);
            PointRun main = run_point_spec(plan, spec, point.value, point_seed);
            point.incumbent_trace = main.result.incumbent_trace;
            point.order_qty = main.result.policy.order_qty;
            double total_order = 0.0;
            for (const auto& [id, q] : point.order_qty) total_order += q;
            for (const auto& [id, q] : point.order_qty)
                point.order_shares[id] = total_order > 0.0 ? q / total_order : 0.0;

            point.zero_uncertainty_mean = zero_uncertainty_mean(plan, spec);

            // No-intervention baseline at the same axis point.
            double base_mean, base_zero;
            if (is_baseline_plan) {
                base_mean = main.result.expected_profit;
                base_zero = point.zero_uncertainty_mean;
            } else {
                ExperimentPlan base_plan = plan;
                base_plan.interventions.clear();
                const MarketSpec base_spec = build_point_spec(base_plan, point.value, false);
                PointRun base = run_point_spec(base_plan, base_spec, point.value, point_seed);
                base_mean = base.result.expected_profit;
                base_zero = zero_uncertainty_mean(base_plan, base_spec);
            }
            point.baseline_mean = base_mean;
            point.baseline_zero_mean = base_zero;

            const BaselineRef ref{base_mean, base_zero};
            point.report = make_report(scenario_profits(spec, main.result.policy, main.scenarios),
                                       main.scenarios.weights, ref);
            point.report.order_shares = point.order_shares;
            point.lambda = point.report.lambda;
            point.lambda_undefined = point.report.lambda_undefined;
            const double yield_gain = point.zero_uncertainty_mean - base_zero;
            point.lambda_yield_norm =
                lambda_metric(point.report.mean - yield_gain, ref);
        } catch (const std::exception& e) {
            point.failed = true;
            point.error = e.what();
        }
        point.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.points.push_back(std::move(point));
    }
    return out;
}

std::vector<std::optional<double>> lambda_table(const SweepResult& intervention,
                                                const SweepResult& baseline) {
    if (intervention.axis != baseline.axis ||
        intervention.points.size() != baseline.points.size())
        throw std::invalid_argument("lambda_table: sweep axes do not match");
    std::vector<std::optional<double>> out;
    for (std::size_t i = 0; i < intervention.points.size(); ++i) {
        if (intervention.points[i].value != baseline.points[i].value)
            throw std::invalid_argument("lambda_table: sweep values do not match");
        if (intervention.points[i].failed || baseline.points[i].failed) {
            out.push_back(std::nullopt);
            continue;
        }
        const BaselineRef ref{baseline.points[i].report.mean,
                              baseline.points[i].zero_uncertainty_mean};
        out.push_back(lambda_metric(intervention.points[i].report.mean, ref));
    }
    return out;
}

std::string sweep_csv(const SweepResult& result) {
    // Stable column set: union of produced goods over points, first-seen order.
    std::vector<std::string> goods;
    for (const auto& p : result.points)
        for (const auto& [id, q] : p.order_qty)
            if (std::find(goods.begin(), goods.end(), id) == goods.end()) goods.push_back(id);

    std::ostringstream out;
    out << "experiment,parameter,mean,std,min,q1,median,q3,max,n_outliers,lambda";
    for (const auto& g : goods) out << ",order_share_" << g;
    out << "\n";
    for (const auto& p : result.points) {
        if (p.failed) {
            out << result.name << ',' << fmt_double(p.value) << ",error: " << p.error << "\n";
            continue;
        }
        out << result.name << ',' << fmt_double(p.value) << ',' << fmt_double(p.report.mean) << ','
            << fmt_double(p.report.stddev) << ',' << fmt_double(p.report.min) << ','
            << fmt_double(p.report.q1) << ',' << fmt_double(p.report.median) << ','
            << fmt_double(p.report.q3) << ',' << fmt_double(p.report.max) << ','
            << p.report.outliers.size() << ','
            << (p.lambda ? fmt_double(*p.lambda) : std::string());
        for (const auto& g : goods) {
            const auto it = p.order_shares.find(g);
            out << ',' << fmt_double(it != p.order_shares.end() ? it->second : 0.0);
        }
        out << "\n";
    }
    return out.str();
}

std::string sweep_json(const SweepResult& result) {
    nlohmann::json j;
    j["experiment"] = result.name;
    j["axis"] = axis_name(result.axis);
    j["seed"] = result.seed;
    j["rng"] = result.rng_name;
    j["strategy"] = result.strategy_desc;
    j["threads"] = result.threads;
    j["points"] = nlohmann::json::array();
    for (const auto& p : result.points) {
        nlohmann::json pj;
        pj["value"] = p.value;
        if (p.failed) {
            pj["error"] = p.error;
            j["points"].push_back(pj);
            continue;
        }
        pj["mean"] = p.report.mean;
        pj["std"] = p.report.stddev;
        pj["min"] = p.report.min;
        pj["q1"] = p.report.q1;
        pj["median"] = p.report.median;
        pj["q3"] = p.report.q3;
        pj["max"] = p.report.max;
        pj["n_outliers"] = p.report.outliers.size();
        pj["zero_uncertainty_mean"] = p.zero_uncertainty_mean;
        pj["baseline_mean"] = p.baseline_mean;
        pj["baseline_zero_mean"] = p.baseline_zero_mean;
        if (p.lambda) pj["lambda"] = *p.lambda;
        pj["lambda_undefined"] = p.lambda_undefined;
        if (p.lambda_yield_norm) pj["lambda_yield_norm"] = *p.lambda_yield_norm;
        pj["order_qty"] = p.order_qty;
        pj["order_shares"] = p.order_shares;
        pj["wall_seconds"] = p.wall_seconds;
        j["points"].push_back(pj);
    }
    return j.dump(2);
}

std::string trace_csv(const SweepResult& result) {
    std::ostringstream out;
    out << "parameter,iteration,incumbent_profit\n";
    for (const auto& p : result.points) {
        if (p.failed) continue;
        for (std::size_t i = 0; i < p.incumbent_trace.size(); ++i)
            out << fmt_double(p.value) << ',' << i << ',' << fmt_double(p.incumbent_trace[i])
                << "\n";
    }
    return out.str();
}

std::string policy_shares_csv(const SweepResult& result) {
    std::vector<std::string> goods;
    for (const auto& p : result.points)
        for (const auto& [id, q] : p.order_qty)
            if (std::find(goods.begin(), goods.end(), id) == goods.end()) goods.push_back(id);
    std::ostringstream out;
    out << "experiment,parameter";
    for (const auto& g : goods) out << ",share_" << g;
    out << "\n";
    for (const auto& p : result.points) {
        if (p.failed) continue;
        out << result.name << ',' << fmt_double(p.value);
        for (const auto& g : goods) {
            const auto it = p.order_shares.find(g);
            out << ',' << fmt_double(it != p.order_shares.end() ? it->second : 0.0);
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace chainforge::experiments
