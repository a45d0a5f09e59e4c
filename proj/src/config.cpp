#include "chainforge/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace chainforge::config {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ConfigError("config error at " + path + ": " + message);
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) fail(path + "." + key, "unknown key");
}

double get_number(const json& obj, const std::string& path, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) fail(path + "." + key, "expected a number");
    return obj[key].get<double>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_boolean()) fail(path + "." + key, "expected a boolean");
    return obj[key].get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string()) fail(path + "." + key, "expected a string");
    return obj[key].get<std::string>();
}

chipcost::CostParams parse_chipcost(const json& obj, const std::string& path,
                                    chipcost::CostParams base) {
    check_keys(obj, path,
               {"wafer_radius_mm", "re_wafer_cost", "nre_design_cost_per_mm2",
                "nre_mask_set_cost", "interposer_cost_per_mm2", "area_per_core_mm2",
                "defect_density_per_mm2", "order", "base_demand", "re_only_unit_cost"});
    base.wafer_radius_mm = get_number(obj, path, "wafer_radius_mm", base.wafer_radius_mm);
    base.re_wafer_cost = get_number(obj, path, "re_wafer_cost", base.re_wafer_cost);
    base.nre_design_cost_per_mm2 =
        get_number(obj, path, "nre_design_cost_per_mm2", base.nre_design_cost_per_mm2);
    base.nre_mask_set_cost = get_number(obj, path, "nre_mask_set_cost", base.nre_mask_set_cost);
    base.interposer_cost_per_mm2 =
        get_number(obj, path, "interposer_cost_per_mm2", base.interposer_cost_per_mm2);
    base.area_per_core_mm2 = get_number(obj, path, "area_per_core_mm2", base.area_per_core_mm2);
    base.defect_density = get_number(obj, path, "defect_density_per_mm2", base.defect_density);
    base.order = get_number(obj, path, "order", base.order);
    base.base_demand = get_number(obj, path, "base_demand", base.base_demand);
    base.re_only_unit_cost = get_bool(obj, path, "re_only_unit_cost", base.re_only_unit_cost);
    return base;
}

OptimizerConfig parse_optimizer(const json& obj, const std::string& path, OptimizerConfig base) {
    check_keys(obj, path,
               {"method", "restarts", "nm_max_iter", "max_evals_per_subset", "anneal"});
    const std::string method = get_string(obj, path, "method", "subset_nelder_mead");
    if (method == "subset_nelder_mead")
        base.method = OptimizerConfig::Method::SubsetNelderMead;
    else if (method == "simulated_annealing")
        base.method = OptimizerConfig::Method::SimulatedAnnealing;
    else
        fail(path + ".method", "expected 'subset_nelder_mead' or 'simulated_annealing'");
    base.restarts = static_cast<int>(get_number(obj, path, "restarts", base.restarts));
    base.nm_max_iter = static_cast<int>(get_number(obj, path, "nm_max_iter", base.nm_max_iter));
    base.max_evals_per_subset =
        static_cast<int>(get_number(obj, path, "max_evals_per_subset", base.max_evals_per_subset));
    if (obj.contains("anneal")) {
        const std::string apath = path + ".anneal";
        check_keys(obj["anneal"], apath, {"t0", "cooling", "steps"});
        base.anneal.t0 = get_number(obj["anneal"], apath, "t0", base.anneal.t0);
        base.anneal.cooling = get_number(obj["anneal"], apath, "cooling", base.anneal.cooling);
        base.anneal.steps =
            static_cast<int>(get_number(obj["anneal"], apath, "steps", base.anneal.steps));
        if (base.anneal.cooling <= 0.0 || base.anneal.cooling >= 1.0)
            fail(apath + ".cooling", "must be in (0,1)");
    }
    if (base.restarts < 0 || base.nm_max_iter <= 0 || base.max_evals_per_subset <= 0 ||
        base.anneal.steps <= 0)
        fail(path, "budgets must be positive");
    return base;
}

Distribution parse_distribution(const json& obj, const std::string& path) {
    check_keys(obj, path, {"kind", "value", "sigma", "prob", "factor", "inner"});
    const std::string kind = get_string(obj, path, "kind", "");
    if (kind == "deterministic")
        return Distribution::deterministic(get_number(obj, path, "value", 1.0));
    if (kind == "normal") return Distribution::normal(get_number(obj, path, "sigma", 0.0));
    if (kind == "shock") return Distribution::shock(get_number(obj, path, "prob", 0.0));
    if (kind == "scaled") {
        if (!obj.contains("inner")) fail(path + ".inner", "scaled needs an inner distribution");
        return Distribution::scaled(parse_distribution(obj["inner"], path + ".inner"),
                                    get_number(obj, path, "factor", 1.0));
    }
    fail(path + ".kind", "expected deterministic|normal|shock|scaled");
}

MarketSpec parse_market(const json& obj, const std::string& path) {
    check_keys(obj, path, {"goods", "demands", "mappings", "constraints", "uncertainty"});
    MarketSpec spec;
    if (!obj.contains("goods") || !obj.contains("demands") || !obj.contains("mappings"))
        fail(path, "explicit market needs goods, demands and mappings");
    for (std::size_t i = 0; i < obj["goods"].size(); ++i) {
        const json& g = obj["goods"][i];
        const std::string gpath = path + ".goods[" + std::to_string(i) + "]";
        check_keys(g, gpath, {"id", "unit_cost", "nre", "yield", "supplier"});
        ProducedGood p;
        p.id = get_string(g, gpath, "id", "");
        if (p.id.empty()) fail(gpath + ".id", "required");
        p.unit_cost = get_number(g, gpath, "unit_cost", 0.0);
        p.nre = get_number(g, gpath, "nre", 0.0);
        p.yield_rate = get_number(g, gpath, "yield", 1.0);
        p.supplier_id = get_string(g, gpath, "supplier", "foundry");
        spec.produced.push_back(std::move(p));
    }
    for (std::size_t i = 0; i < obj["demands"].size(); ++i) {
        const json& g = obj["demands"][i];
        const std::string gpath = path + ".demands[" + std::to_string(i) + "]";
        check_keys(g, gpath,
                   {"id", "base_demand", "unit_benefit", "unit_shortage_cost", "salvage_value",
                    "demand_curve"});
        DemandedGood d;
        d.id = get_string(g, gpath, "id", "");
        if (d.id.empty()) fail(gpath + ".id", "required");
        d.base_demand = get_number(g, gpath, "base_demand", 0.0);
        d.unit_benefit = get_number(g, gpath, "unit_benefit", 0.0);
        d.unit_shortage_cost = get_number(g, gpath, "unit_shortage_cost", 0.0);
        d.salvage_value = get_number(g, gpath, "salvage_value", 0.0);
        if (g.contains("demand_curve")) {
            const std::string cpath = gpath + ".demand_curve";
            check_keys(g["demand_curve"], cpath, {"elasticity", "base_price"});
            DemandCurve curve;
            curve.elasticity = get_number(g["demand_curve"], cpath, "elasticity", 0.0);
            curve.base_price = get_number(g["demand_curve"], cpath, "base_price", 0.0);
            d.demand_curve = curve;
        }
        spec.demanded.push_back(std::move(d));
    }
    for (std::size_t i = 0; i < obj["mappings"].size(); ++i) {
        const json& g = obj["mappings"][i];
        const std::string gpath = path + ".mappings[" + std::to_string(i) + "]";
        check_keys(g, gpath, {"id", "inputs", "output", "cost_per_use"});
        Mapping m;
        m.id = get_string(g, gpath, "id", "");
        m.output = get_string(g, gpath, "output", "");
        m.cost_per_use = get_number(g, gpath, "cost_per_use", 0.0);
        if (!g.contains("inputs") || !g["inputs"].is_object())
            fail(gpath + ".inputs", "expected an object of good -> units");
        for (const auto& [gid, units] : g["inputs"].items()) {
            if (!units.is_number()) fail(gpath + ".inputs." + gid, "expected a number");
            m.inputs[gid] = units.get<double>();
        }
        spec.mappings.push_back(std::move(m));
    }
    if (obj.contains("constraints")) {
        for (std::size_t i = 0; i < obj["constraints"].size(); ++i) {
            const json& g = obj["constraints"][i];
            const std::string gpath = path + ".constraints[" + std::to_string(i) + "]";
            check_keys(g, gpath, {"kind", "good", "cap", "factor", "group"});
            const std::string kind = get_string(g, gpath, "kind", "");
            if (kind == "supply_cap") {
                spec.constraints.push_back(OrderConstraint::supply_cap(
                    get_string(g, gpath, "good", ""), get_number(g, gpath, "cap", 0.0)));
            } else if (kind == "supply_cap_factor") {
                spec.constraints.push_back(OrderConstraint::supply_cap_factor(
                    get_string(g, gpath, "good", ""), get_number(g, gpath, "factor", 1.0)));
            } else if (kind == "order_equality") {
                if (!g.contains("group")) fail(gpath + ".group", "required");
                spec.constraints.push_back(
                    OrderConstraint::order_equality(g["group"].get<std::vector<std::string>>()));
            } else {
                fail(gpath + ".kind", "expected supply_cap|supply_cap_factor|order_equality");
            }
        }
    }
    for (const auto& g : spec.produced)
        if (!spec.uncertainty.supply.count(g.supplier_id))
            spec.uncertainty.supply[g.supplier_id] = Distribution::deterministic(1.0);
    for (const auto& d : spec.demanded)
        spec.uncertainty.demand[d.id] = Distribution::deterministic(1.0);
    if (obj.contains("uncertainty")) {
        const std::string upath = path + ".uncertainty";
        check_keys(obj["uncertainty"], upath, {"supply", "demand"});
        if (obj["uncertainty"].contains("supply"))
            for (const auto& [sid, dist] : obj["uncertainty"]["supply"].items())
                spec.uncertainty.supply[sid] =
                    parse_distribution(dist, upath + ".supply." + sid);
        if (obj["uncertainty"].contains("demand"))
            for (const auto& [did, dist] : obj["uncertainty"]["demand"].items())
                spec.uncertainty.demand[did] =
                    parse_distribution(dist, upath + ".demand." + did);
    }
    return spec;
}

experiments::SweepAxis parse_axis(const std::string& name, const std::string& path) {
    using experiments::SweepAxis;
    for (const SweepAxis axis :
         {SweepAxis::SupplySigma, SweepAxis::DemandSigma, SweepAxis::BothSigma,
          SweepAxis::ConstraintFactor, SweepAxis::ShockFactor, SweepAxis::SalvageFactor,
          SweepAxis::InterposerConstraint, SweepAxis::NreReuse, SweepAxis::DemandPcc,
          SweepAxis::MultiIsaCostScale})
        if (name == experiments::axis_name(axis)) return axis;
    fail(path, "unknown sweep axis '" + name + "'");
}

experiments::Intervention parse_intervention(const std::string& name, const std::string& path) {
    using experiments::Intervention;
    for (const Intervention iv :
         {Intervention::Composition, Intervention::Adaptation, Intervention::DispersionUnique,
          Intervention::DispersionTwo, Intervention::JustInTime, Intervention::MarketMechanism})
        if (name == experiments::intervention_name(iv)) return iv;
    fail(path, "unknown intervention '" + name + "'");
}

}  // namespace

ResolvedConfig parse_config_text(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config error in " + origin + ": " + e.what());
    }
    if (!root.is_object()) throw ConfigError("config error in " + origin + ": not an object");
    check_keys(root, "$", {"seed", "threads", "chipcost", "optimizer", "market", "experiments"});

    ResolvedConfig out;
    out.seed = static_cast<std::uint64_t>(get_number(root, "$", "seed", 1.0));
    out.threads = static_cast<int>(get_number(root, "$", "threads", 0.0));
    if (root.contains("chipcost")) out.cost = parse_chipcost(root["chipcost"], "$.chipcost", out.cost);
    if (root.contains("optimizer"))
        out.optimizer = parse_optimizer(root["optimizer"], "$.optimizer", out.optimizer);
    if (root.contains("market")) out.market = parse_market(root["market"], "$.market");

    if (root.contains("experiments")) {
        if (!root["experiments"].is_array()) fail("$.experiments", "expected an array");
        for (std::size_t i = 0; i < root["experiments"].size(); ++i) {
            const json& e = root["experiments"][i];
            const std::string epath = "$.experiments[" + std::to_string(i) + "]";
            check_keys(e, epath,
                       {"name", "interventions", "axis", "values", "strategy", "scenario_budget",
                        "n_supply_cells", "n_demand_cells", "core_counts", "nre_share",
                        "base_supply_sigma", "base_demand_sigma", "shock_supply", "shock_demand",
                        "constraint_goods", "multi_isa_pcc", "use_explicit_market", "seed"});
            experiments::ExperimentPlan plan;
            plan.name = get_string(e, epath, "name", "");
            if (plan.name.empty()) fail(epath + ".name", "required");
            plan.seed = static_cast<std::uint64_t>(
                get_number(e, epath, "seed", static_cast<double>(out.seed)));
            plan.cost = out.cost;
            plan.optimizer = out.optimizer;
            if (e.contains("interventions"))
                for (const auto& iv : e["interventions"])
                    plan.interventions.insert(
                        parse_intervention(iv.get<std::string>(), epath + ".interventions"));
            plan.axis = parse_axis(get_string(e, epath, "axis", "both_sigma"), epath + ".axis");
            if (e.contains("values")) plan.values = e["values"].get<std::vector<double>>();
            if (plan.values.empty()) fail(epath + ".values", "needs at least one sweep value");
            const std::string strategy = get_string(e, epath, "strategy", "stratified");
            if (strategy == "stratified")
                plan.strategy = SampleStrategyKind::StratifiedEquiProbable;
            else if (strategy == "monte_carlo")
                plan.strategy = SampleStrategyKind::MonteCarlo;
            else if (strategy == "exhaustive")
                plan.strategy = SampleStrategyKind::Exhaustive;
            else
                fail(epath + ".strategy", "expected stratified|monte_carlo|exhaustive");
            plan.scenario_budget =
                static_cast<int>(get_number(e, epath, "scenario_budget", 512.0));
            plan.n_supply_cells = static_cast<int>(get_number(e, epath, "n_supply_cells", 0.0));
            plan.n_demand_cells = static_cast<int>(get_number(e, epath, "n_demand_cells", 0.0));
            if (e.contains("core_counts"))
                plan.core_counts = e["core_counts"].get<std::vector<int>>();
            plan.nre_share = get_number(e, epath, "nre_share", 1.0);
            plan.base_supply_sigma = get_number(e, epath, "base_supply_sigma", 0.0);
            plan.base_demand_sigma = get_number(e, epath, "base_demand_sigma", 0.0);
            plan.shock_supply = get_bool(e, epath, "shock_supply", true);
            plan.shock_demand = get_bool(e, epath, "shock_demand", true);
            if (e.contains("constraint_goods"))
                plan.constraint_goods = e["constraint_goods"].get<std::vector<std::string>>();
            plan.multi_isa_pcc = get_number(e, epath, "multi_isa_pcc", 0.0);
            if (get_bool(e, epath, "use_explicit_market", false)) {
                if (!out.market) fail(epath, "use_explicit_market set but no $.market section");
                plan.explicit_base = out.market;
            }
            out.plans.push_back(std::move(plan));
        }
    }
    return out;
}

ResolvedConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

namespace {

json distribution_to_json(const Distribution& d) {
    switch (d.kind) {
        case Distribution::Kind::Deterministic:
            return {{"kind", "deterministic"}, {"value", d.value}};
        case Distribution::Kind::Normal: return {{"kind", "normal"}, {"sigma", d.sigma}};
        case Distribution::Kind::Shock: return {{"kind", "shock"}, {"prob", d.shock_prob}};
        case Distribution::Kind::Scaled:
            return {{"kind", "scaled"},
                    {"factor", d.scale_factor},
                    {"inner", d.inner ? distribution_to_json(*d.inner) : json()}};
    }
    return {};
}

json market_json(const MarketSpec& spec) {
    json m;
    m["goods"] = json::array();
    for (const auto& g : spec.produced)
        m["goods"].push_back({{"id", g.id},
                              {"unit_cost", g.unit_cost},
                              {"nre", g.nre},
                              {"yield", g.yield_rate},
                              {"supplier", g.supplier_id}});
    m["demands"] = json::array();
    for (const auto& d : spec.demanded) {
        json dj = {{"id", d.id},
                   {"base_demand", d.base_demand},
                   {"unit_benefit", d.unit_benefit},
                   {"unit_shortage_cost", d.unit_shortage_cost},
                   {"salvage_value", d.salvage_value}};
        if (d.demand_curve)
            dj["demand_curve"] = {{"elasticity", d.demand_curve->elasticity},
                                  {"base_price", d.demand_curve->base_price}};
        m["demands"].push_back(dj);
    }
    m["mappings"] = json::array();
    for (const auto& map : spec.mappings)
        m["mappings"].push_back({{"id", map.id},
                                 {"inputs", map.inputs},
                                 {"output", map.output},
                                 {"cost_per_use", map.cost_per_use}});
    if (!spec.constraints.empty()) {
        m["constraints"] = json::array();
        for (const auto& c : spec.constraints) {
            switch (c.kind) {
                case OrderConstraint::Kind::SupplyCap:
                    m["constraints"].push_back(
                        {{"kind", "supply_cap"}, {"good", c.good_id}, {"cap", c.cap}});
                    break;
                case OrderConstraint::Kind::SupplyCapFactor:
                    m["constraints"].push_back({{"kind", "supply_cap_factor"},
                                                {"good", c.good_id},
                                                {"factor", c.factor}});
                    break;
                case OrderConstraint::Kind::OrderEquality:
                    m["constraints"].push_back({{"kind", "order_equality"}, {"group", c.group}});
                    break;
            }
        }
    }
    json supply = json::object(), demand = json::object();
    for (const auto& [sid, dist] : spec.uncertainty.supply)
        supply[sid] = distribution_to_json(dist);
    for (const auto& [did, dist] : spec.uncertainty.demand)
        demand[did] = distribution_to_json(dist);
    m["uncertainty"] = {{"supply", supply}, {"demand", demand}};
    return m;
}

}  // namespace

std::string market_to_json(const MarketSpec& spec) { return market_json(spec).dump(2); }

std::string resolved_config_json(const ResolvedConfig& config) {
    json j;
    j["seed"] = config.seed;
    j["threads"] = config.threads;
    j["chipcost"] = {{"wafer_radius_mm", config.cost.wafer_radius_mm},
                     {"re_wafer_cost", config.cost.re_wafer_cost},
                     {"nre_design_cost_per_mm2", config.cost.nre_design_cost_per_mm2},
                     {"nre_mask_set_cost", config.cost.nre_mask_set_cost},
                     {"interposer_cost_per_mm2", config.cost.interposer_cost_per_mm2},
                     {"area_per_core_mm2", config.cost.area_per_core_mm2},
                     {"defect_density_per_mm2", config.cost.defect_density},
                     {"order", config.cost.order},
                     {"base_demand", config.cost.base_demand},
                     {"re_only_unit_cost", config.cost.re_only_unit_cost}};
    j["optimizer"] = {
        {"method", config.optimizer.method == OptimizerConfig::Method::SubsetNelderMead
                       ? "subset_nelder_mead"
                       : "simulated_annealing"},
        {"restarts", config.optimizer.restarts},
        {"nm_max_iter", config.optimizer.nm_max_iter},
        {"max_evals_per_subset", config.optimizer.max_evals_per_subset},
        {"anneal",
         {{"t0", config.optimizer.anneal.t0},
          {"cooling", config.optimizer.anneal.cooling},
          {"steps", config.optimizer.anneal.steps}}}};
    j["experiments"] = json::array();
    for (const auto& plan : config.plans) {
        json p;
        p["name"] = plan.name;
        p["axis"] = experiments::axis_name(plan.axis);
        p["values"] = plan.values;
        p["seed"] = plan.seed;
        std::vector<std::string> ivs;
        for (const auto iv : plan.interventions) ivs.push_back(experiments::intervention_name(iv));
        p["interventions"] = ivs;
        p["scenario_budget"] = plan.scenario_budget;
        j["experiments"].push_back(p);
    }
    return j.dump(2);
}

const experiments::ExperimentPlan* find_plan(const ResolvedConfig& config,
                                             const std::string& name) {
    for (const auto& plan : config.plans)
        if (plan.name == name) return &plan;
    return nullptr;
}

}  // namespace chainforge::config
