#include "chainforge/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace chainforge {

std::map<std::string, int> derive_ordered(const std::map<std::string, double>& order_qty) {
    std::map<std::string, int> o;
    for (const auto& [id, q] : order_qty) o[id] = q > kOrderEps ? 1 : 0;
    return o;
}

CompiledMarket CompiledMarket::compile(const MarketSpec& spec,
                                       const std::vector<std::string>& supplier_ids,
                                       const std::vector<std::string>& demand_ids) {
    CompiledMarket m;
    std::map<std::string, int> pidx, didx;
    for (std::size_t i = 0; i < spec.produced.size(); ++i) {
        const auto& g = spec.produced[i];
        pidx[g.id] = static_cast<int>(i);
        m.produced_ids.push_back(g.id);
        m.unit_cost.push_back(g.unit_cost);
        m.nre.push_back(g.nre);
        m.yield_rate.push_back(g.yield_rate);
        const auto it = std::find(supplier_ids.begin(), supplier_ids.end(), g.supplier_id);
        m.supply_axis.push_back(it == supplier_ids.end()
                                    ? -1
                                    : static_cast<int>(it - supplier_ids.begin()));
    }
    for (std::size_t d = 0; d < spec.demanded.size(); ++d) {
        const auto& g = spec.demanded[d];
        didx[g.id] = static_cast<int>(d);
        m.demanded_ids.push_back(g.id);
        m.base_demand.push_back(g.base_demand);
        m.unit_benefit.push_back(g.unit_benefit);
        m.unit_shortage.push_back(g.unit_shortage_cost);
        m.salvage.push_back(g.salvage_value);
        const auto it = std::find(demand_ids.begin(), demand_ids.end(), g.id);
        m.demand_axis.push_back(it == demand_ids.end() ? -1
                                                       : static_cast<int>(it - demand_ids.begin()));
        m.has_curve.push_back(g.demand_curve.has_value() ? 1 : 0);
        m.curve_elasticity.push_back(g.demand_curve ? g.demand_curve->elasticity : 0.0);
        m.curve_base_price.push_back(g.demand_curve ? g.demand_curve->base_price : 0.0);
        if (g.demand_curve) m.any_curve = true;
    }
    for (const auto& map : spec.mappings) {
        m.mapping_ids.push_back(map.id);
        std::vector<Use> uses;
        for (const auto& [gid, units] : map.inputs) {
            const auto it = pidx.find(gid);
            if (it == pidx.end())
                throw std::invalid_argument("compile: mapping '" + map.id +
                                            "' references unknown good '" + gid + "'");
            if (units != 0.0) uses.push_back({it->second, units});
        }
        m.mapping_inputs.push_back(std::move(uses));
        const auto ot = didx.find(map.output);
        if (ot == didx.end())
            throw std::invalid_argument("compile: mapping '" + map.id +
                                        "' outputs unknown demand '" + map.output + "'");
        m.mapping_output.push_back(ot->second);
        m.mapping_cost.push_back(map.cost_per_use);
    }
    return m;
}

void CompiledMarket::supply_multipliers(const ScenarioSet& set, std::size_t k,
                                        std::span<double> out) const {
    const double* row = set.supply_row(k);
    for (std::size_t i = 0; i < num_produced(); ++i)
        out[i] = supply_axis[i] >= 0 ? row[supply_axis[i]] : 1.0;
}

void CompiledMarket::demand_quantities(const ScenarioSet& set, std::size_t k,
                                       std::span<double> out) const {
    const double* row = set.demand_row(k);
    for (std::size_t d = 0; d < num_demanded(); ++d) {
        const double z = demand_axis[d] >= 0 ? row[demand_axis[d]] : 1.0;
        out[d] = base_demand[d] * z;
    }
}

ProfitBreakdown evaluate_compiled(const CompiledMarket& market, std::span<const double> order_qty,
                                  std::span<const char> ordered, std::span<const double> usage,
                                  const ScenarioSet& set, std::size_t k) {
    const std::size_t np = market.num_produced();
    const std::size_t nd = market.num_demanded();
    const std::size_t nm = market.num_mappings();
    if (order_qty.size() != np || ordered.size() != np || usage.size() != nm)
        throw std::invalid_argument("evaluate_compiled: dimension mismatch");

    ProfitBreakdown out;
    out.received.resize(np);
    out.obtained.resize(np);
    out.used.assign(np, 0.0);
    out.built.assign(nd, 0.0);
    out.demanded.resize(nd);
    out.sold.resize(nd);

    const double* srow = set.supply_row(k);
    for (std::size_t i = 0; i < np; ++i) {
        if (!(order_qty[i] >= 0.0) || !std::isfinite(order_qty[i]))
            throw std::invalid_argument("evaluate: order quantity of good '" +
                                        market.produced_ids[i] + "' must be finite and >= 0");
        const double zs = market.supply_axis[i] >= 0 ? srow[market.supply_axis[i]] : 1.0;
        out.received[i] = order_qty[i] * zs;
        out.obtained[i] = out.received[i] * market.yield_rate[i];
        out.tc_prod += out.received[i] * market.unit_cost[i];
        if (ordered[i]) out.tc_prod += market.nre[i];
    }

    for (std::size_t j = 0; j < nm; ++j) {
        const double uses = usage[j];
        if (uses == 0.0) continue;
        if (uses < 0.0)
            throw std::invalid_argument("evaluate: negative usage of mapping '" +
                                        market.mapping_ids[j] + "'");
        for (const auto& use : market.mapping_inputs[j])
            out.used[use.good] += uses * use.qty;
        out.built[market.mapping_output[j]] += uses;
        out.tc_map += uses * market.mapping_cost[j];
    }

    for (std::size_t i = 0; i < np; ++i) {
        const double slack = 1e-6 * std::max(1.0, out.obtained[i]);
        if (out.used[i] > out.obtained[i] + slack)
            throw std::runtime_error("evaluate: mapping usage exceeds obtained units of good '" +
                                     market.produced_ids[i] + "'");
    }

    const double* drow = set.demand_row(k);
    for (std::size_t d = 0; d < nd; ++d) {
        const double zd = market.demand_axis[d] >= 0 ? drow[market.demand_axis[d]] : 1.0;
        out.demanded[d] = market.base_demand[d] * zd;
        out.sold[d] = std::min(out.demanded[d], out.built[d]);
        if (market.has_curve[d]) {
            // Linear demand curve: price moves with sales relative to the
            // realized base quantity; shortage is still priced per unit.
            const double price = market.curve_elasticity[d] * (out.sold[d] - out.demanded[d]) +
                                 market.curve_base_price[d];
            out.tc_ben += price * out.sold[d];
        } else {
            out.tc_ben += market.unit_benefit[d] * out.sold[d];
        }
        out.tc_short += market.unit_shortage[d] * (out.demanded[d] - out.sold[d]);
        out.tc_salv += market.salvage[d] * (out.built[d] - out.sold[d]);
    }

    out.profit = out.tc_ben + out.tc_salv - out.tc_prod - out.tc_map - out.tc_short;
    return out;
}

namespace {

std::vector<double> dense_usage(const CompiledMarket& market,
                                const std::map<std::string, double>& usage) {
    std::vector<double> u(market.num_mappings(), 0.0);
    for (const auto& [id, v] : usage) {
        const auto it = std::find(market.mapping_ids.begin(), market.mapping_ids.end(), id);
        if (it == market.mapping_ids.end())
            throw std::invalid_argument("policy references unknown mapping '" + id + "'");
        u[it - market.mapping_ids.begin()] = v;
    }
    return u;
}

}  // namespace

ProfitBreakdown evaluate_scenario(const MarketSpec& spec, const DecisionPolicy& policy,
                                  const ScenarioSet& set, std::size_t k) {
    const CompiledMarket market = CompiledMarket::compile(spec, set);
    std::vector<double> q(market.num_produced(), 0.0);
    std::vector<char> o(market.num_produced(), 0);
    for (std::size_t i = 0; i < market.num_produced(); ++i) {
        const auto it = policy.order_qty.find(market.produced_ids[i]);
        if (it != policy.order_qty.end()) q[i] = it->second;
        const auto ot = policy.ordered.find(market.produced_ids[i]);
        o[i] = ot != policy.ordered.end() ? static_cast<char>(ot->second != 0)
                                          : static_cast<char>(q[i] > kOrderEps);
    }
    if (k >= set.size()) throw std::out_of_range("evaluate_scenario: scenario index");
    if (policy.mapping_usage.size() <= k)
        throw std::invalid_argument("evaluate_scenario: policy has no usage for scenario " +
                                    std::to_string(k));
    const std::vector<double> u = dense_usage(market, policy.mapping_usage[k]);
    return evaluate_compiled(market, q, o, u, set, k);
}

std::vector<double> scenario_profits(const MarketSpec& spec, const DecisionPolicy& policy,
                                     const ScenarioSet& set) {
    if (policy.mapping_usage.size() != set.size())
        throw std::invalid_argument("scenario_profits: policy must define usage per scenario");
    const CompiledMarket market = CompiledMarket::compile(spec, set);
    std::vector<double> q(market.num_produced(), 0.0);
    std::vector<char> o(market.num_produced(), 0);
    for (std::size_t i = 0; i < market.num_produced(); ++i) {
        const auto it = policy.order_qty.find(market.produced_ids[i]);
        if (it != policy.order_qty.end()) q[i] = it->second;
        const auto ot = policy.ordered.find(market.produced_ids[i]);
        o[i] = ot != policy.ordered.end() ? static_cast<char>(ot->second != 0)
                                          : static_cast<char>(q[i] > kOrderEps);
    }
    std::vector<double> profits(set.size());
    for (std::size_t k = 0; k < set.size(); ++k) {
        const std::vector<double> u = dense_usage(market, policy.mapping_usage[k]);
        profits[k] = evaluate_compiled(market, q, o, u, set, k).profit;
    }
    return profits;
}

double expected_profit(const MarketSpec& spec, const DecisionPolicy& policy,
                       const ScenarioSet& set) {
    const std::vector<double> profits = scenario_profits(spec, policy, set);
    double total = 0.0;
    for (std::size_t k = 0; k < set.size(); ++k) total += set.weights[k] * profits[k];
    return total;
}

std::optional<double> lambda_metric(double intervention_mean, const BaselineRef& baseline) {
    const double denom = baseline.zero_uncertainty_mean - baseline.mean;
    if (std::fabs(denom) < 1e-9 * std::max(1.0, std::fabs(baseline.zero_uncertainty_mean)))
        return std::nullopt;
    return 100.0 * (intervention_mean - baseline.mean) / denom;
}

namespace {

bool uniform_weights(const std::vector<double>& w) {
    if (w.empty()) return true;
    for (double v : w)
        if (std::fabs(v - w.front()) > 1e-12 * std::max(1.0, std::fabs(w.front()))) return false;
    return true;
}

// Hyndman-Fan type-7 quantile on sorted values (matches the usual convention
// for uniform weights); weighted sets interpolate on midpoint cumulative
// positions instead.
double quantile(const std::vector<double>& sorted, const std::vector<double>& w, bool uniform,
                double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    if (uniform) {
        const double h = p * static_cast<double>(n - 1);
        const std::size_t i = static_cast<std::size_t>(std::floor(h));
        if (i + 1 >= n) return sorted[n - 1];
        return sorted[i] + (h - static_cast<double>(i)) * (sorted[i + 1] - sorted[i]);
    }
    double cum = 0.0;
    std::vector<double> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
        pos[i] = cum + 0.5 * w[i];
        cum += w[i];
    }
    if (p <= pos.front()) return sorted.front();
    if (p >= pos.back()) return sorted.back();
    for (std::size_t i = 1; i < n; ++i) {
        if (p <= pos[i]) {
            const double f = (p - pos[i - 1]) / (pos[i] - pos[i - 1]);
            return sorted[i - 1] + f * (sorted[i] - sorted[i - 1]);
        }
    }
    return sorted.back();
}

}  // namespace

ProfitReport make_report(std::vector<double> profits, std::vector<double> weights,
                         std::optional<BaselineRef> baseline) {
    if (profits.empty()) throw std::invalid_argument("make_report: empty profit list");
    if (weights.empty()) weights.assign(profits.size(), 1.0 / static_cast<double>(profits.size()));
    if (weights.size() != profits.size())
        throw std::invalid_argument("make_report: profit/weight size mismatch");
    double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w /= wsum;

    ProfitReport rep;
    rep.profits = profits;
    rep.weights = weights;
    for (std::size_t i = 0; i < profits.size(); ++i) rep.mean += weights[i] * profits[i];
    double var = 0.0;
    for (std::size_t i = 0; i < profits.size(); ++i) {
        const double d = profits[i] - rep.mean;
        var += weights[i] * d * d;
    }
    rep.stddev = std::sqrt(std::max(0.0, var));

    std::vector<std::size_t> idx(profits.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return profits[a] < profits[b]; });
    std::vector<double> sorted(profits.size()), sw(profits.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        sorted[i] = profits[idx[i]];
        sw[i] = weights[idx[i]];
    }
    const bool uniform = uniform_weights(sw);
    rep.min = sorted.front();
    rep.max = sorted.back();
    rep.q1 = quantile(sorted, sw, uniform, 0.25);
    rep.median = quantile(sorted, sw, uniform, 0.50);
    rep.q3 = quantile(sorted, sw, uniform, 0.75);
    const double iqr = rep.q3 - rep.q1;
    const double lo = rep.q1 - 1.5 * iqr, hi = rep.q3 + 1.5 * iqr;
    for (double p : sorted)
        if (p < lo || p > hi) rep.outliers.push_back(p);

    if (baseline) {
        rep.lambda = lambda_metric(rep.mean, *baseline);
        rep.lambda_undefined = !rep.lambda.has_value();
    }
    return rep;
}

}  // namespace chainforge
