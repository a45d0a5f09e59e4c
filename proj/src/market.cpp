#include "chainforge/market.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace chainforge {

OrderConstraint OrderConstraint::supply_cap(std::string good, double cap) {
    OrderConstraint c;
    c.kind = Kind::SupplyCap;
    c.good_id = std::move(good);
    c.cap = cap;
    return c;
}

OrderConstraint OrderConstraint::supply_cap_factor(std::string good, double factor) {
    OrderConstraint c;
    c.kind = Kind::SupplyCapFactor;
    c.good_id = std::move(good);
    c.factor = factor;
    return c;
}

OrderConstraint OrderConstraint::order_equality(std::vector<std::string> goods) {
    OrderConstraint c;
    c.kind = Kind::OrderEquality;
    c.group = std::move(goods);
    return c;
}

const ProducedGood* MarketSpec::find_produced(const std::string& id) const {
    for (const auto& g : produced)
        if (g.id == id) return &g;
    return nullptr;
}

const DemandedGood* MarketSpec::find_demanded(const std::string& id) const {
    for (const auto& g : demanded)
        if (g.id == id) return &g;
    return nullptr;
}

const Mapping* MarketSpec::find_mapping(const std::string& id) const {
    for (const auto& m : mappings)
        if (m.id == id) return &m;
    return nullptr;
}

namespace {

void check_distribution(const std::string& path, const Distribution& d,
                        std::vector<Violation>& out) {
    switch (d.kind) {
        case Distribution::Kind::Deterministic:
            if (d.value < 0.0) out.push_back({path + ".value", "deterministic value must be >= 0"});
            break;
        case Distribution::Kind::Normal:
            if (d.sigma < 0.0) out.push_back({path + ".sigma", "sigma must be >= 0"});
            break;
        case Distribution::Kind::Shock:
            if (d.shock_prob < 0.0 || d.shock_prob > 1.0)
                out.push_back({path + ".prob", "shock probability must be in [0,1]"});
            break;
        case Distribution::Kind::Scaled:
            if (!d.inner) {
                out.push_back({path + ".inner", "scaled distribution has no inner distribution"});
            } else {
                check_distribution(path + ".inner", *d.inner, out);
            }
            if (d.scale_factor < 0.0) out.push_back({path + ".factor", "scale factor must be >= 0"});
            break;
    }
}

// PSD check via LDL^T pivots, tolerant of semidefinite matrices.
bool positive_semidefinite(const CorrelationMatrix& c) {
    const std::size_t n = c.ids.size();
    std::vector<double> a = c.values;
    for (std::size_t k = 0; k < n; ++k) {
        double pivot = a[k * n + k];
        if (pivot < -1e-9) return false;
        if (pivot < 1e-12) {
            // Zero pivot: the remaining column must be (near) zero.
            for (std::size_t i = k + 1; i < n; ++i)
                if (std::fabs(a[i * n + k]) > 1e-7) return false;
            continue;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a[i * n + k] / pivot;
            for (std::size_t j = k; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
        }
    }
    return true;
}

}  // namespace

std::vector<Violation> validate(const MarketSpec& spec) {
    std::vector<Violation> out;

    std::set<std::string> produced_ids;
    for (const auto& g : spec.produced) {
        const std::string path = "produced[" + g.id + "]";
        if (!produced_ids.insert(g.id).second) out.push_back({path, "duplicate produced id"});
        if (!(g.unit_cost >= 0.0)) out.push_back({path + ".unit_cost", "must be >= 0"});
        if (!(g.nre >= 0.0)) out.push_back({path + ".nre", "must be >= 0"});
        if (!(g.yield_rate > 0.0 && g.yield_rate <= 1.0))
            out.push_back({path + ".yield_rate", "must be in (0,1]"});
    }

    std::set<std::string> demanded_ids;
    for (const auto& g : spec.demanded) {
        const std::string path = "demanded[" + g.id + "]";
        if (!demanded_ids.insert(g.id).second) out.push_back({path, "duplicate demanded id"});
        if (!(g.base_demand >= 0.0)) out.push_back({path + ".base_demand", "must be >= 0"});
        if (!(g.unit_benefit >= 0.0)) out.push_back({path + ".unit_benefit", "must be >= 0"});
        if (!(g.unit_shortage_cost >= 0.0))
            out.push_back({path + ".unit_shortage_cost", "must be >= 0"});
        // 0 <= salvage < unit benefit; zero salvage is always legal.
        if (!(g.salvage_value >= 0.0) ||
            (g.salvage_value > 0.0 && g.salvage_value >= g.unit_benefit))
            out.push_back({path + ".salvage_value", "must satisfy 0 <= salvage < unit_benefit"});
        if (g.demand_curve) {
            // The usage LPs linearize concave revenue; an upward-sloping curve
            // would be unbounded and salvage would reward overbuilding past
            // the exact-accounting sales rule.
            if (g.demand_curve->elasticity > 0.0)
                out.push_back({path + ".demand_curve.elasticity", "must be <= 0"});
            if (g.salvage_value > 0.0)
                out.push_back({path + ".salvage_value", "salvage with a demand curve is not supported"});
        }
    }

    std::set<std::string> mapping_ids;
    for (const auto& m : spec.mappings) {
        const std::string path = "mappings[" + m.id + "]";
        if (!mapping_ids.insert(m.id).second) out.push_back({path, "duplicate mapping id"});
        if (!(m.cost_per_use >= 0.0)) out.push_back({path + ".cost_per_use", "must be >= 0"});
        bool any_positive = false;
        for (const auto& [gid, units] : m.inputs) {
            if (!produced_ids.count(gid))
                out.push_back({path + ".inputs[" + gid + "]", "unknown produced good"});
            if (units > 0.0) any_positive = true;
            if (units < 0.0) out.push_back({path + ".inputs[" + gid + "]", "must be >= 0"});
        }
        if (!any_positive) out.push_back({path + ".inputs", "needs at least one positive input"});
        if (!demanded_ids.count(m.output))
            out.push_back({path + ".output", "unknown demanded good '" + m.output + "'"});
    }

    for (std::size_t i = 0; i < spec.constraints.size(); ++i) {
        const auto& c = spec.constraints[i];
        const std::string path = "constraints[" + std::to_string(i) + "]";
        switch (c.kind) {
            case OrderConstraint::Kind::SupplyCap:
                if (!produced_ids.count(c.good_id))
                    out.push_back({path + ".good", "unknown produced good '" + c.good_id + "'"});
                if (!(c.cap >= 0.0)) out.push_back({path + ".cap", "must be >= 0"});
                break;
            case OrderConstraint::Kind::SupplyCapFactor:
                if (!produced_ids.count(c.good_id))
                    out.push_back({path + ".good", "unknown produced good '" + c.good_id + "'"});
                if (!(c.factor >= 0.0 && c.factor <= 1.0))
                    out.push_back({path + ".factor", "must be in [0,1]"});
                break;
            case OrderConstraint::Kind::OrderEquality:
                if (c.group.size() < 2)
                    out.push_back({path + ".group", "needs at least 2 members"});
                for (const auto& gid : c.group)
                    if (!produced_ids.count(gid))
                        out.push_back({path + ".group", "unknown produced good '" + gid + "'"});
                break;
        }
    }

    for (const auto& [sid, dist] : spec.uncertainty.supply)
        check_distribution("uncertainty.supply[" + sid + "]", dist, out);
    std::set<std::string> suppliers;
    for (const auto& g : spec.produced)
        if (!g.supplier_id.empty()) suppliers.insert(g.supplier_id);
    for (const auto& [sid, dist] : spec.uncertainty.supply)
        if (!suppliers.count(sid))
            out.push_back({"uncertainty.supply[" + sid + "]", "supplier not used by any good"});
    for (const auto& [did, dist] : spec.uncertainty.demand) {
        check_distribution("uncertainty.demand[" + did + "]", dist, out);
        if (!demanded_ids.count(did))
            out.push_back({"uncertainty.demand[" + did + "]", "unknown demanded good"});
    }
    if (spec.uncertainty.demand_correlation) {
        const auto& c = *spec.uncertainty.demand_correlation;
        const std::size_t n = c.ids.size();
        if (c.values.size() != n * n) {
            out.push_back({"uncertainty.demand_correlation", "matrix size != ids^2"});
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                if (std::fabs(c.at(i, i) - 1.0) > 1e-12)
                    out.push_back({"uncertainty.demand_correlation", "diagonal must be 1"});
                for (std::size_t j = i + 1; j < n; ++j)
                    if (std::fabs(c.at(i, j) - c.at(j, i)) > 1e-12)
                        out.push_back({"uncertainty.demand_correlation", "matrix not symmetric"});
            }
            if (!positive_semidefinite(c))
                out.push_back({"uncertainty.demand_correlation", "matrix not positive semidefinite"});
            for (const auto& id : c.ids)
                if (!demanded_ids.count(id))
                    out.push_back({"uncertainty.demand_correlation", "unknown demanded good '" + id + "'"});
        }
    }

    return out;
}

std::string core_good_id(int cores) { return std::to_string(cores) + "c"; }

std::string identity_mapping_id(int cores) {
    return core_good_id(cores) + "->" + core_good_id(cores);
}

namespace {
constexpr const char* kSharedSupplier = "foundry";
}

MarketSpec build_baseline(const std::vector<int>& core_counts,
                          const chipcost::CostParams& params) {
    if (core_counts.empty()) throw std::invalid_argument("build_baseline: empty core count list");
    std::set<int> seen;
    for (int c : core_counts)
        if (!seen.insert(c).second)
            throw std::invalid_argument("build_baseline: duplicate core count " + std::to_string(c));

    MarketSpec spec;
    for (int cores : core_counts) {
        const auto econ = chipcost::good_economics(cores, params);
        const std::string id = core_good_id(cores);

        ProducedGood p;
        p.id = id;
        p.unit_cost = econ.unit_cost;
        p.nre = econ.nre;
        p.yield_rate = econ.yield;
        p.supplier_id = kSharedSupplier;
        spec.produced.push_back(std::move(p));

        DemandedGood d;
        d.id = id;
        d.base_demand = params.base_demand;
        d.unit_benefit = econ.unit_benefit;
        d.unit_shortage_cost = econ.unit_benefit;  // shortage cost equals unit benefit
        spec.demanded.push_back(std::move(d));

        Mapping m;
        m.id = identity_mapping_id(cores);
        m.inputs[id] = 1.0;
        m.output = id;
        m.cost_per_use = 0.0;
        spec.mappings.push_back(std::move(m));

        spec.uncertainty.demand[id] = Distribution::deterministic(1.0);
    }
    spec.uncertainty.supply[kSharedSupplier] = Distribution::deterministic(1.0);
    return spec;
}

namespace {

void require_core_goods(const MarketSpec& spec, const char* op) {
    for (int cores : {16, 8, 4})
        if (!spec.find_produced(core_good_id(cores)) || !spec.find_demanded(core_good_id(cores)))
            throw std::invalid_argument(std::string(op) + ": spec is missing the " +
                                        core_good_id(cores) + " good");
}

void add_mapping_once(MarketSpec& spec, Mapping m) {
    if (!spec.find_mapping(m.id)) spec.mappings.push_back(std::move(m));
}

}  // namespace

MarketSpec add_composition(MarketSpec spec, double interposer_cost_16, bool interposer_as_good) {
    require_core_goods(spec, "add_composition");

    double gamma16 = interposer_cost_16;
    double gamma8 = interposer_cost_16 / 2.0;
    std::map<std::string, double> interposer16, interposer8;
    if (interposer_as_good) {
        if (!spec.find_produced(kInterposerGoodId)) {
            ProducedGood ip;
            ip.id = kInterposerGoodId;
            ip.unit_cost = interposer_cost_16;
            ip.nre = 0.0;
            ip.yield_rate = 1.0;
            ip.supplier_id = kSharedSupplier;
            spec.produced.push_back(std::move(ip));
        }
        // An 8-core composition uses an interposer of half the area.
        interposer16[kInterposerGoodId] = 1.0;
        interposer8[kInterposerGoodId] = 0.5;
        gamma16 = 0.0;
        gamma8 = 0.0;
    }

    auto compose = [&](std::string id, std::map<std::string, double> inputs, int out_cores,
                       double gamma, const std::map<std::string, double>& interposer) {
        Mapping m;
        m.id = std::move(id);
        m.inputs = std::move(inputs);
        for (const auto& [gid, units] : interposer) m.inputs[gid] = units;
        m.output = core_good_id(out_cores);
        m.cost_per_use = gamma;
        add_mapping_once(spec, std::move(m));
    };

    compose("2x8c->16c", {{core_good_id(8), 2.0}}, 16, gamma16, interposer16);
    compose("4x4c->16c", {{core_good_id(4), 4.0}}, 16, gamma16, interposer16);
    compose("1x8c+2x4c->16c", {{core_good_id(8), 1.0}, {core_good_id(4), 2.0}}, 16, gamma16,
            interposer16);
    compose("2x4c->8c", {{core_good_id(4), 2.0}}, 8, gamma8, interposer8);
    return spec;
}

MarketSpec add_adaptation(MarketSpec spec) {
    require_core_goods(spec, "add_adaptation");
    auto adapt = [&](int from, int to) {
        Mapping m;
        m.id = core_good_id(from) + "->" + core_good_id(to);
        m.inputs[core_good_id(from)] = 1.0;
        m.output = core_good_id(to);
        m.cost_per_use = 0.0;  // core disabling is free
        add_mapping_once(spec, std::move(m));
    };
    adapt(16, 8);
    adapt(16, 4);
    adapt(8, 4);
    return spec;
}

MarketSpec add_dispersion(MarketSpec spec, DispersionMode mode, double nre_share) {
    if (nre_share < 0.0 || nre_share > 1.0)
        throw std::invalid_argument("add_dispersion: nre_share must be in [0,1]");

    if (mode == DispersionMode::UniquePerGood) {
        std::map<std::string, Distribution> old_supply = spec.uncertainty.supply;
        spec.uncertainty.supply.clear();
        for (auto& g : spec.produced) {
            const auto it = old_supply.find(g.supplier_id);
            const Distribution dist =
                it != old_supply.end() ? it->second : Distribution::deterministic(1.0);
            g.supplier_id = "sup:" + g.id;
            spec.uncertainty.supply[g.supplier_id] = dist;
        }
        return spec;
    }

    // TwoSuppliersAll: clone every produced good across suppliers A and B with
    // an equal-order constraint per pair, duplicating mappings onto each side.
    Distribution shared = Distribution::deterministic(1.0);
    if (!spec.produced.empty()) {
        const auto it = spec.uncertainty.supply.find(spec.produced.front().supplier_id);
        if (it != spec.uncertainty.supply.end()) shared = it->second;
    }

    std::vector<ProducedGood> cloned;
    std::vector<OrderConstraint> constraints = spec.constraints;
    for (const auto& g : spec.produced) {
        ProducedGood a = g, b = g;
        a.id = g.id + "@A";
        a.supplier_id = "supA";
        b.id = g.id + "@B";
        b.supplier_id = "supB";
        b.nre = g.nre * (1.0 - nre_share);  // reused engineering on the second source
        cloned.push_back(std::move(a));
        cloned.push_back(std::move(b));
        constraints.push_back(OrderConstraint::order_equality({g.id + "@A", g.id + "@B"}));
    }

    std::vector<Mapping> mappings;
    for (const auto& m : spec.mappings) {
        for (const char* side : {"@A", "@B"}) {
            Mapping c;
            c.id = m.id + side;
            c.output = m.output;
            c.cost_per_use = m.cost_per_use;
            for (const auto& [gid, units] : m.inputs) c.inputs[gid + side] = units;
            mappings.push_back(std::move(c));
        }
    }

    spec.produced = std::move(cloned);
    spec.mappings = std::move(mappings);
    spec.constraints = std::move(constraints);
    spec.uncertainty.supply.clear();
    spec.uncertainty.supply["supA"] = shared;
    spec.uncertainty.supply["supB"] = shared;
    return spec;
}

}  // namespace chainforge
