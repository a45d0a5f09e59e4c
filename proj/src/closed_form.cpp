#include "chainforge/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace chainforge::closed_form {

bool prefer_substitute(const SubstitutionScenario& s) {
    const double direct = (s.c1 + s.t - s.r) * s.zd + s.n1;
    const double substitute = (s.c2 + s.t - s.r) * s.zd + s.n2;
    return substitute < direct;
}

double break_even_demand(double n1, double n2, double c1, double c2) {
    if (c1 == c2) throw std::invalid_argument("break_even_demand: c1 == c2 has no break-even");
    return (n1 - n2) / (c2 - c1);
}

MarketSpec substitution_market(const SubstitutionScenario& s) {
    MarketSpec spec;
    ProducedGood g1{"g1", s.c1, s.n1, 1.0, "foundry"};
    ProducedGood g2{"g2", s.c2, s.n2, 1.0, "foundry"};
    spec.produced = {g1, g2};

    DemandedGood d;
    d.id = "d";
    d.base_demand = s.zd;
    d.unit_benefit = s.r;
    d.unit_shortage_cost = s.r;
    spec.demanded = {d};

    Mapping direct;
    direct.id = "g1->d";
    direct.inputs["g1"] = 1.0;
    direct.output = "d";
    Mapping adapt;
    adapt.id = "g2->d";
    adapt.inputs["g2"] = 1.0;
    adapt.output = "d";
    adapt.cost_per_use = s.t;
    spec.mappings = {direct, adapt};

    spec.uncertainty.supply["foundry"] = Distribution::deterministic(1.0);
    spec.uncertainty.demand["d"] = Distribution::deterministic(1.0);
    return spec;
}

GoopCosts goop_costs(int k, double g, double t, double c) {
    if (k < 1) throw std::invalid_argument("goop_costs: k must be >= 1");
    const double p = 1.0 / static_cast<double>(k + 1);

    GoopCosts out;
    // Flexible-only: j units cover any split up to j total sales.
    out.flexible = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= k; ++j) {
        const double cost = j * (c + t) + g * static_cast<double>(k - j);
        out.flexible = std::min(out.flexible, cost);
    }
    // Dedicated-only: stuck with the chosen split.
    out.dedicated = std::numeric_limits<double>::infinity();
    for (int x1 = 0; x1 <= k; ++x1) {
        for (int x2 = 0; x2 <= k; ++x2) {
            double expected_short = 0.0;
            for (int z1 = 0; z1 <= k; ++z1) {
                const int z2 = k - z1;
                expected_short += p * (std::max(0, z1 - x1) + std::max(0, z2 - x2));
            }
            out.dedicated = std::min(out.dedicated, c * (x1 + x2) + g * expected_short);
        }
    }
    return out;
}

bool goop_threshold(int k, double g, double t) {
    const GoopCosts costs = goop_costs(k, g, t);
    return costs.flexible < costs.dedicated - 1e-12;
}

bool goop_paper_inequality(int k, double g, double t) { return g * t <= static_cast<double>(k); }

namespace {

double programmable_value(const ProgrammabilityScenario& s, double x, double active_units) {
    return s.margin * std::min(x, active_units) + s.salvage * std::max(0.0, x - active_units);
}

}  // namespace

double asic_expected_profit(const ProgrammabilityScenario& s, double x) {
    if (x < 0.0 || x > s.m) throw std::invalid_argument("asic_expected_profit: x outside [0, m]");
    const double per_good = x * (s.margin * s.p + s.salvage * (1.0 - s.p)) - s.nre_asic;
    return static_cast<double>(s.k) * std::max(per_good, 0.0);
}

double programmable_expected_profit(const ProgrammabilityScenario& s, double x) {
    if (x < 0.0 || x > s.k * s.m)
        throw std::invalid_argument("programmable_expected_profit: x outside [0, k*m]");
    if (x <= 0.0) return 0.0;
    if (s.p >= 1.0) return programmable_value(s, x, s.k * s.m) - s.nre_prog;
    if (s.p <= 0.0) return programmable_value(s, x, 0.0) - s.nre_prog;
    // Binomial expectation over the number of active demands; margins are
    // identical across goods so only the count matters.
    double value = 0.0;
    double prob = std::pow(1.0 - s.p, s.k);  // P(S = 0)
    for (int active = 0; active <= s.k; ++active) {
        value += prob * programmable_value(s, x, active * s.m);
        if (active < s.k) {
            const double ratio =
                (static_cast<double>(s.k - active) / (active + 1)) * (s.p / (1.0 - s.p));
            prob *= ratio;
        }
    }
    return value - s.nre_prog;
}

double programmable_profit_enumerated(const ProgrammabilityScenario& s, double x) {
    if (s.k > 25) throw std::invalid_argument("programmable_profit_enumerated: k too large");
    if (x <= 0.0) return 0.0;
    double value = 0.0;
    for (unsigned long outcome = 0; outcome < (1UL << s.k); ++outcome) {
        double prob = 1.0, active = 0.0;
        for (int i = 0; i < s.k; ++i) {
            if (outcome >> i & 1) {
                prob *= s.p;
                active += 1.0;
            } else {
                prob *= 1.0 - s.p;
            }
        }
        value += prob * programmable_value(s, x, active * s.m);
    }
    return value - s.nre_prog;
}

double best_programmable_profit(const ProgrammabilityScenario& s) {
    double best = 0.0;  // x = 0 is always available
    for (int units = 1; units <= s.k; ++units)
        best = std::max(best, programmable_expected_profit(s, units * s.m));
    return best;
}

}  // namespace chainforge::closed_form
