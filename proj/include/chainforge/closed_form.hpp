#pragma once

#include <utility>
#include <vector>

#include "chainforge/market.hpp"

// Analytic solutions to small micro-scenarios, used as independent oracles
// against the full engine. These are hard-coded scenario families, not a
// general solver.

namespace chainforge::closed_form {

// Two producers, one demand: g1 is the demanded good, g2 can be adapted to it
// at extra cost t.
struct SubstitutionScenario {
    double r = 0.0;   // unit benefit
    double t = 0.0;   // adaptation cost per unit
    double c1 = 0.0, c2 = 0.0;  // unit costs
    double n1 = 0.0, n2 = 0.0;  // NRE
    double zd = 0.0;  // quantity demanded
};

// True iff building g2 and adapting beats building g1:
// (c2 + t - r) * zd + n2 < (c1 + t - r) * zd + n1. Ties go to the direct good.
bool prefer_substitute(const SubstitutionScenario& s);

// zd at which the two choices break even: (n1 - n2) / (c2 - c1).
double break_even_demand(double n1, double n2, double c1, double c2);

// Engine encoding of the scenario (identity mapping for g1, adaptation
// mapping with cost t for g2, deterministic demand zd).
MarketSpec substitution_market(const SubstitutionScenario& s);

// The split-demand scenario: total demand across two goods is exactly k, the
// split is uniform over {0..k}. A flexible third producer can serve either
// demand at adaptation cost t per unit; shortage costs g per missed unit.
// Costs are expected values under the uniform split, unit production cost c.
struct GoopCosts {
    double flexible = 0.0;   // best build-only-the-flexible-good policy
    double dedicated = 0.0;  // best dedicated-only policy (x1, x2 enumerated)
};
GoopCosts goop_costs(int k, double g, double t, double c = 1.0);

// True iff the flexible-only policy is strictly cheaper than every dedicated
// policy (expected-cost comparison, enumeration is ground truth).
bool goop_threshold(int k, double g, double t);

// The literal inequality printed in the source analysis ("g*t <= k"). Kept
// behind this separate entry point because it disagrees with the enumeration
// on parts of the parameter space; see oracle-check output.
bool goop_paper_inequality(int k, double g, double t);

// k demands of m units each, active independently with probability p; margin
// R = r - c per sold unit, salvage h per unsold unit.
struct ProgrammabilityScenario {
    int k = 1;
    double m = 1.0;
    double p = 1.0;
    double margin = 0.0;   // R = r - c
    double salvage = 0.0;  // h
    double nre_asic = 0.0;
    double nre_prog = 0.0;
};

// Dedicated ASICs: k * max(x * (R p + h (1 - p)) - n_asic, 0) for a common
// per-good build quantity x in [0, m].
double asic_expected_profit(const ProgrammabilityScenario& s, double x);

// One programmable device built at quantity x in [0, k*m]; exact expectation
// over the binomial number of active demands.
double programmable_expected_profit(const ProgrammabilityScenario& s, double x);

// Test oracle: the same expectation by explicit enumeration of all 2^k
// Bernoulli outcomes (k <= 25).
double programmable_profit_enumerated(const ProgrammabilityScenario& s, double x);

// Best programmable profit over a grid of x values (grid step m).
double best_programmable_profit(const ProgrammabilityScenario& s);

}  // namespace chainforge::closed_form
