#include "chainforge/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "chainforge/format.hpp"
#include "chainforge/rng.hpp"

namespace chainforge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Order-equality groups collapse to one decision variable per class.
struct VariableClasses {
    std::vector<std::vector<std::size_t>> members;  // good indices per class
    std::vector<double> upper;                      // bound per class
    std::vector<double> init;                       // zero-uncertainty heuristic
};

VariableClasses build_classes(const MarketSpec& spec, const CompiledMarket& market) {
    const std::size_t np = market.num_produced();
    std::vector<std::size_t> parent(np);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    auto good_index = [&](const std::string& id) -> std::size_t {
        const auto it = std::find(market.produced_ids.begin(), market.produced_ids.end(), id);
        if (it == market.produced_ids.end())
            throw std::invalid_argument("constraint references unknown good '" + id + "'");
        return static_cast<std::size_t>(it - market.produced_ids.begin());
    };
    for (const auto& c : spec.constraints) {
        if (c.kind != OrderConstraint::Kind::OrderEquality) continue;
        const std::size_t root = find(good_index(c.group.front()));
        for (const auto& id : c.group) parent[find(good_index(id))] = root;
    }

    VariableClasses out;
    std::vector<long> class_of(np, -1);
    for (std::size_t i = 0; i < np; ++i) {
        const std::size_t r = find(i);
        if (class_of[r] < 0) {
            class_of[r] = static_cast<long>(out.members.size());
            out.members.emplace_back();
        }
        out.members[static_cast<std::size_t>(class_of[r])].push_back(i);
    }

    std::vector<double> ub(np, kInf);
    for (const auto& c : spec.constraints) {
        if (c.kind == OrderConstraint::Kind::SupplyCap) {
            ub[good_index(c.good_id)] = std::min(ub[good_index(c.good_id)], c.cap);
        } else if (c.kind == OrderConstraint::Kind::SupplyCapFactor) {
            const auto ref = c.reference.find(c.good_id);
            if (ref == c.reference.end())
                throw std::logic_error("unresolved SupplyCapFactor for '" + c.good_id + "'");
            ub[good_index(c.good_id)] =
                std::min(ub[good_index(c.good_id)], c.factor * ref->second);
        }
    }

    // Zero-uncertainty starting point: every demand split evenly over the
    // mappings that can serve it, inflated by yield.
    std::vector<double> want(np, 0.0);
    for (std::size_t d = 0; d < market.num_demanded(); ++d) {
        std::vector<std::size_t> serving;
        for (std::size_t j = 0; j < market.num_mappings(); ++j)
            if (static_cast<std::size_t>(market.mapping_output[j]) == d) serving.push_back(j);
        if (serving.empty()) continue;
        for (const std::size_t j : serving)
            for (const auto& use : market.mapping_inputs[j])
                want[use.good] +=
                    market.base_demand[d] * use.qty / static_cast<double>(serving.size());
    }

    for (const auto& cls : out.members) {
        double bound = kInf, init = 0.0;
        for (const std::size_t i : cls) {
            bound = std::min(bound, ub[i]);
            init = std::max(init, want[i] / market.yield_rate[i]);
        }
        out.upper.push_back(bound);
        out.init.push_back(std::min(init, bound));
    }
    return out;
}

struct Candidate {
    double value = -kInf;
    std::vector<double> q;  // dense per produced good
    int ordered_count = 0;
    std::uint64_t subset_mask = 0;
};

bool better(const Candidate& a, const Candidate& b) {
    const double tol = 1e-9 * std::max(1.0, std::fabs(b.value));
    if (a.value > b.value + tol) return true;
    if (a.value < b.value - tol) return false;
    if (a.ordered_count != b.ordered_count) return a.ordered_count < b.ordered_count;
    return a.subset_mask < b.subset_mask;
}

// Nelder-Mead on [0, ub] boxes, minimizing f. Deterministic for a fixed
// start; convergence on relative simplex size.
class NelderMead {
  public:
    NelderMead(std::function<double(std::span<const double>)> f, std::vector<double> ub)
        : f_(std::move(f)), ub_(std::move(ub)) {}

    std::pair<double, std::vector<double>> run(std::vector<double> x0, double spread, int max_iter,
                                               int* evals_left) {
        const std::size_t n = x0.size();
        clamp(x0);
        std::vector<std::vector<double>> simplex{x0};
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> v = x0;
            const double step = std::max(std::fabs(v[j]) * spread, default_step(j));
            v[j] = v[j] + step <= ub_[j] ? v[j] + step : std::max(0.0, v[j] - step);
            clamp(v);
            simplex.push_back(std::move(v));
        }
        std::vector<double> fv(simplex.size());
        for (std::size_t i = 0; i < simplex.size(); ++i) fv[i] = eval(simplex[i], evals_left);

        for (int it = 0; it < max_iter && *evals_left > 0; ++it) {
            std::vector<std::size_t> ord(simplex.size());
            std::iota(ord.begin(), ord.end(), 0);
            std::sort(ord.begin(), ord.end(),
                      [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
            reorder(simplex, fv, ord);

            double size = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                size = std::max(size, span_along(simplex, j) /
                                          std::max(1.0, std::fabs(simplex[0][j])));
            if (size < 1e-10) break;

            std::vector<double> centroid(n, 0.0);
            for (std::size_t i = 0; i + 1 < simplex.size(); ++i)
                for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
            for (double& c : centroid) c /= static_cast<double>(n);

            const std::size_t worst = simplex.size() - 1;
            std::vector<double> xr = blend(centroid, simplex[worst], -1.0);
            const double fr = eval(xr, evals_left);
            if (fr < fv[0]) {
                std::vector<double> xe = blend(centroid, simplex[worst], -2.0);
                const double fe = eval(xe, evals_left);
                if (fe < fr) {
                    simplex[worst] = xe;
                    fv[worst] = fe;
                } else {
                    simplex[worst] = xr;
                    fv[worst] = fr;
                }
            } else if (fr < fv[worst - 1]) {
                simplex[worst] = xr;
                fv[worst] = fr;
            } else {
                std::vector<double> xc = blend(centroid, simplex[worst], 0.5);
                const double fc = eval(xc, evals_left);
                if (fc < fv[worst]) {
                    simplex[worst] = xc;
                    fv[worst] = fc;
                } else {
                    for (std::size_t i = 1; i < simplex.size(); ++i) {
                        for (std::size_t j = 0; j < n; ++j)
                            simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                        fv[i] = eval(simplex[i], evals_left);
                    }
                }
            }
        }
        std::size_t best = 0;
        for (std::size_t i = 1; i < simplex.size(); ++i)
            if (fv[i] < fv[best]) best = i;
        return {fv[best], simplex[best]};
    }

  private:
    double default_step(std::size_t j) const {
        return std::isfinite(ub_[j]) && ub_[j] > 0.0 ? 0.1 * ub_[j] : 1.0;
    }
    void clamp(std::vector<double>& x) const {
        for (std::size_t j = 0; j < x.size(); ++j)
            x[j] = std::min(std::max(x[j], 0.0), ub_[j]);
    }
    double eval(std::vector<double>& x, int* evals_left) {
        clamp(x);
        --*evals_left;
        return f_(x);
    }
    static std::vector<double> blend(const std::vector<double>& centroid,
                                     const std::vector<double>& x, double t) {
        std::vector<double> out(centroid.size());
        for (std::size_t j = 0; j < out.size(); ++j)
            out[j] = centroid[j] + t * (x[j] - centroid[j]);
        return out;
    }
    static double span_along(const std::vector<std::vector<double>>& s, std::size_t j) {
        double lo = s[0][j], hi = s[0][j];
        for (const auto& v : s) {
            lo = std::min(lo, v[j]);
            hi = std::max(hi, v[j]);
        }
        return hi - lo;
    }
    static void reorder(std::vector<std::vector<double>>& s, std::vector<double>& fv,
                        const std::vector<std::size_t>& ord) {
        std::vector<std::vector<double>> s2(s.size());
        std::vector<double> f2(fv.size());
        for (std::size_t i = 0; i < ord.size(); ++i) {
            s2[i] = std::move(s[ord[i]]);
            f2[i] = fv[ord[i]];
        }
        s = std::move(s2);
        fv = f2;
    }

    std::function<double(std::span<const double>)> f_;
    std::vector<double> ub_;
};

// Deterministic local refinement after Nelder-Mead: golden-section sweeps
// along each coordinate. Only improvements are kept.
template <typename F>
void polish(F&& f, std::vector<double>& x, double& fx, const std::vector<double>& ub,
            int* evals_left) {
    constexpr double kGolden = 0.6180339887498949;
    for (int pass = 0; pass < 2 && *evals_left > 0; ++pass) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double radius = std::max(0.05 * std::fabs(x[j]), 1e-6 * (1.0 + std::fabs(x[j])));
            double lo = std::max(0.0, x[j] - radius);
            double hi = std::min(ub[j], x[j] + radius);
            if (!(hi > lo)) continue;
            double a = hi - kGolden * (hi - lo), b = lo + kGolden * (hi - lo);
            std::vector<double> xa = x, xb = x;
            xa[j] = a;
            xb[j] = b;
            double fa = f(xa), fb = f(xb);
            *evals_left -= 2;
            for (int it = 0; it < 24 && *evals_left > 0; ++it) {
                if (fa <= fb) {
                    hi = b;
                    b = a;
                    fb = fa;
                    a = hi - kGolden * (hi - lo);
                    xa[j] = a;
                    fa = f(xa);
                } else {
                    lo = a;
                    a = b;
                    fa = fb;
                    b = lo + kGolden * (hi - lo);
                    xb[j] = b;
                    fb = f(xb);
                }
                --*evals_left;
            }
            const double cand = fa <= fb ? a : b;
            const double fcand = std::min(fa, fb);
            if (fcand < fx) {
                x[j] = cand;
                fx = fcand;
            }
        }
    }
}

bool has_unresolved_factor(const MarketSpec& spec) {
    for (const auto& c : spec.constraints)
        if (c.kind == OrderConstraint::Kind::SupplyCapFactor && c.reference.empty()) return true;
    return false;
}

OptimizationResult optimize_resolved(const MarketSpec& spec, const ScenarioSet& scenarios,
                                     const OptimizerConfig& config);

MarketSpec resolve_factor_constraints(const MarketSpec& spec, const ScenarioSet& scenarios,
                                      const OptimizerConfig& config) {
    MarketSpec stripped = spec;
    std::erase_if(stripped.constraints, [](const OrderConstraint& c) {
        return c.kind == OrderConstraint::Kind::SupplyCapFactor;
    });
    const OptimizationResult unconstrained = optimize_resolved(stripped, scenarios, config);
    MarketSpec resolved = spec;
    for (auto& c : resolved.constraints) {
        if (c.kind == OrderConstraint::Kind::SupplyCapFactor && c.reference.empty()) {
            const auto it = unconstrained.policy.order_qty.find(c.good_id);
            c.reference[c.good_id] = it != unconstrained.policy.order_qty.end() ? it->second : 0.0;
        }
    }
    return resolved;
}

OptimizationResult optimize_resolved(const MarketSpec& spec, const ScenarioSet& scenarios,
                                     const OptimizerConfig& config) {
    const auto violations = validate(spec);
    if (!violations.empty())
        throw std::invalid_argument("optimize: invalid spec: " + violations.front().path + ": " +
                                    violations.front().message);

    recourse::StagedEvaluator evaluator(spec, scenarios, config.threads);
    const CompiledMarket& market = evaluator.market();
    const VariableClasses classes = build_classes(spec, market);
    const std::size_t nc = classes.members.size();
    const RecourseStage stage = spec.recourse_stage;

    OptimizationResult result;
    result.seed = config.seed;
    result.scenario_seed = scenarios.seed;
    result.rng_name = rng::kGeneratorName;

    std::vector<double> dense(market.num_produced(), 0.0);
    auto assemble = [&](std::span<const double> x, const std::vector<std::size_t>& active) {
        std::fill(dense.begin(), dense.end(), 0.0);
        for (std::size_t t = 0; t < active.size(); ++t)
            for (const std::size_t i : classes.members[active[t]]) dense[i] = x[t];
        return std::span<const double>(dense);
    };
    auto count_ordered = [&](const std::vector<double>& q) {
        int n = 0;
        for (double v : q)
            if (v > kOrderEps) ++n;
        return n;
    };

    Candidate best;
    best.q.assign(market.num_produced(), 0.0);
    best.value = evaluator.evaluate(best.q, stage);  // order-nothing policy
    best.ordered_count = 0;
    result.incumbent_trace.push_back(best.value);

    if (config.method == OptimizerConfig::Method::SubsetNelderMead) {
        if (nc > 12)
            throw std::invalid_argument(
                "optimize: subset enumeration limited to 12 order classes; use simulated "
                "annealing for larger specs");
        for (std::uint64_t mask = 1; mask < (1ULL << nc); ++mask) {
            std::vector<std::size_t> active;
            for (std::size_t c = 0; c < nc; ++c)
                if (mask >> c & 1) active.push_back(c);

            std::vector<double> ub, x0;
            for (const std::size_t c : active) {
                ub.push_back(classes.upper[c]);
                x0.push_back(classes.init[c]);
            }
            NelderMead nm(
                [&](std::span<const double> x) {
                    return -evaluator.evaluate(assemble(x, active), stage);
                },
                ub);

            int evals_left = config.max_evals_per_subset;
            std::mt19937_64 gen(rng::derive_seed(config.seed, "nm-restarts", mask));
            auto objective = [&](const std::vector<double>& x) {
                return -evaluator.evaluate(assemble(x, active), stage);
            };
            for (int r = 0; r <= config.restarts; ++r) {
                std::vector<double> start = x0;
                if (r > 0)
                    for (double& v : start) v *= 0.4 + 1.2 * rng::u01(gen);
                auto [fval, x] = nm.run(start, 0.2, config.nm_max_iter, &evals_left);
                polish(objective, x, fval, ub, &evals_left);
                Candidate cand;
                cand.value = -fval;
                cand.q.assign(assemble(x, active).begin(), assemble(x, active).end());
                cand.ordered_count = count_ordered(cand.q);
                cand.subset_mask = mask;
                if (better(cand, best)) {
                    best = cand;
                    result.incumbent_trace.push_back(best.value);
                }
                if (evals_left <= 0) {
                    result.budget_exhausted = true;
                    break;
                }
            }
        }
        result.method = "subset-enumeration+nelder-mead";
    } else {
        // Simulated annealing over (q, on/off) class moves with a geometric
        // cooling schedule, then the incumbent is kept.
        std::mt19937_64 gen(rng::derive_seed(config.seed, "anneal", 0));
        std::vector<double> state = classes.init;
        auto value_of = [&](const std::vector<double>& s) {
            std::vector<std::size_t> all(nc);
            std::iota(all.begin(), all.end(), 0);
            return evaluator.evaluate(assemble(s, all), stage);
        };
        double current = value_of(state);
        Candidate cand;
        cand.q.assign(dense.begin(), dense.end());
        cand.value = current;
        cand.ordered_count = count_ordered(cand.q);
        if (better(cand, best)) best = cand;

        double temperature = config.anneal.t0;
        const double scale = std::max(1.0, std::fabs(current));
        for (int step = 0; step < config.anneal.steps; ++step) {
            std::vector<double> next = state;
            const std::size_t c = static_cast<std::size_t>(gen() % nc);
            const double roll = rng::u01(gen);
            if (roll < 0.15) {
                next[c] = next[c] > kOrderEps ? 0.0 : classes.init[c] * (0.5 + rng::u01(gen));
            } else {
                const double z = rng::normal_quantile(rng::u01(gen));
                const double base = next[c] > kOrderEps ? next[c] : classes.init[c] * 0.5 + 1.0;
                next[c] = base * std::exp(0.3 * z);
            }
            next[c] = std::min(next[c], classes.upper[c]);
            const double v = value_of(next);
            const double delta = v - current;
            if (delta >= 0.0 ||
                rng::u01(gen) < std::exp(delta / (temperature * scale))) {
                state = next;
                current = v;
                Candidate c2;
                c2.q.assign(dense.begin(), dense.end());
                c2.value = current;
                c2.ordered_count = count_ordered(c2.q);
                if (better(c2, best)) {
                    best = c2;
                    result.incumbent_trace.push_back(best.value);
                }
            }
            temperature *= config.anneal.cooling;
        }
        result.method = "simulated-annealing";
    }

    // Assemble the policy; the reported value is the re-evaluation of the
    // returned policy so the two agree bit-for-bit.
    for (std::size_t i = 0; i < market.num_produced(); ++i)
        result.policy.order_qty[market.produced_ids[i]] = best.q[i];
    result.policy.ordered = derive_ordered(result.policy.order_qty);
    const auto usages = evaluator.usages(best.q, stage);
    result.policy.mapping_usage.resize(usages.size());
    for (std::size_t k = 0; k < usages.size(); ++k) {
        for (std::size_t j = 0; j < market.num_mappings(); ++j)
            if (usages[k][j] != 0.0)
                result.policy.mapping_usage[k][market.mapping_ids[j]] = usages[k][j];
    }
    result.expected_profit = expected_profit(spec, result.policy, scenarios);
    return result;
}

}  // namespace

OptimizationResult optimize(const MarketSpec& spec, const ScenarioSet& scenarios,
                            const OptimizerConfig& config) {
    if (has_unresolved_factor(spec)) {
        const MarketSpec resolved = resolve_factor_constraints(spec, scenarios, config);
        return optimize_resolved(resolved, scenarios, config);
    }
    return optimize_resolved(spec, scenarios, config);
}

OptimizationResult constrained_rerun(const MarketSpec& spec, const ScenarioSet& scenarios,
                                     const OptimizerConfig& config, double factor,
                                     const std::vector<std::string>& good_ids) {
    if (factor < 0.0 || factor > 1.0)
        throw std::invalid_argument("constrained_rerun: factor must be in [0,1]");
    MarketSpec stripped = spec;
    std::erase_if(stripped.constraints, [&](const OrderConstraint& c) {
        return c.kind == OrderConstraint::Kind::SupplyCapFactor &&
               std::find(good_ids.begin(), good_ids.end(), c.good_id) != good_ids.end();
    });
    const OptimizationResult unconstrained = optimize(stripped, scenarios, config);

    MarketSpec constrained = stripped;
    for (const auto& id : good_ids) {
        OrderConstraint c = OrderConstraint::supply_cap_factor(id, factor);
        const auto it = unconstrained.policy.order_qty.find(id);
        c.reference[id] = it != unconstrained.policy.order_qty.end() ? it->second : 0.0;
        constrained.constraints.push_back(std::move(c));
    }
    return optimize(constrained, scenarios, config);
}

std::string trace_csv(const OptimizationResult& result) {
    std::ostringstream out;
    out << "iteration,incumbent_profit\n";
    for (std::size_t i = 0; i < result.incumbent_trace.size(); ++i)
        out << i << ',' << fmt_double(result.incumbent_trace[i]) << "\n";
    return out.str();
}

}  // namespace chainforge
