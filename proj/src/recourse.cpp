#include "chainforge/recourse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace chainforge::recourse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kCurveSegments = 32;

double curve_revenue(const CompiledMarket& m, std::size_t d, double sold, double dem) {
    const double price = m.curve_elasticity[d] * (sold - dem) + m.curve_base_price[d];
    return price * sold;
}

// Column layout used by both stage LPs: mapping usages first, then per
// (demand, sample) blocks of either one sold variable or kCurveSegments
// segment variables for curve-priced demands.
struct SoldBlock {
    std::size_t col = 0;    // first column
    std::size_t count = 0;  // 1 or kCurveSegments
    double width = 0.0;     // segment width for curve blocks
};

}  // namespace

double recourse_value(const CompiledMarket& market, std::span<const double> obtained,
                      std::span<const double> demanded, std::span<const double> usage) {
    (void)obtained;
    const std::size_t nd = market.num_demanded();
    std::vector<double> built(nd, 0.0);
    double value = 0.0;
    for (std::size_t j = 0; j < market.num_mappings(); ++j) {
        if (usage[j] == 0.0) continue;
        built[market.mapping_output[j]] += usage[j];
        value -= usage[j] * market.mapping_cost[j];
    }
    for (std::size_t d = 0; d < nd; ++d) {
        const double sold = std::min(demanded[d], built[d]);
        if (market.has_curve[d])
            value += curve_revenue(market, d, sold, demanded[d]);
        else
            value += market.unit_benefit[d] * sold;
        value -= market.unit_shortage[d] * (demanded[d] - sold);
        value += market.salvage[d] * (built[d] - sold);
    }
    return value;
}

namespace {

// Shared LP assembly. Each sample of each demand contributes weighted sold
// columns; weights are 1 for the stage-3 single sample.
lp::LpProblem build_usage_lp(const CompiledMarket& market, std::span<const double> obtained,
                             const DemandAtoms& demand) {
    const std::size_t nm = market.num_mappings();
    const std::size_t nd = market.num_demanded();

    std::vector<std::vector<SoldBlock>> blocks(nd);
    std::size_t ncols = nm;
    for (std::size_t d = 0; d < nd; ++d) {
        blocks[d].resize(demand.atoms[d].size());
        for (std::size_t a = 0; a < demand.atoms[d].size(); ++a) {
            SoldBlock& b = blocks[d][a];
            b.col = ncols;
            if (market.has_curve[d]) {
                b.count = kCurveSegments;
                b.width = demand.atoms[d][a].first / kCurveSegments;
            } else {
                b.count = 1;
            }
            ncols += b.count;
        }
    }
    // The dense tableau is roughly (2 * ncols)^2; joint Monte Carlo samples
    // funnelled into one stage-2 group blow this up, stratified cells do not.
    if (ncols > 2000)
        throw std::runtime_error(
            "recourse LP too large (" + std::to_string(ncols) +
            " columns); stage-2 recourse over many distinct demand samples needs the "
            "stratified or exhaustive sampling strategy");

    lp::LpProblem prob;
    prob.objective.assign(ncols, 0.0);
    prob.lower.assign(ncols, 0.0);
    prob.upper.assign(ncols, kInf);

    for (std::size_t j = 0; j < nm; ++j)
        prob.objective[j] = -market.mapping_cost[j] + market.salvage[market.mapping_output[j]];

    for (std::size_t d = 0; d < nd; ++d) {
        for (std::size_t a = 0; a < demand.atoms[d].size(); ++a) {
            const auto& [dem, w] = demand.atoms[d][a];
            const SoldBlock& b = blocks[d][a];
            if (!market.has_curve[d]) {
                prob.objective[b.col] =
                    w * (market.unit_benefit[d] + market.unit_shortage[d] - market.salvage[d]);
                prob.upper[b.col] = dem;
            } else {
                // Exact linearization of the concave revenue curve: segment
                // slopes are decreasing, so the LP fills them greedily.
                for (std::size_t s = 0; s < b.count; ++s) {
                    const double s0 = b.width * static_cast<double>(s);
                    const double s1 = b.width * static_cast<double>(s + 1);
                    const double slope =
                        b.width > 0.0
                            ? (curve_revenue(market, d, s1, dem) - curve_revenue(market, d, s0, dem)) /
                                  b.width
                            : 0.0;
                    prob.objective[b.col + s] =
                        w * (slope + market.unit_shortage[d] - market.salvage[d]);
                    prob.upper[b.col + s] = b.width;
                }
            }
        }
    }

    // Input capacity per produced good that any mapping consumes.
    for (std::size_t i = 0; i < market.num_produced(); ++i) {
        bool touched = false;
        std::vector<double> row(ncols, 0.0);
        for (std::size_t j = 0; j < nm; ++j) {
            for (const auto& use : market.mapping_inputs[j]) {
                if (static_cast<std::size_t>(use.good) == i) {
                    row[j] += use.qty;
                    touched = true;
                }
            }
        }
        if (touched) prob.add_row(std::move(row), lp::Relation::LessEqual, std::max(0.0, obtained[i]));
    }

    // sold <= built per (demand, sample).
    for (std::size_t d = 0; d < nd; ++d) {
        for (const SoldBlock& b : blocks[d]) {
            std::vector<double> row(ncols, 0.0);
            for (std::size_t s = 0; s < b.count; ++s) row[b.col + s] = 1.0;
            for (std::size_t j = 0; j < nm; ++j)
                if (static_cast<std::size_t>(market.mapping_output[j]) == d) row[j] -= 1.0;
            prob.add_row(std::move(row), lp::Relation::LessEqual, 0.0);
        }
    }
    return prob;
}

UsageSolution solve_usage_lp(const CompiledMarket& market, std::span<const double> obtained,
                             const DemandAtoms& demand, lp::LpWorkspace& ws) {
    const lp::LpProblem prob = build_usage_lp(market, obtained, demand);
    const lp::LpSolution sol = lp::solve_lp(prob, ws);
    if (sol.status != lp::LpStatus::Optimal)
        throw std::runtime_error("recourse LP not optimal (status " +
                                 std::to_string(static_cast<int>(sol.status)) + ")");

    UsageSolution out;
    out.usage.assign(sol.x.begin(), sol.x.begin() + static_cast<long>(market.num_mappings()));
    return out;
}

DemandAtoms single_sample(const CompiledMarket& market, std::span<const double> demanded) {
    DemandAtoms atoms;
    atoms.atoms.resize(market.num_demanded());
    for (std::size_t d = 0; d < market.num_demanded(); ++d)
        atoms.atoms[d] = {{demanded[d], 1.0}};
    return atoms;
}

}  // namespace

UsageSolution optimal_usage_stage3(const CompiledMarket& market, std::span<const double> obtained,
                                   std::span<const double> demanded, lp::LpWorkspace& ws) {
    UsageSolution sol = solve_usage_lp(market, obtained, single_sample(market, demanded), ws);
    sol.value = recourse_value(market, obtained, demanded, sol.usage);
    return sol;
}

namespace {

// The LP only needs the per-good marginals; duplicate atoms merge exactly.
DemandAtoms merge_atoms(const DemandAtoms& demand) {
    DemandAtoms merged;
    merged.atoms.resize(demand.atoms.size());
    for (std::size_t d = 0; d < demand.atoms.size(); ++d) {
        auto list = demand.atoms[d];
        std::sort(list.begin(), list.end());
        for (const auto& [v, w] : list) {
            if (!merged.atoms[d].empty() && merged.atoms[d].back().first == v)
                merged.atoms[d].back().second += w;
            else
                merged.atoms[d].push_back({v, w});
        }
    }
    return merged;
}

}  // namespace

UsageSolution optimal_usage_stage2(const CompiledMarket& market, std::span<const double> obtained,
                                   const DemandAtoms& raw_demand, lp::LpWorkspace& ws) {
    const DemandAtoms demand = merge_atoms(raw_demand);
    UsageSolution sol = solve_usage_lp(market, obtained, demand, ws);
    double value = 0.0;
    std::vector<double> dem(market.num_demanded(), 0.0);
    // Expected value over the sample product, good by good (the accounting is
    // separable across demands given the shared usage).
    for (std::size_t d = 0; d < market.num_demanded(); ++d) {
        double built = 0.0;
        for (std::size_t j = 0; j < market.num_mappings(); ++j)
            if (static_cast<std::size_t>(market.mapping_output[j]) == d) built += sol.usage[j];
        for (const auto& [q, w] : demand.atoms[d]) {
            const double sold = std::min(q, built);
            double v = market.has_curve[d] ? curve_revenue(market, d, sold, q)
                                           : market.unit_benefit[d] * sold;
            v -= market.unit_shortage[d] * (q - sold);
            v += market.salvage[d] * (built - sold);
            value += w * v;
        }
    }
    for (std::size_t j = 0; j < market.num_mappings(); ++j)
        value -= sol.usage[j] * market.mapping_cost[j];
    sol.value = value;
    return sol;
}

namespace {

std::vector<double> map_to_dense(const std::vector<std::string>& ids,
                                 const std::map<std::string, double>& values, const char* what) {
    std::vector<double> out(ids.size(), 0.0);
    for (const auto& [id, v] : values) {
        const auto it = std::find(ids.begin(), ids.end(), id);
        if (it == ids.end())
            throw std::invalid_argument(std::string(what) + ": unknown id '" + id + "'");
        out[static_cast<std::size_t>(it - ids.begin())] = v;
    }
    return out;
}

CompiledMarket compile_bare(const MarketSpec& spec) {
    return CompiledMarket::compile(spec, std::vector<std::string>{}, std::vector<std::string>{});
}

}  // namespace

UsageSolution optimal_usage_stage3(const MarketSpec& spec,
                                   const std::map<std::string, double>& obtained,
                                   const std::map<std::string, double>& demanded) {
    const CompiledMarket market = compile_bare(spec);
    lp::LpWorkspace ws;
    return optimal_usage_stage3(market, map_to_dense(market.produced_ids, obtained, "obtained"),
                                map_to_dense(market.demanded_ids, demanded, "demanded"), ws);
}

UsageSolution optimal_usage_stage2(
    const MarketSpec& spec, const std::map<std::string, double>& obtained,
    const std::vector<std::pair<std::map<std::string, double>, double>>& demand_samples) {
    if (demand_samples.empty())
        throw std::invalid_argument("optimal_usage_stage2: empty demand sample list");
    const CompiledMarket market = compile_bare(spec);
    double wsum = 0.0;
    for (const auto& [sample, w] : demand_samples) wsum += w;
    DemandAtoms atoms;
    atoms.atoms.resize(market.num_demanded());
    for (const auto& [sample, w] : demand_samples) {
        const std::vector<double> dem = map_to_dense(market.demanded_ids, sample, "demand sample");
        for (std::size_t d = 0; d < market.num_demanded(); ++d)
            atoms.atoms[d].push_back({dem[d], w / wsum});
    }
    lp::LpWorkspace ws;
    return optimal_usage_stage2(market, map_to_dense(market.produced_ids, obtained, "obtained"),
                                atoms, ws);
}

std::string dump_stage3_lp(const MarketSpec& spec, const std::map<std::string, double>& obtained,
                           const std::map<std::string, double>& demanded) {
    const CompiledMarket market = compile_bare(spec);
    const std::vector<double> obt = map_to_dense(market.produced_ids, obtained, "obtained");
    const std::vector<double> dem = map_to_dense(market.demanded_ids, demanded, "demanded");
    return lp::to_lp_text(build_usage_lp(market, obt, single_sample(market, dem)),
                          "stage3-recourse");
}

UsageSolution brute_force_usage(const CompiledMarket& market, std::span<const double> obtained,
                                std::span<const double> demanded, double grid_step) {
    const std::size_t nm = market.num_mappings();
    if (!(grid_step > 0.0)) throw std::invalid_argument("brute_force_usage: grid step must be > 0");

    std::vector<long> max_steps(nm, 0);
    double points = 1.0;
    for (std::size_t j = 0; j < nm; ++j) {
        double cap = kInf;
        for (const auto& use : market.mapping_inputs[j])
            cap = std::min(cap, obtained[use.good] / use.qty);
        max_steps[j] = cap == kInf ? 0 : static_cast<long>(std::floor(cap / grid_step + 1e-9));
        points *= static_cast<double>(max_steps[j] + 1);
        if (points > 1e6) throw std::invalid_argument("brute_force_usage: grid too large");
    }

    std::vector<double> usage(nm, 0.0), remaining(obtained.begin(), obtained.end());
    UsageSolution best;
    best.usage.assign(nm, 0.0);
    best.value = recourse_value(market, obtained, demanded, best.usage);

    // Depth-first over the integer grid, pruning infeasible branches.
    auto rec = [&](auto&& self, std::size_t j) -> void {
        if (j == nm) {
            const double v = recourse_value(market, obtained, demanded, usage);
            if (v > best.value + 1e-12) {
                best.value = v;
                best.usage = usage;
            }
            return;
        }
        for (long s = 0; s <= max_steps[j]; ++s) {
            const double u = static_cast<double>(s) * grid_step;
            bool feasible = true;
            for (const auto& use : market.mapping_inputs[j])
                if (u * use.qty > remaining[use.good] + 1e-9) feasible = false;
            if (!feasible) break;
            usage[j] = u;
            for (const auto& use : market.mapping_inputs[j]) remaining[use.good] -= u * use.qty;
            self(self, j + 1);
            for (const auto& use : market.mapping_inputs[j]) remaining[use.good] += u * use.qty;
            usage[j] = 0.0;
        }
    };
    rec(rec, 0);
    return best;
}

UsageSolution brute_force_usage(const MarketSpec& spec,
                                const std::map<std::string, double>& obtained,
                                const std::map<std::string, double>& demanded, double grid_step) {
    const CompiledMarket market = compile_bare(spec);
    return brute_force_usage(market, map_to_dense(market.produced_ids, obtained, "obtained"),
                             map_to_dense(market.demanded_ids, demanded, "demanded"), grid_step);
}

StagedEvaluator::StagedEvaluator(const MarketSpec& spec, const ScenarioSet& set, int threads)
    : set_(&set), market_(CompiledMarket::compile(spec, set)), threads_(std::max(1, threads)) {}

double StagedEvaluator::group_value(std::span<const double> order_qty, RecourseStage stage,
                                    std::size_t group, lp::LpWorkspace& ws,
                                    std::vector<double>* usage_out) const {
    const auto [begin, end] = set_->supply_groups[group];
    const std::size_t np = market_.num_produced();
    const std::size_t nd = market_.num_demanded();

    std::vector<double> received(np), obtained(np);
    const double* srow = set_->supply_row(begin);
    double group_weight = 0.0;
    for (std::size_t k = begin; k < end; ++k) group_weight += set_->weights[k];
    for (std::size_t i = 0; i < np; ++i) {
        const double zs = market_.supply_axis[i] >= 0 ? srow[market_.supply_axis[i]] : 1.0;
        received[i] = order_qty[i] * zs;
        obtained[i] = received[i] * market_.yield_rate[i];
    }
    double prod_var_cost = 0.0;
    for (std::size_t i = 0; i < np; ++i) prod_var_cost += received[i] * market_.unit_cost[i];

    std::vector<double> dem(nd);
    double value = -group_weight * prod_var_cost;

    if (stage == RecourseStage::MappingAfterSupplyAndDemand || end - begin == 1) {
        for (std::size_t k = begin; k < end; ++k) {
            market_.demand_quantities(*set_, k, dem);
            const UsageSolution sol = optimal_usage_stage3(market_, obtained, dem, ws);
            value += set_->weights[k] * sol.value;
            if (usage_out)
                std::copy(sol.usage.begin(), sol.usage.end(),
                          usage_out->begin() + static_cast<long>((k - begin) * market_.num_mappings()));
        }
        return value;
    }

    // Stage 2: one usage against the group's demand marginals, then exact
    // scenario-wise scoring of that usage.
    DemandAtoms atoms;
    atoms.atoms.resize(nd);
    for (std::size_t k = begin; k < end; ++k) {
        market_.demand_quantities(*set_, k, dem);
        for (std::size_t d = 0; d < nd; ++d)
            atoms.atoms[d].push_back({dem[d], set_->weights[k] / group_weight});
    }
    for (auto& list : atoms.atoms) {
        std::sort(list.begin(), list.end());
        std::vector<std::pair<double, double>> merged;
        for (const auto& [v, w] : list) {
            if (!merged.empty() && merged.back().first == v)
                merged.back().second += w;
            else
                merged.push_back({v, w});
        }
        list = std::move(merged);
    }
    const UsageSolution sol = solve_usage_lp(market_, obtained, atoms, ws);
    for (std::size_t k = begin; k < end; ++k) {
        market_.demand_quantities(*set_, k, dem);
        value += set_->weights[k] * recourse_value(market_, obtained, dem, sol.usage);
        if (usage_out)
            std::copy(sol.usage.begin(), sol.usage.end(),
                      usage_out->begin() + static_cast<long>((k - begin) * market_.num_mappings()));
    }
    return value;
}

double StagedEvaluator::evaluate(std::span<const double> order_qty, RecourseStage stage) const {
    const std::size_t ngroups = set_->supply_groups.size();
    std::vector<double> values(ngroups, 0.0);

    const int threads = threads_ > 1 && ngroups >= 8 ? threads_ : 1;
    if (threads == 1) {
        lp::LpWorkspace ws;
        for (std::size_t g = 0; g < ngroups; ++g)
            values[g] = group_value(order_qty, stage, g, ws, nullptr);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&, t]() {
                lp::LpWorkspace ws;
                for (std::size_t g = static_cast<std::size_t>(t); g < ngroups;
                     g += static_cast<std::size_t>(threads))
                    values[g] = group_value(order_qty, stage, g, ws, nullptr);
            });
        }
        for (auto& th : pool) th.join();
    }

    double total = 0.0;
    for (std::size_t g = 0; g < ngroups; ++g) total += values[g];  // fixed reduction order
    for (std::size_t i = 0; i < market_.num_produced(); ++i)
        if (order_qty[i] > kOrderEps) total -= market_.nre[i];
    return total;
}

std::vector<std::vector<double>> StagedEvaluator::usages(std::span<const double> order_qty,
                                                         RecourseStage stage) const {
    std::vector<std::vector<double>> out(set_->size());
    lp::LpWorkspace ws;
    const std::size_t nm = market_.num_mappings();
    for (std::size_t g = 0; g < set_->supply_groups.size(); ++g) {
        const auto [begin, end] = set_->supply_groups[g];
        std::vector<double> flat((end - begin) * nm, 0.0);
        group_value(order_qty, stage, g, ws, &flat);
        for (std::size_t k = begin; k < end; ++k)
            out[k].assign(flat.begin() + static_cast<long>((k - begin) * nm),
                          flat.begin() + static_cast<long>((k - begin + 1) * nm));
    }
    return out;
}

double StagedEvaluator::evaluate_fixed(std::span<const double> order_qty,
                                       const std::vector<std::vector<double>>& usage) const {
    if (usage.size() != set_->size())
        throw std::invalid_argument("evaluate_fixed: usage per scenario required");
    const std::size_t np = market_.num_produced();
    std::vector<double> received(np), obtained(np), dem(market_.num_demanded());
    double total = 0.0;
    for (std::size_t k = 0; k < set_->size(); ++k) {
        const double* srow = set_->supply_row(k);
        double prod_cost = 0.0;
        for (std::size_t i = 0; i < np; ++i) {
            const double zs = market_.supply_axis[i] >= 0 ? srow[market_.supply_axis[i]] : 1.0;
            received[i] = order_qty[i] * zs;
            obtained[i] = received[i] * market_.yield_rate[i];
            prod_cost += received[i] * market_.unit_cost[i];
        }
        market_.demand_quantities(*set_, k, dem);
        total += set_->weights[k] * (recourse_value(market_, obtained, dem, usage[k]) - prod_cost);
    }
    for (std::size_t i = 0; i < np; ++i)
        if (order_qty[i] > kOrderEps) total -= market_.nre[i];
    return total;
}

}  // namespace chainforge::recourse
