#include "chainforge/chipcost.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace chainforge::chipcost {

long dies_per_wafer(double wafer_radius_mm, double area_mm2) {
    if (!(area_mm2 > 0.0) || !(wafer_radius_mm > std::sqrt(area_mm2))) {
        throw std::invalid_argument("dies_per_wafer: requires R > sqrt(A) > 0 (R=" +
                                    std::to_string(wafer_radius_mm) +
                                    ", A=" + std::to_string(area_mm2) + ")");
    }
    const double edge = wafer_radius_mm - std::sqrt(area_mm2);
    return static_cast<long>(std::floor(M_PI * edge * edge / area_mm2));
}

double die_yield(const DieSpec& die) {
    const double frac_crit = std::min(1.0, die.frac_crit_wire + die.frac_crit_logic);
    const double a_crit = die.area_mm2 * frac_crit;
    return std::pow(1.0 + (die.defect_density / die.n_layers) * a_crit / die.alpha, -die.alpha);
}

double re_cost(const DieSpec& die, const CostParams& params) {
    const double good_dies =
        static_cast<double>(dies_per_wafer(params.wafer_radius_mm, die.area_mm2)) * die_yield(die);
    if (!(good_dies > 0.0)) throw std::runtime_error("re_cost: zero good dies per wafer");
    return params.order / good_dies * params.re_wafer_cost;
}

double nre_cost(const DieSpec& die, const CostParams& params) {
    return params.nre_design_cost_per_mm2 * die.area_mm2 + params.nre_mask_set_cost;
}

double unit_cost(const DieSpec& die, const CostParams& params) {
    const double nre = params.re_only_unit_cost ? 0.0 : nre_cost(die, params);
    return 2.0 * (re_cost(die, params) + nre) / params.order;
}

double unit_benefit(double unit_cost, double nre, double base_demand) {
    if (!(base_demand > 0.0)) throw std::invalid_argument("unit_benefit: base_demand must be > 0");
    return 2.0 * (unit_cost + nre / base_demand);
}

double interposer_cost(double composed_area_mm2, const CostParams& params) {
    return params.interposer_cost_per_mm2 * composed_area_mm2;
}

DieSpec die_for_cores(int cores, const CostParams& params) {
    DieSpec die;
    die.area_mm2 = params.area_per_core_mm2 * static_cast<double>(cores);
    die.defect_density = params.defect_density;
    return die;
}

GoodEconomics good_economics(int cores, const CostParams& params) {
    const DieSpec die = die_for_cores(cores, params);
    GoodEconomics econ;
    econ.unit_cost = unit_cost(die, params);
    econ.nre = nre_cost(die, params);
    econ.yield = die_yield(die);
    econ.unit_benefit = unit_benefit(econ.unit_cost, econ.nre, params.base_demand);
    return econ;
}

double composition_validation(const CostParams& params) {
    const DieSpec mono = die_for_cores(32, params);
    const DieSpec chiplet = die_for_cores(8, params);
    const double chiplet_route =
        4.0 * unit_cost(chiplet, params) + interposer_cost(mono.area_mm2, params);
    return unit_cost(mono, params) / chiplet_route;
}

}  // namespace chainforge::chipcost
