#pragma once

#include <stdexcept>

// Derives the economic parameters of a die (yield, RE/NRE cost, unit cost,
// unit benefit) from its physical parameters. Cost numbers are normalized to
// the cost of a 45nm wafer; dies are costed for a 300mm wafer by default.

namespace chainforge::chipcost {

// Shipped defaults. Defect density, per-core area, NRE constants and the
// interposer rate were chosen by a calibration search so that the default
// 16/8/4-core market reproduces the published unit-cost and chiplet-ratio
// reference points (see validate-costs).
inline constexpr double kDefaultDefectDensity = 0.004898;   // defects per mm^2
inline constexpr double kDefaultAreaPerCore = 44.4154;      // mm^2 per core at 22nm
inline constexpr double kDefaultNreDesignPerMm2 = 1470.8;
inline constexpr double kDefaultNreMaskSetCost = 261.0;
inline constexpr double kDefaultInterposerPerMm2 = 2.8e-6;  // per mm^2 of composed chip

struct DieSpec {
    double area_mm2 = 0.0;
    double n_layers = 13.0;  // 1 device layer + 12 metal layers
    double frac_crit_wire = 0.2625;
    double frac_crit_logic = 0.75;
    double alpha = 1.0;  // defect clustering
    double defect_density = kDefaultDefectDensity;
};

struct CostParams {
    double wafer_radius_mm = 150.0;
    double re_wafer_cost = 2.43;  // per wafer, normalized to 45nm wafer cost
    double nre_design_cost_per_mm2 = kDefaultNreDesignPerMm2;
    double nre_mask_set_cost = kDefaultNreMaskSetCost;
    double interposer_cost_per_mm2 = kDefaultInterposerPerMm2;
    double area_per_core_mm2 = kDefaultAreaPerCore;
    double defect_density = kDefaultDefectDensity;
    double order = 1e8;        // units ordered when amortizing RE/NRE
    double base_demand = 1e8;  // units demanded per market good
    bool re_only_unit_cost = false;  // sensitivity flag: drop NRE from unit cost
};

// floor(pi * (R - sqrt(A))^2 / A); requires R > sqrt(A) > 0.
long dies_per_wafer(double wafer_radius_mm, double area_mm2);

// (1 + (D0/n) * A_crit / alpha)^(-alpha) with A_crit = A * min(1, fc_wire + fc_logic).
double die_yield(const DieSpec& die);

double re_cost(const DieSpec& die, const CostParams& params);
double nre_cost(const DieSpec& die, const CostParams& params);

// 2 * (RE + NRE) / order (RE only under the sensitivity flag).
double unit_cost(const DieSpec& die, const CostParams& params);

// 2 * (unit_cost + nre / base_demand); shortage cost is set equal to this.
double unit_benefit(double unit_cost, double nre, double base_demand);

double interposer_cost(double composed_area_mm2, const CostParams& params);

DieSpec die_for_cores(int cores, const CostParams& params);

struct GoodEconomics {
    double unit_cost = 0.0;
    double nre = 0.0;
    double yield = 1.0;
    double unit_benefit = 0.0;
};
GoodEconomics good_economics(int cores, const CostParams& params);

// Unit cost of a 32-core monolithic die over the cost of four 8-core chiplets
// plus a 32-core-sized interposer.
double composition_validation(const CostParams& params);

}  // namespace chainforge::chipcost
