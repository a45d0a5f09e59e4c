#pragma once

#include <string>
#include <vector>

// A small dense linear-program solver. Instances in this engine are tiny
// (tens of variables, at most a few thousand rows), so a textbook two-phase
// primal simplex with Bland's anti-cycling rule is used: deterministic
// pivoting, identical problems yield identical bases.

namespace chainforge::lp {

inline constexpr double kFeasTol = 1e-7;   // constraint satisfaction
inline constexpr double kPivotTol = 1e-9;  // reduced-cost / pivot threshold

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Row {
    std::vector<double> coeffs;  // dense, one per variable
    Relation rel = Relation::LessEqual;
    double rhs = 0.0;
};

struct LpProblem {
    std::vector<double> objective;  // maximized
    std::vector<Row> rows;
    std::vector<double> lower;  // empty -> all zero
    std::vector<double> upper;  // empty -> all +inf

    std::size_t num_vars() const { return objective.size(); }
    void add_row(std::vector<double> coeffs, Relation rel, double rhs) {
        rows.push_back({std::move(coeffs), rel, rhs});
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
};

struct LpWorkspace {
    std::vector<double> tableau;
    std::vector<int> basis;
    std::vector<double> shifted_rhs;
};

LpSolution solve_lp(const LpProblem& problem);
LpSolution solve_lp(const LpProblem& problem, LpWorkspace& ws);

// Dump in the textual LP interchange format for external-solver cross-checks.
std::string to_lp_text(const LpProblem& problem, const std::string& name = "chainforge");

}  // namespace chainforge::lp
