#include "chainforge/lp.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace chainforge::lp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Tableau-based simplex minimizing the cost row. Columns are
// [structural+slacks | artificials | rhs]; `allowed` marks columns that may
// enter the basis. Bland's rule: smallest eligible entering index, leaving row
// breaks ratio ties on the smallest basis variable index.
enum class IterResult { Optimal, Unbounded };

IterResult iterate(std::vector<double>& t, std::vector<double>& cost, std::vector<int>& basis,
                   std::size_t m, std::size_t width, std::size_t allowed_cols) {
    const std::size_t rhs = width - 1;
    for (std::size_t iter = 0; iter < 200000; ++iter) {
        std::size_t enter = allowed_cols;
        for (std::size_t j = 0; j < allowed_cols; ++j) {
            if (cost[j] < -kPivotTol) {
                enter = j;
                break;
            }
        }
        if (enter == allowed_cols) return IterResult::Optimal;

        std::size_t leave = m;
        double best_ratio = kInf;
        for (std::size_t i = 0; i < m; ++i) {
            const double a = t[i * width + enter];
            if (a > kPivotTol) {
                const double ratio = t[i * width + rhs] / a;
                if (ratio < best_ratio - 1e-12 ||
                    (ratio < best_ratio + 1e-12 && (leave == m || basis[i] < basis[leave]))) {
                    best_ratio = ratio;
                    leave = i;
                }
            }
        }
        if (leave == m) return IterResult::Unbounded;

        const double pivot = t[leave * width + enter];
        double* prow = &t[leave * width];
        for (std::size_t j = 0; j < width; ++j) prow[j] /= pivot;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == leave) continue;
            const double f = t[i * width + enter];
            if (f == 0.0) continue;
            double* row = &t[i * width];
            for (std::size_t j = 0; j < width; ++j) row[j] -= f * prow[j];
        }
        const double cf = cost[enter];
        if (cf != 0.0)
            for (std::size_t j = 0; j < width; ++j) cost[j] -= cf * prow[j];
        basis[leave] = static_cast<int>(enter);
    }
    throw std::runtime_error("solve_lp: iteration limit exceeded");
}

}  // namespace

LpSolution solve_lp(const LpProblem& problem) {
    LpWorkspace ws;
    return solve_lp(problem, ws);
}

LpSolution solve_lp(const LpProblem& problem, LpWorkspace& ws) {
    const std::size_t n = problem.num_vars();
    for (double c : problem.objective)
        if (!std::isfinite(c)) throw std::invalid_argument("solve_lp: non-finite objective");
    for (const auto& row : problem.rows) {
        if (row.coeffs.size() != n)
            throw std::invalid_argument("solve_lp: row width != variable count");
        for (double c : row.coeffs)
            if (!std::isfinite(c)) throw std::invalid_argument("solve_lp: non-finite coefficient");
        if (!std::isfinite(row.rhs)) throw std::invalid_argument("solve_lp: non-finite rhs");
    }

    // Shift lower bounds to zero; finite upper bounds become extra rows.
    std::vector<double> lo(n, 0.0);
    if (!problem.lower.empty()) {
        if (problem.lower.size() != n) throw std::invalid_argument("solve_lp: bad lower bounds");
        lo = problem.lower;
    }
    std::vector<double> ub(n, kInf);
    if (!problem.upper.empty()) {
        if (problem.upper.size() != n) throw std::invalid_argument("solve_lp: bad upper bounds");
        ub = problem.upper;
    }

    std::size_t m = problem.rows.size();
    std::vector<std::size_t> bound_var;
    for (std::size_t j = 0; j < n; ++j) {
        if (std::isfinite(ub[j])) {
            if (ub[j] < lo[j] - kFeasTol) return {LpStatus::Infeasible, {}, 0.0};
            bound_var.push_back(j);
        }
    }
    m += bound_var.size();

    // Row signs normalized so every rhs is >= 0, then slack/surplus columns; a
    // row whose slack cannot start basic gets an artificial variable.
    std::vector<int>& basis = ws.basis;
    basis.assign(m, -1);
    std::vector<double>& rhs_s = ws.shifted_rhs;
    rhs_s.assign(m, 0.0);
    std::vector<int> sign(m, 1);
    std::vector<Relation> rel(m);
    std::size_t n_art = 0;

    for (std::size_t i = 0; i < m; ++i) {
        double r;
        Relation rl;
        if (i < problem.rows.size()) {
            const auto& row = problem.rows[i];
            r = row.rhs;
            for (std::size_t j = 0; j < n; ++j) r -= row.coeffs[j] * lo[j];
            rl = row.rel;
        } else {
            const std::size_t j = bound_var[i - problem.rows.size()];
            r = ub[j] - lo[j];
            rl = Relation::LessEqual;
        }
        if (r < 0.0) {
            sign[i] = -1;
            r = -r;
            if (rl == Relation::LessEqual)
                rl = Relation::GreaterEqual;
            else if (rl == Relation::GreaterEqual)
                rl = Relation::LessEqual;
        }
        rhs_s[i] = r;
        rel[i] = rl;
        if (rl != Relation::LessEqual) ++n_art;
    }

    const std::size_t n_slack = m;  // one slack/surplus column per row (zero for Equal)
    const std::size_t structural = n + n_slack;
    const std::size_t width = structural + n_art + 1;
    std::vector<double>& t = ws.tableau;
    t.assign(m * width, 0.0);

    std::size_t art = 0;
    for (std::size_t i = 0; i < m; ++i) {
        double* row = &t[i * width];
        if (i < problem.rows.size()) {
            const auto& src = problem.rows[i];
            for (std::size_t j = 0; j < n; ++j) row[j] = sign[i] * src.coeffs[j];
        } else {
            row[bound_var[i - problem.rows.size()]] = sign[i] * 1.0;
        }
        if (rel[i] == Relation::LessEqual) {
            row[n + i] = 1.0;
            basis[i] = static_cast<int>(n + i);
        } else if (rel[i] == Relation::GreaterEqual) {
            row[n + i] = -1.0;
        }
        if (rel[i] != Relation::LessEqual) {
            row[structural + art] = 1.0;
            basis[i] = static_cast<int>(structural + art);
            ++art;
        }
        row[width - 1] = rhs_s[i];
    }

    std::vector<double> cost(width, 0.0);
    if (n_art > 0) {
        // Phase 1: minimize the sum of artificials.
        for (std::size_t a = 0; a < n_art; ++a) cost[structural + a] = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (basis[i] >= static_cast<int>(structural)) {
                const double* row = &t[i * width];
                for (std::size_t j = 0; j < width; ++j) cost[j] -= row[j];
            }
        }
        iterate(t, cost, basis, m, width, structural + n_art);
        if (-cost[width - 1] > kFeasTol) return {LpStatus::Infeasible, {}, 0.0};

        // Drive artificials out of the basis so later pivots cannot push a
        // degenerate artificial back above zero. Rows with no non-artificial
        // entry are redundant and can never change again.
        for (std::size_t i = 0; i < m; ++i) {
            if (basis[i] < static_cast<int>(structural)) continue;
            double* row = &t[i * width];
            std::size_t enter = structural;
            for (std::size_t j = 0; j < structural; ++j) {
                if (std::fabs(row[j]) > kPivotTol) {
                    enter = j;
                    break;
                }
            }
            if (enter == structural) continue;
            const double pivot = row[enter];
            for (std::size_t j = 0; j < width; ++j) row[j] /= pivot;
            for (std::size_t r = 0; r < m; ++r) {
                if (r == i) continue;
                const double f = t[r * width + enter];
                if (f == 0.0) continue;
                for (std::size_t j = 0; j < width; ++j) t[r * width + j] -= f * row[j];
            }
            basis[i] = static_cast<int>(enter);
        }
    }

    // Phase 2: minimize -objective over structural columns; artificial columns
    // may not re-enter (any still basic sit at value zero).
    std::fill(cost.begin(), cost.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) cost[j] = -problem.objective[j];
    for (std::size_t i = 0; i < m; ++i) {
        const int b = basis[i];
        if (b >= 0 && b < static_cast<int>(n) && cost[b] != 0.0) {
            const double f = cost[b];
            const double* row = &t[i * width];
            for (std::size_t j = 0; j < width; ++j) cost[j] -= f * row[j];
        }
    }
    if (iterate(t, cost, basis, m, width, structural) == IterResult::Unbounded)
        return {LpStatus::Unbounded, {}, 0.0};

    LpSolution sol;
    sol.status = LpStatus::Optimal;
    sol.x.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const int b = basis[i];
        if (b >= 0 && b < static_cast<int>(n)) sol.x[b] = std::max(0.0, t[i * width + width - 1]);
    }
    double obj = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        sol.x[j] += lo[j];
        if (std::isfinite(ub[j]) && sol.x[j] > ub[j]) sol.x[j] = ub[j];
        obj += problem.objective[j] * sol.x[j];
    }
    sol.objective = obj;
    return sol;
}

std::string to_lp_text(const LpProblem& problem, const std::string& name) {
    std::ostringstream out;
    out.precision(17);
    out << "\\ " << name << "\nMaximize\n obj:";
    for (std::size_t j = 0; j < problem.num_vars(); ++j) {
        const double c = problem.objective[j];
        if (c == 0.0) continue;
        out << (c >= 0 ? " + " : " - ") << std::fabs(c) << " x" << j;
    }
    out << "\nSubject To\n";
    for (std::size_t i = 0; i < problem.rows.size(); ++i) {
        const auto& row = problem.rows[i];
        out << " c" << i << ":";
        bool any = false;
        for (std::size_t j = 0; j < row.coeffs.size(); ++j) {
            const double a = row.coeffs[j];
            if (a == 0.0) continue;
            out << (a >= 0 ? " + " : " - ") << std::fabs(a) << " x" << j;
            any = true;
        }
        if (!any) out << " 0 x0";
        switch (row.rel) {
            case Relation::LessEqual: out << " <= "; break;
            case Relation::Equal: out << " = "; break;
            case Relation::GreaterEqual: out << " >= "; break;
        }
        out << row.rhs << "\n";
    }
    out << "Bounds\n";
    for (std::size_t j = 0; j < problem.num_vars(); ++j) {
        const double lo = problem.lower.empty() ? 0.0 : problem.lower[j];
        const bool has_ub = !problem.upper.empty() && std::isfinite(problem.upper[j]);
        out << " " << lo << " <= x" << j;
        if (has_ub) out << " <= " << problem.upper[j];
        out << "\n";
    }
    out << "End\n";
    return out.str();
}

}  // namespace chainforge::lp
