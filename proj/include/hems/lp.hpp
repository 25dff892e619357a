#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace hems {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Minimize c.x subject to sparse rows (<= or =) and box bounds on x.
struct LinearProgram {
    enum class Relation { LessEqual, Equal };

    struct Row {
        std::vector<std::pair<int, double>> coeffs;  // (variable index, coefficient)
        Relation relation = Relation::LessEqual;
        double rhs = 0.0;
    };

    int num_vars = 0;
    std::vector<double> objective;
    std::vector<double> lower;
    std::vector<double> upper;  // kInf allowed
    std::vector<Row> rows;

    int add_var(double cost, double lo, double hi) {
        objective.push_back(cost);
        lower.push_back(lo);
        upper.push_back(hi);
        return num_vars++;
    }
};

struct LpResult {
    enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };
    Status status = Status::Infeasible;
    double objective = 0.0;
    std::vector<double> x;
    int iterations = 0;
};

/// Two-phase primal simplex on the bounded-variable form. Dense tableau;
/// Dantzig pricing with a Bland fallback after a degenerate streak.
LpResult solve_lp(const LinearProgram& lp, double pivot_tol = 1e-10,
                  int max_iterations = 200000);

}  // namespace hems
