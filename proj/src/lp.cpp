#include "hems/lp.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace hems {

namespace {

constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-7;

enum class VarState : unsigned char { AtLower, AtUpper, Basic };

// Dense working tableau for the two-phase method. Columns are laid out as
// structural variables, then slacks for <= rows, then one artificial per row.
class Simplex {
public:
    Simplex(const LinearProgram& lp, double pivot_tol, int max_iterations)
        : pivot_tol_(pivot_tol), max_iterations_(max_iterations) {
        m_ = static_cast<int>(lp.rows.size());
        n_struct_ = lp.num_vars;
        int n_slack = 0;
        for (const auto& row : lp.rows)
            if (row.relation == LinearProgram::Relation::LessEqual) ++n_slack;
        n_ = n_struct_ + n_slack + m_;
        art_begin_ = n_struct_ + n_slack;

        tab_.assign(static_cast<std::size_t>(m_) * n_, 0.0);
        rhs_sign_.assign(m_, 1.0);
        lower_ = lp.lower;
        upper_ = lp.upper;
        lower_.resize(n_, 0.0);
        upper_.resize(n_, kInf);

        cost_.assign(n_, 0.0);
        for (int j = 0; j < n_struct_; ++j) cost_[j] = lp.objective[j];

        x_.assign(n_, 0.0);
        state_.assign(n_, VarState::AtLower);
        for (int j = 0; j < n_struct_; ++j) {
            if (lower_[j] == -kInf && upper_[j] == kInf) {
                // Free structural variables are not needed by this codebase.
                lower_[j] = -1e30;
            }
            if (lower_[j] > -kInf) {
                x_[j] = lower_[j];
                state_[j] = VarState::AtLower;
            } else {
                x_[j] = upper_[j];
                state_[j] = VarState::AtUpper;
            }
        }

        basic_.assign(m_, -1);
        int slack = n_struct_;
        for (int i = 0; i < m_; ++i) {
            const auto& row = lp.rows[static_cast<std::size_t>(i)];
            double residual = row.rhs;
            for (auto [j, a] : row.coeffs) residual -= a * x_[j];
            if (row.relation == LinearProgram::Relation::LessEqual && residual >= 0.0) {
                // Slack starts basic and feasible; no artificial needed here,
                // but the artificial column stays (pinned to zero).
                for (auto [j, a] : row.coeffs) at(i, j) = a;
                at(i, slack) = 1.0;
                basic_[i] = slack;
                x_[slack] = residual;
                state_[slack] = VarState::Basic;
                upper_[art_begin_ + i] = 0.0;
                ++slack;
                continue;
            }
            // Scale the row so the artificial enters with +1 and value >= 0.
            const double s = residual < 0.0 ? -1.0 : 1.0;
            rhs_sign_[i] = s;
            for (auto [j, a] : row.coeffs) at(i, j) = s * a;
            if (row.relation == LinearProgram::Relation::LessEqual) {
                at(i, slack) = s;
                ++slack;
            }
            const int art = art_begin_ + i;
            at(i, art) = 1.0;
            basic_[i] = art;
            x_[art] = std::fabs(residual);
            state_[art] = VarState::Basic;
        }
    }

    LpResult run(const LinearProgram& lp) {
        LpResult result;

        bool any_artificial = false;
        for (int i = 0; i < m_; ++i) any_artificial |= basic_[i] >= art_begin_;
        if (any_artificial) {
            std::vector<double> phase1(n_, 0.0);
            for (int j = art_begin_; j < n_; ++j) phase1[j] = 1.0;
            const auto status = iterate(phase1);
            if (status == LpResult::Status::IterationLimit) {
                result.status = status;
                result.iterations = iterations_;
                return result;
            }
            double infeas = 0.0;
            for (int j = art_begin_; j < n_; ++j) infeas += x_[j];
            if (infeas > kFeasTol) {
                result.status = LpResult::Status::Infeasible;
                result.iterations = iterations_;
                return result;
            }
        }
        for (int j = art_begin_; j < n_; ++j) upper_[j] = 0.0;

        result.status = iterate(cost_);
        result.iterations = iterations_;
        if (result.status != LpResult::Status::Optimal) return result;

        result.x.assign(x_.begin(), x_.begin() + n_struct_);
        result.objective = 0.0;
        for (int j = 0; j < n_struct_; ++j)
            result.objective += lp.objective[j] * result.x[j];
        return result;
    }

private:
    double& at(int i, int j) { return tab_[static_cast<std::size_t>(i) * n_ + j]; }
    double at(int i, int j) const { return tab_[static_cast<std::size_t>(i) * n_ + j]; }

    // Reduced costs for the given cost vector under the current basis.
    std::vector<double> reduced_costs(const std::vector<double>& c) const {
        std::vector<double> d = c;
        for (int i = 0; i < m_; ++i) {
            const double cb = c[basic_[i]];
            if (cb == 0.0) continue;
            const double* row = &tab_[static_cast<std::size_t>(i) * n_];
            for (int j = 0; j < n_; ++j) d[j] -= cb * row[j];
        }
        return d;
    }

    LpResult::Status iterate(const std::vector<double>& c) {
        std::vector<double> d = reduced_costs(c);
        int degenerate_streak = 0;

        while (true) {
            if (++iterations_ > max_iterations_)
                return LpResult::Status::IterationLimit;
            const bool bland = degenerate_streak > 2 * (m_ + n_);

            int enter = -1;
            double enter_dir = 0.0;
            double best = kCostTol;
            for (int j = 0; j < n_; ++j) {
                if (state_[j] == VarState::Basic) continue;
                if (lower_[j] == upper_[j]) continue;
                double viol = 0.0;
                double dir = 0.0;
                if (state_[j] == VarState::AtLower && d[j] < -kCostTol) {
                    viol = -d[j];
                    dir = 1.0;
                } else if (state_[j] == VarState::AtUpper && d[j] > kCostTol) {
                    viol = d[j];
                    dir = -1.0;
                } else {
                    continue;
                }
                if (bland) {
                    enter = j;
                    enter_dir = dir;
                    break;
                }
                if (viol > best) {
                    best = viol;
                    enter = j;
                    enter_dir = dir;
                }
            }
            if (enter < 0) return LpResult::Status::Optimal;

            // Ratio test: step length before a basic variable or the entering
            // variable itself hits a bound.
            double t_max = upper_[enter] - lower_[enter];
            int leave_row = -1;
            double leave_bound = 0.0;
            for (int i = 0; i < m_; ++i) {
                const double a = at(i, enter);
                if (std::fabs(a) <= pivot_tol_) continue;
                const double delta = -enter_dir * a;  // d x_B(i) / d t
                const int b = basic_[i];
                double limit = kInf;
                double bound = 0.0;
                if (delta < 0.0 && lower_[b] > -kInf) {
                    limit = (x_[b] - lower_[b]) / (-delta);
                    bound = lower_[b];
                } else if (delta > 0.0 && upper_[b] < kInf) {
                    limit = (upper_[b] - x_[b]) / delta;
                    bound = upper_[b];
                } else {
                    continue;
                }
                if (limit < -1e-12) limit = 0.0;
                const bool tighter =
                    limit < t_max - 1e-12 ||
                    (limit < t_max + 1e-12 && leave_row >= 0 &&
                     (bland ? basic_[i] < basic_[leave_row]
                            : std::fabs(a) > std::fabs(at(leave_row, enter))));
                if (tighter) {
                    t_max = std::max(limit, 0.0);
                    leave_row = i;
                    leave_bound = bound;
                }
            }

            if (t_max == kInf) return LpResult::Status::Unbounded;
            degenerate_streak = t_max <= 1e-12 ? degenerate_streak + 1 : 0;

            // Apply the step to the primal values.
            x_[enter] += enter_dir * t_max;
            for (int i = 0; i < m_; ++i) {
                const double a = at(i, enter);
                if (a != 0.0) x_[basic_[i]] -= enter_dir * a * t_max;
            }

            if (leave_row < 0) {
                // Bound flip: entering variable crosses to its other bound.
                state_[enter] = state_[enter] == VarState::AtLower ? VarState::AtUpper
                                                                   : VarState::AtLower;
                x_[enter] = state_[enter] == VarState::AtLower ? lower_[enter]
                                                               : upper_[enter];
                continue;
            }

            const int leave = basic_[leave_row];
            x_[leave] = leave_bound;  // snap exactly
            state_[leave] =
                leave_bound == lower_[leave] ? VarState::AtLower : VarState::AtUpper;
            state_[enter] = VarState::Basic;
            basic_[leave_row] = enter;

            // Pivot the tableau and the reduced-cost row.
            double* prow = &tab_[static_cast<std::size_t>(leave_row) * n_];
            const double piv = prow[enter];
            const double inv = 1.0 / piv;
            for (int j = 0; j < n_; ++j) prow[j] *= inv;
            prow[enter] = 1.0;
            for (int i = 0; i < m_; ++i) {
                if (i == leave_row) continue;
                double* row = &tab_[static_cast<std::size_t>(i) * n_];
                const double f = row[enter];
                if (f == 0.0) continue;
                for (int j = 0; j < n_; ++j) row[j] -= f * prow[j];
                row[enter] = 0.0;
            }
            const double df = d[enter];
            if (df != 0.0) {
                for (int j = 0; j < n_; ++j) d[j] -= df * prow[j];
                d[enter] = 0.0;
            }
        }
    }

    double pivot_tol_;
    int max_iterations_;
    int iterations_ = 0;
    int m_ = 0;
    int n_ = 0;         // total columns
    int n_struct_ = 0;  // structural columns
    int art_begin_ = 0;
    std::vector<double> tab_;
    std::vector<double> rhs_sign_;
    std::vector<double> lower_, upper_, cost_, x_;
    std::vector<VarState> state_;
    std::vector<int> basic_;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, double pivot_tol, int max_iterations) {
    assert(static_cast<int>(lp.objective.size()) == lp.num_vars);
    assert(static_cast<int>(lp.lower.size()) == lp.num_vars);
    assert(static_cast<int>(lp.upper.size()) == lp.num_vars);
    for (int j = 0; j < lp.num_vars; ++j) {
        if (lp.lower[j] > lp.upper[j]) {
            LpResult r;
            r.status = LpResult::Status::Infeasible;
            return r;
        }
    }
    Simplex simplex(lp, pivot_tol, max_iterations);
    return simplex.run(lp);
}

}  // namespace hems
