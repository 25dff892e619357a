#include "hems/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

namespace hems {

namespace {

double snap_nonneg(double v) { return v < 1e-10 ? 0.0 : v; }

OptimalDispatch extract_dispatch(const MilpModel& model, const std::vector<double>& x) {
    OptimalDispatch out;
    out.slots.resize(model.slots);
    out.levels.resize(model.slots);
    double level = model.params.level_initial;
    double cost = 0.0;
    for (int t = 0; t < model.slots; ++t) {
        SlotDispatch& d = out.slots[static_cast<std::size_t>(t)];
        d.charging = x[model.var_mode(t)] > 0.5;
        d.res_to_load = snap_nonneg(x[model.var_res_load(t)]);
        if (d.charging) {
            d.res_to_ess = snap_nonneg(x[model.var_res_charge(t)]);
            d.grid_to_ess = snap_nonneg(x[model.var_grid_charge(t)]);
        } else {
            d.ess_to_load = snap_nonneg(x[model.var_ess_load(t)]);
            d.ess_to_sell = snap_nonneg(x[model.var_ess_sell(t)]);
        }
        level = ess_level_update(level, d, model.params);
        out.levels[static_cast<std::size_t>(t)] = level;
        cost += slot_cost(d, model.day.consumption[static_cast<std::size_t>(t)],
                          model.day.price[static_cast<std::size_t>(t)], model.params);
    }
    out.objective = cost;
    return out;
}

}  // namespace

MilpModel build_day_model(const DayProfile& day, const SystemParams& params) {
    params.validate();
    day.validate(params.slots_per_day);
    if (params.level_initial < params.level_min || params.level_initial > params.level_max)
        throw DomainError("level_initial outside [level_min, level_max]");

    MilpModel model;
    model.slots = params.slots_per_day;
    model.params = params;
    model.day = day;

    const int T = model.slots;
    const double ch_cap = params.max_charge_energy();
    const double dh_cap = params.max_discharge_energy();
    const double eta = params.ess_efficiency;
    LinearProgram& lp = model.lp;

    for (int t = 0; t < T; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        const double p = day.price[ts];
        const double e_res = res_energy(day.irradiation[ts], params);
        model.constant_cost += day.consumption[ts] * p;
        lp.add_var(-p, 0.0, e_res);                      // res_to_load
        lp.add_var(0.0, 0.0, std::min(e_res, ch_cap));   // res_to_ess
        lp.add_var(p, 0.0, ch_cap);                      // grid_to_ess
        lp.add_var(-p, 0.0, dh_cap);                     // ess_to_load
        lp.add_var(-params.sell_ratio * p, 0.0, dh_cap); // ess_to_sell
        const bool last = t == T - 1;
        lp.add_var(0.0, last ? params.level_initial : params.level_min,
                   last ? params.level_initial : params.level_max);  // level
    }
    for (int t = 0; t < T; ++t) lp.add_var(0.0, 0.0, 1.0);  // mode binaries

    for (int t = 0; t < T; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        const double e_res = res_energy(day.irradiation[ts], params);

        // Level recursion: lv_t - lv_{t-1} - eta*(rc + gc) + (el + es)/eta = [EL_0]
        LinearProgram::Row level_row;
        level_row.relation = LinearProgram::Relation::Equal;
        level_row.coeffs = {{model.var_level(t), 1.0},
                            {model.var_res_charge(t), -eta},
                            {model.var_grid_charge(t), -eta},
                            {model.var_ess_load(t), 1.0 / eta},
                            {model.var_ess_sell(t), 1.0 / eta}};
        if (t == 0) {
            level_row.rhs = params.level_initial;
        } else {
            level_row.coeffs.emplace_back(model.var_level(t - 1), -1.0);
            level_row.rhs = 0.0;
        }
        lp.rows.push_back(std::move(level_row));

        // Charge cap tied to the mode binary.
        lp.rows.push_back({{{model.var_res_charge(t), 1.0},
                            {model.var_grid_charge(t), 1.0},
                            {model.var_mode(t), -ch_cap}},
                           LinearProgram::Relation::LessEqual,
                           0.0});
        // Discharge cap tied to the complement of the mode binary.
        lp.rows.push_back({{{model.var_ess_load(t), 1.0},
                            {model.var_ess_sell(t), 1.0},
                            {model.var_mode(t), dh_cap}},
                           LinearProgram::Relation::LessEqual,
                           dh_cap});
        // RES split cap.
        lp.rows.push_back({{{model.var_res_load(t), 1.0}, {model.var_res_charge(t), 1.0}},
                           LinearProgram::Relation::LessEqual,
                           e_res});
        // Grid share of the load stays nonnegative.
        lp.rows.push_back({{{model.var_res_load(t), 1.0}, {model.var_ess_load(t), 1.0}},
                           LinearProgram::Relation::LessEqual,
                           day.consumption[ts]});
    }
    return model;
}

OptimalDispatch idle_dispatch(const DayProfile& day, const SystemParams& params) {
    OptimalDispatch out;
    out.slots.resize(params.slots_per_day);
    out.levels.assign(params.slots_per_day, params.level_initial);
    double cost = 0.0;
    for (int t = 0; t < params.slots_per_day; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        SlotDispatch& d = out.slots[ts];
        d.res_to_load = std::min(res_energy(day.irradiation[ts], params), day.consumption[ts]);
        cost += (day.consumption[ts] - d.res_to_load) * day.price[ts];
    }
    out.objective = cost;
    return out;
}

double lp_relaxation_objective(const MilpModel& model) {
    const LpResult r = solve_lp(model.lp);
    if (r.status != LpResult::Status::Optimal)
        throw SolverError("LP relaxation did not solve to optimality");
    return r.objective + model.constant_cost;
}

OptimalDispatch solve_milp(const MilpModel& model, double tol, long node_limit) {
    const auto start = std::chrono::steady_clock::now();
    OptimalDispatch incumbent = idle_dispatch(model.day, model.params);
    SolverStats stats;

    struct Node {
        std::vector<signed char> fixed;  // -1 free, 0 or 1 fixed
    };
    std::vector<Node> stack;
    stack.push_back({std::vector<signed char>(static_cast<std::size_t>(model.slots), -1)});

    LinearProgram lp = model.lp;
    const double int_tol = 1e-6;

    while (!stack.empty()) {
        if (++stats.nodes > node_limit) {
            incumbent.stats = stats;
            throw NodeLimitError("branch-and-bound node limit exceeded", incumbent);
        }
        Node node = std::move(stack.back());
        stack.pop_back();

        for (int t = 0; t < model.slots; ++t) {
            const int j = model.var_mode(t);
            const signed char f = node.fixed[static_cast<std::size_t>(t)];
            lp.lower[j] = f == 1 ? 1.0 : 0.0;
            lp.upper[j] = f == 0 ? 0.0 : 1.0;
        }
        const LpResult relax = solve_lp(lp);
        stats.simplex_iterations += relax.iterations;
        if (relax.status == LpResult::Status::IterationLimit)
            throw SolverError("simplex iteration limit exceeded");
        if (relax.status != LpResult::Status::Optimal) continue;  // infeasible branch
        const double bound = relax.objective + model.constant_cost;
        if (bound >= incumbent.objective - tol) continue;

        // Most fractional mode; lowest slot breaks ties.
        int branch_slot = -1;
        double best_frac = int_tol;
        for (int t = 0; t < model.slots; ++t) {
            const double v = relax.x[static_cast<std::size_t>(model.var_mode(t))];
            const double frac = std::min(v, 1.0 - v);
            if (frac > best_frac + 1e-12) {
                best_frac = frac;
                branch_slot = t;
            }
        }

        if (branch_slot < 0) {
            // Integral candidate: re-solve with all modes fixed at the rounded
            // values for a clean vertex, then promote to incumbent.
            Node fixed_node = node;
            for (int t = 0; t < model.slots; ++t) {
                const double v = relax.x[static_cast<std::size_t>(model.var_mode(t))];
                fixed_node.fixed[static_cast<std::size_t>(t)] = v > 0.5 ? 1 : 0;
                const int j = model.var_mode(t);
                lp.lower[j] = lp.upper[j] = v > 0.5 ? 1.0 : 0.0;
            }
            const LpResult exact = solve_lp(lp);
            stats.simplex_iterations += exact.iterations;
            if (exact.status != LpResult::Status::Optimal) continue;
            OptimalDispatch candidate = extract_dispatch(model, exact.x);
            if (candidate.objective < incumbent.objective) incumbent = std::move(candidate);
            continue;
        }

        const double v = relax.x[static_cast<std::size_t>(model.var_mode(branch_slot))];
        const signed char near = v >= 0.5 ? 1 : 0;
        Node far_child = node;
        far_child.fixed[static_cast<std::size_t>(branch_slot)] =
            static_cast<signed char>(1 - near);
        Node near_child = std::move(node);
        near_child.fixed[static_cast<std::size_t>(branch_slot)] = near;
        stack.push_back(std::move(far_child));
        stack.push_back(std::move(near_child));  // explored first
    }

    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    incumbent.stats = stats;
    return incumbent;
}

OptimalDispatch brute_force_oracle(const DayProfile& day, const SystemParams& params,
                                   double grid) {
    params.validate();
    day.validate(params.slots_per_day);
    if (!(grid > 0.0)) throw DomainError("oracle grid must be positive");
    const int T = params.slots_per_day;
    if (T > 6) throw SolverError("brute_force_oracle limited to T <= 6");

    const double ch_cap = params.max_charge_energy();
    const double dh_cap = params.max_discharge_energy();
    const double eta = params.ess_efficiency;

    // Candidate signed quantities per non-final slot.
    std::vector<double> actions;
    const long k_lo = -static_cast<long>(std::floor(dh_cap / grid + 1e-9));
    const long k_hi = static_cast<long>(std::floor(ch_cap / grid + 1e-9));
    for (long k = k_lo; k <= k_hi; ++k) actions.push_back(static_cast<double>(k) * grid);
    if (actions.empty() || actions.back() < ch_cap - 1e-12) actions.push_back(ch_cap);
    if (actions.front() > -dh_cap + 1e-12) actions.insert(actions.begin(), -dh_cap);

    double combos = 1.0;
    for (int t = 0; t + 1 < T; ++t) combos *= static_cast<double>(actions.size());
    if (combos > 2e7) throw SolverError("brute_force_oracle instance too large");

    std::vector<double> e_res(static_cast<std::size_t>(T));
    std::vector<double> res_load(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        e_res[ts] = res_energy(day.irradiation[ts], params);
        res_load[ts] = std::min(e_res[ts], day.consumption[ts]);
    }

    auto slot_cost_of = [&](int t, double e_cd) {
        const auto ts = static_cast<std::size_t>(t);
        return slot_cost_signed({e_cd}, res_load[ts], day.consumption[ts], e_res[ts],
                                day.price[ts], params);
    };
    auto level_after = [&](double level, double e_cd) {
        return e_cd >= 0.0 ? level + e_cd * eta : level + e_cd / eta;
    };

    std::vector<double> best_plan;
    double best_cost = kInf;
    std::vector<double> plan(static_cast<std::size_t>(T), 0.0);

    auto try_leaf = [&](double level, double partial_cost) {
        // Final slot is forced to return the level to level_initial exactly.
        const double delta = params.level_initial - level;
        double e_cd;
        if (delta >= 0.0) {
            e_cd = delta / eta;
            if (e_cd > ch_cap + 1e-12) return;
        } else {
            e_cd = delta * eta;
            if (e_cd < -dh_cap - 1e-12) return;
        }
        plan[static_cast<std::size_t>(T - 1)] = e_cd;
        const double total = partial_cost + slot_cost_of(T - 1, e_cd);
        if (total < best_cost) {
            best_cost = total;
            best_plan = plan;
        }
    };

    auto recurse = [&](auto&& self, int t, double level, double partial_cost) -> void {
        if (t == T - 1) {
            try_leaf(level, partial_cost);
            return;
        }
        for (double e_cd : actions) {
            const double next = level_after(level, e_cd);
            if (next < params.level_min - 1e-12 || next > params.level_max + 1e-12)
                continue;
            plan[static_cast<std::size_t>(t)] = e_cd;
            self(self, t + 1, next, partial_cost + slot_cost_of(t, e_cd));
        }
    };
    recurse(recurse, 0, params.level_initial, 0.0);

    if (best_plan.empty()) throw SolverError("brute_force_oracle found no feasible plan");

    OptimalDispatch out;
    out.slots.resize(static_cast<std::size_t>(T));
    out.levels.resize(static_cast<std::size_t>(T));
    double level = params.level_initial;
    for (int t = 0; t < T; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        out.slots[ts] = dispatch_from_signed({best_plan[ts]}, res_load[ts],
                                             day.consumption[ts], e_res[ts], params);
        level = ess_level_update(level, out.slots[ts], params);
        out.levels[ts] = level;
    }
    out.objective = best_cost;
    out.stats.approximate = true;
    return out;
}

void dump_lp_format(const MilpModel& model, std::ostream& out) {
    const LinearProgram& lp = model.lp;
    auto name = [&](int j) {
        if (j >= model.slots * 6) return "m" + std::to_string(j - model.slots * 6);
        static const char* kind[] = {"rl", "rc", "gc", "el", "es", "lv"};
        return std::string(kind[j % 6]) + std::to_string(j / 6);
    };
    out << "\\ constant term " << model.constant_cost << "\nMinimize\n obj:";
    for (int j = 0; j < lp.num_vars; ++j) {
        if (lp.objective[j] == 0.0) continue;
        out << (lp.objective[j] >= 0 ? " + " : " - ") << std::abs(lp.objective[j]) << " "
            << name(j);
    }
    out << "\nSubject To\n";
    int ri = 0;
    for (const auto& row : lp.rows) {
        out << " c" << ri++ << ":";
        for (auto [j, a] : row.coeffs)
            out << (a >= 0 ? " + " : " - ") << std::abs(a) << " " << name(j);
        out << (row.relation == LinearProgram::Relation::Equal ? " = " : " <= ")
            << row.rhs << "\n";
    }
    out << "Bounds\n";
    for (int j = 0; j < lp.num_vars; ++j) {
        out << " " << lp.lower[j] << " <= " << name(j) << " <= ";
        if (lp.upper[j] == kInf)
            out << "+inf\n";
        else
            out << lp.upper[j] << "\n";
    }
    out << "Binaries\n";
    for (int t = 0; t < model.slots; ++t) out << " " << name(model.var_mode(t));
    out << "\nEnd\n";
}

double check_dispatch_feasible(const OptimalDispatch& d, const DayProfile& day,
                               const SystemParams& params, double tol) {
    if (d.slots.size() != static_cast<std::size_t>(params.slots_per_day))
        throw DomainError("dispatch has wrong number of slots");
    double level = params.level_initial;
    double cost = 0.0;
    for (int t = 0; t < params.slots_per_day; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        const SlotDispatch& s = d.slots[ts];
        s.validate(params);
        const double e_res = res_energy(day.irradiation[ts], params);
        if (s.res_to_load + s.res_to_ess > e_res + tol)
            throw DomainError("RES usage exceeds RES production");
        level = ess_level_update(level, s, params);
        if (!d.levels.empty() && std::abs(level - d.levels[ts]) > tol)
            throw DomainError("stored level trajectory disagrees with recursion");
        cost += slot_cost(s, day.consumption[ts], day.price[ts], params);
    }
    if (std::abs(level - params.level_initial) > tol)
        throw DomainError("terminal level does not return to level_initial");
    return cost;
}

}  // namespace hems
