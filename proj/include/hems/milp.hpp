#pragma once

#include <iosfwd>
#include <vector>

#include "hems/core.hpp"
#include "hems/lp.hpp"

namespace hems {

/// Daily cost minimization as a MILP. Per slot: 6 continuous variables
/// (res_to_load, res_to_ess, grid_to_ess, ess_to_load, ess_to_sell, level)
/// and one binary mode variable. The grid share of the load is eliminated
/// through the balance equation; its nonnegativity is kept as a row.
struct MilpModel {
    LinearProgram lp;
    int slots = 0;
    double constant_cost = 0.0;  // sum of consumption * price, dropped from lp.objective
    SystemParams params;
    DayProfile day;

    // Variable layout helpers.
    int var_res_load(int t) const { return t * 6 + 0; }
    int var_res_charge(int t) const { return t * 6 + 1; }
    int var_grid_charge(int t) const { return t * 6 + 2; }
    int var_ess_load(int t) const { return t * 6 + 3; }
    int var_ess_sell(int t) const { return t * 6 + 4; }
    int var_level(int t) const { return t * 6 + 5; }
    int var_mode(int t) const { return slots * 6 + t; }
};

struct SolverStats {
    long nodes = 0;
    long simplex_iterations = 0;
    double wall_seconds = 0.0;
    bool approximate = false;
};

struct OptimalDispatch {
    std::vector<SlotDispatch> slots;
    std::vector<double> levels;  // after each slot
    double objective = 0.0;      // currency, includes the constant term
    SolverStats stats;
};

class NodeLimitError : public SolverError {
public:
    NodeLimitError(const std::string& what, OptimalDispatch best)
        : SolverError(what), incumbent(std::move(best)) {}
    OptimalDispatch incumbent;
};

MilpModel build_day_model(const DayProfile& day, const SystemParams& params);

/// Exact branch-and-bound over the mode binaries. Branches on the most
/// fractional mode (lowest slot on ties), depth-first, incumbent seeded with
/// the idle dispatch. Result objective is within `tol` of the true optimum.
OptimalDispatch solve_milp(const MilpModel& model, double tol = 1e-9,
                           long node_limit = 200000);

/// Objective of the LP relaxation (lower bound on the MILP optimum).
double lp_relaxation_objective(const MilpModel& model);

/// Validation oracle: enumerates the signed charge/discharge quantity on a
/// grid for all but the last slot; the last slot is forced to return the
/// level to its initial value. Exact-feasible, approximately optimal.
OptimalDispatch brute_force_oracle(const DayProfile& day, const SystemParams& params,
                                   double grid);

/// Dispatch that leaves the battery alone and feeds available RES to the load.
OptimalDispatch idle_dispatch(const DayProfile& day, const SystemParams& params);

/// Writes the model in LP text format for cross-checking with other solvers.
void dump_lp_format(const MilpModel& model, std::ostream& out);

/// Throws unless the dispatch satisfies every per-slot invariant, the level
/// recursion, bounds, and the terminal condition; returns total cost.
double check_dispatch_feasible(const OptimalDispatch& d, const DayProfile& day,
                               const SystemParams& params, double tol = kEnergyTol);

}  // namespace hems
