#pragma once

#include <string>
#include <vector>

#include "hems/milp.hpp"
#include "hems/sim.hpp"

namespace hems {

/// A strategy entered into the monthly comparison. `day_ahead` marks
/// strategies that compute a whole-day plan inside slot 0 (the forecast-MILP
/// strategy); their slot-0 wall time is booked as planning time instead of
/// inference time so the per-slot comparison stays hour-ahead only.
struct NamedStrategy {
    std::string name;
    Strategy strategy;
    bool day_ahead = false;
};

struct StrategyEval {
    std::string name;
    std::vector<double> daily_costs;
    double effectiveness = 0.0;      // Eq. (20), percent
    double res_waste_total = 0.0;    // kWh over the whole month
    double mean_slot_seconds = 0.0;  // hour-ahead inference time
    double mean_plan_seconds = 0.0;  // per-day planning time (day-ahead only)
};

struct EvaluationReport {
    std::vector<double> baseline_costs;  // per day, no ESS and no RES
    std::vector<double> milp_costs;      // per day, end-of-day optimum
    std::vector<StrategyEval> strategies;
};

/// Eq. (20): a strategy's average saving relative to the optimizer's average
/// saving, in percent. Requires equal lengths, base > 0, and base >= milp on
/// every day; throws DomainError when the optimizer saves nothing at all
/// (zero denominator makes the metric undefined).
double effectiveness(const std::vector<double>& costs_strategy,
                     const std::vector<double>& costs_milp,
                     const std::vector<double>& costs_base);

/// Replays every strategy over the test days, solving the end-of-day MILP
/// reference per day, and aggregates costs, effectiveness, RES waste, and
/// timing. History starts from `initial_context` and grows with each day's
/// actuals, so forecast-driven strategies always see realized data only.
EvaluationReport evaluate_month(const std::vector<NamedStrategy>& strategies,
                                const std::vector<DayProfile>& days,
                                const DayContext& initial_context,
                                const SystemParams& params,
                                long node_limit = 200000);

/// Writes costs.csv, summary.csv, costs.svg, effectiveness.svg, and waste.svg
/// into `out_dir` (created if missing). Emission is deterministic: the same
/// report produces byte-identical files.
void emit_report(const EvaluationReport& report, const std::string& out_dir);

}  // namespace hems
