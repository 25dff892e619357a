#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hems/core.hpp"

namespace hems {

/// What a strategy is allowed to see when dispatching slot t: the slot's own
/// observables, the battery level entering the slot, and hourly history up to
/// and including hour t-1. Nothing beyond slot t is reachable through this
/// interface.
struct SlotObservation {
    int t = 0;             // slot index within the day
    double e_ec = 0.0;     // actual consumption of slot t (kWh)
    double ghi = 0.0;      // actual irradiation of slot t (kW/m^2)
    double price = 0.0;    // actual buy price of slot t
    double level = 0.0;    // ESS level entering slot t (kWh)
    std::span<const double> cons_history;   // ends at hour t-1
    std::span<const double> ghi_history;    // ends at hour t-1
    std::span<const double> price_history;  // ends at hour t-1
};

using Strategy = std::function<SlotDispatch(const SlotObservation&)>;

/// Hourly values strictly preceding the simulated day, newest last. May be
/// empty for strategies that ignore history.
struct DayContext {
    std::vector<double> consumption;
    std::vector<double> irradiation;
    std::vector<double> price;
};

struct RealizedDayResult {
    double cost = 0.0;                    // Σ slot_cost of the realized dispatch
    double baseline = 0.0;                // cost without ESS and RES
    double res_waste = 0.0;               // Σ Eq. (8) slack, kWh
    double terminal_residual = 0.0;       // |level(T) - level_initial|, kWh
    std::vector<SlotDispatch> dispatches; // size T
    std::vector<double> levels;           // level after each slot, size T
    std::vector<double> slot_seconds;     // strategy wall time per slot
};

/// Replays `strategy` against the day's actuals slot by slot, enforcing the
/// physics: RES caps, battery bounds, and a non-negative grid share of the
/// load. A dispatch that violates them throws DomainError — strategies are
/// contractually required to project into the feasible set themselves.
RealizedDayResult simulate_day(const Strategy& strategy, const DayProfile& day,
                               const DayContext& context, const SystemParams& params);

/// Cost of serving the day entirely from the grid (no ESS, no RES).
double baseline_cost(const DayProfile& day, const SystemParams& params);

/// One CSV row per slot plus a trailing summary row.
void dump_result_csv(const RealizedDayResult& result, const DayProfile& day,
                     const std::string& path);

/// The do-nothing strategy: every flow zero, grid serves the whole load.
Strategy idle_strategy();

}  // namespace hems
