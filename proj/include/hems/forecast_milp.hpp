#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>

#include "hems/forecast.hpp"
#include "hems/milp.hpp"
#include "hems/sim.hpp"

namespace hems {

/// Maps a trailing window of one series to its next-24-hour forecast.
using DayForecastFn = std::function<std::vector<double>(std::span<const double>)>;

/// Wraps a trained horizon-24 forecaster as a forecast function.
DayForecastFn forecaster_fn(const Forecaster& f);

struct DayPlan {
    OptimalDispatch dispatch;
    DayProfile forecast;    // the forecast day the plan was computed on
    bool fallback = false;  // true when the solver failed and idle was used
};

/// Algorithm-3 planning: forecast the whole day, then solve the MILP on the
/// forecasts. Solver failure falls back to the idle plan with a warning on
/// `warnings` (default std::clog).
DayPlan plan_day(const DayForecastFn& f_ec, const DayForecastFn& f_ghi,
                 const DayForecastFn& f_price, std::span<const double> ec_window,
                 std::span<const double> ghi_window,
                 std::span<const double> price_window, const SystemParams& params,
                 std::ostream* warnings = nullptr, long node_limit = 200000);

/// Executes slot t (0-based) of the plan against the realized slot: planned
/// RES components are clipped to the actual RES with no intra-slot grid
/// compensation, and everything is projected into rate and level bounds.
SlotDispatch execute_slot(const OptimalDispatch& plan, int t, double actual_e_ec,
                          double actual_e_res, double level, const SystemParams& params);

/// Day-ahead strategy: plans once at slot 0 from the observation history,
/// then executes the stored schedule open-loop.
Strategy forecast_milp_strategy(const DayForecastFn& f_ec, const DayForecastFn& f_ghi,
                                const DayForecastFn& f_price, int window,
                                const SystemParams& params,
                                std::ostream* warnings = nullptr);

/// 24 rows of planned dispatch columns.
void dump_plan_csv(const DayPlan& plan, const std::string& path);

}  // namespace hems
