#include "hems/forecast_milp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

namespace hems {

DayForecastFn forecaster_fn(const Forecaster& f) {
    if (f.horizon != 24)
        throw DomainError("day planning needs horizon-24 forecasters");
    return [&f](std::span<const double> window) { return f.predict(window); };
}

DayPlan plan_day(const DayForecastFn& f_ec, const DayForecastFn& f_ghi,
                 const DayForecastFn& f_price, std::span<const double> ec_window,
                 std::span<const double> ghi_window,
                 std::span<const double> price_window, const SystemParams& params,
                 std::ostream* warnings, long node_limit) {
    params.validate();
    DayPlan plan;
    plan.forecast.consumption = f_ec(ec_window);
    plan.forecast.irradiation = f_ghi(ghi_window);
    plan.forecast.price = f_price(price_window);
    for (auto* series :
         {&plan.forecast.consumption, &plan.forecast.irradiation, &plan.forecast.price})
        for (auto& v : *series) v = std::max(v, 0.0);
    plan.forecast.validate(params.slots_per_day);
    try {
        plan.dispatch = solve_milp(build_day_model(plan.forecast, params), 1e-9,
                                   node_limit);
    } catch (const SolverError& e) {
        (warnings ? *warnings : std::clog)
            << "warning: day plan falls back to idle: " << e.what() << "\n";
        plan.dispatch = idle_dispatch(plan.forecast, params);
        plan.fallback = true;
    }
    return plan;
}

SlotDispatch execute_slot(const OptimalDispatch& plan, int t, double actual_e_ec,
                          double actual_e_res, double level,
                          const SystemParams& params) {
    if (t < 0 || t >= params.slots_per_day)
        throw DomainError("execute_slot index outside the day");
    if (actual_e_ec < 0.0 || actual_e_res < 0.0)
        throw DomainError("actual slot observables must be non-negative");
    const SlotDispatch& planned = plan.slots[static_cast<std::size_t>(t)];
    const double ch_cap = params.max_charge_energy();
    const double dh_cap = params.max_discharge_energy();

    SlotDispatch d;
    if (planned.charge_total() >= planned.discharge_total()) {
        d.charging = true;
        // RES components clip to what the sun actually delivered; the grid
        // never makes up a RES shortfall within the slot.
        double rl = std::min({planned.res_to_load, actual_e_res, actual_e_ec});
        double rc = std::min({planned.res_to_ess, actual_e_res - rl, ch_cap});
        double gc = std::min(planned.grid_to_ess, ch_cap - rc);
        const double room = std::max(params.level_max - level, 0.0) / params.ess_efficiency;
        const double total = rc + gc;
        if (total > room) {
            const double scale = total > 0.0 ? room / total : 0.0;
            rc *= scale;
            gc *= scale;
        }
        d.res_to_load = rl;
        d.res_to_ess = rc;
        d.grid_to_ess = gc;
    } else {
        d.charging = false;
        d.res_to_load = std::min(actual_e_res, actual_e_ec);
        double total = std::min(planned.discharge_total(), dh_cap);
        const double avail =
            std::max(level - params.level_min, 0.0) * params.ess_efficiency;
        total = std::min(total, avail);
        d.ess_to_load = std::min(total, std::max(actual_e_ec - d.res_to_load, 0.0));
        d.ess_to_sell = total - d.ess_to_load;
    }
    return d;
}

Strategy forecast_milp_strategy(const DayForecastFn& f_ec, const DayForecastFn& f_ghi,
                                const DayForecastFn& f_price, int window,
                                const SystemParams& params, std::ostream* warnings) {
    auto plan = std::make_shared<DayPlan>();
    auto planned = std::make_shared<bool>(false);
    return [f_ec, f_ghi, f_price, window, params, warnings, plan,
            planned](const SlotObservation& obs) {
        if (obs.t == 0) *planned = false;  // a new day invalidates the old plan
        if (!*planned) {
            const auto w = static_cast<std::size_t>(window);
            if (obs.cons_history.size() < w || obs.ghi_history.size() < w ||
                obs.price_history.size() < w)
                throw DataError("not enough history for the day-ahead forecasters");
            *plan = plan_day(f_ec, f_ghi, f_price,
                             obs.cons_history.subspan(obs.cons_history.size() - w),
                             obs.ghi_history.subspan(obs.ghi_history.size() - w),
                             obs.price_history.subspan(obs.price_history.size() - w),
                             params, warnings);
            *planned = true;
        }
        return execute_slot(plan->dispatch, obs.t, obs.e_ec,
                            res_energy(obs.ghi, params), obs.level, params);
    };
}

void dump_plan_csv(const DayPlan& plan, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "slot,forecast_e_ec,forecast_ghi,forecast_price,res_to_load,res_to_ess,"
           "grid_to_ess,ess_to_load,ess_to_sell,mode,planned_level\n";
    char buf[512];
    for (std::size_t t = 0; t < plan.dispatch.slots.size(); ++t) {
        const auto& d = plan.dispatch.slots[t];
        std::snprintf(buf, sizeof(buf),
                      "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s,%.17g\n",
                      t, plan.forecast.consumption[t], plan.forecast.irradiation[t],
                      plan.forecast.price[t], d.res_to_load, d.res_to_ess,
                      d.grid_to_ess, d.ess_to_load, d.ess_to_sell,
                      d.charging ? "charge" : "discharge", plan.dispatch.levels[t]);
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace hems
