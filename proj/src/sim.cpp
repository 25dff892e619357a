#include "hems/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "hems/core.hpp"

namespace hems {

RealizedDayResult simulate_day(const Strategy& strategy, const DayProfile& day,
                               const DayContext& context, const SystemParams& params) {
    params.validate();
    day.validate(params.slots_per_day);
    const auto slots = static_cast<std::size_t>(params.slots_per_day);

    // Rolling history buffers; realized actuals are appended after each slot
    // so the observation at slot t never reaches past hour t-1.
    std::vector<double> cons = context.consumption;
    std::vector<double> ghi = context.irradiation;
    std::vector<double> price = context.price;

    RealizedDayResult result;
    result.dispatches.reserve(slots);
    result.levels.reserve(slots);
    result.slot_seconds.reserve(slots);
    double level = params.level_initial;

    for (std::size_t t = 0; t < slots; ++t) {
        SlotObservation obs;
        obs.t = static_cast<int>(t);
        obs.e_ec = day.consumption[t];
        obs.ghi = day.irradiation[t];
        obs.price = day.price[t];
        obs.level = level;
        obs.cons_history = cons;
        obs.ghi_history = ghi;
        obs.price_history = price;

        const auto before = std::chrono::steady_clock::now();
        const SlotDispatch d = strategy(obs);
        const auto after = std::chrono::steady_clock::now();
        result.slot_seconds.push_back(
            std::chrono::duration<double>(after - before).count());

        d.validate(params);
        const double e_res = res_energy(obs.ghi, params);
        if (d.res_to_load + d.res_to_ess > e_res + kEnergyTol)
            throw DomainError("slot " + std::to_string(t) +
                              ": dispatch draws more RES energy than produced");
        if (d.res_to_load > obs.e_ec + kEnergyTol)
            throw DomainError("slot " + std::to_string(t) +
                              ": RES share of the load exceeds consumption");
        const double grid_load = obs.e_ec - d.ess_to_load - d.res_to_load;
        if (grid_load < -kEnergyTol)
            throw DomainError("slot " + std::to_string(t) +
                              ": load is over-served, grid share would be negative");

        level = ess_level_update(level, d, params);  // throws on bound violation
        result.cost += slot_cost(d, obs.e_ec, obs.price, params);
        result.res_waste += std::max(e_res - d.res_to_load - d.res_to_ess, 0.0);
        result.dispatches.push_back(d);
        result.levels.push_back(level);

        cons.push_back(obs.e_ec);
        ghi.push_back(obs.ghi);
        price.push_back(obs.price);
    }

    result.baseline = baseline_cost(day, params);
    result.terminal_residual = std::abs(level - params.level_initial);
    return result;
}

double baseline_cost(const DayProfile& day, const SystemParams& params) {
    day.validate(params.slots_per_day);
    double total = 0.0;
    for (std::size_t t = 0; t < day.consumption.size(); ++t)
        total += day.consumption[t] * day.price[t];
    return total;
}

void dump_result_csv(const RealizedDayResult& result, const DayProfile& day,
                     const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "slot,e_ec,price,res_to_load,res_to_ess,grid_to_ess,ess_to_load,"
           "ess_to_sell,mode,level,strategy_seconds\n";
    char buf[512];
    for (std::size_t t = 0; t < result.dispatches.size(); ++t) {
        const auto& d = result.dispatches[t];
        std::snprintf(buf, sizeof(buf),
                      "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s,%.17g,%.17g\n",
                      t, day.consumption[t], day.price[t], d.res_to_load, d.res_to_ess,
                      d.grid_to_ess, d.ess_to_load, d.ess_to_sell,
                      d.charging ? "charge" : "discharge", result.levels[t],
                      result.slot_seconds[t]);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "summary,cost=%.17g,baseline=%.17g,res_waste=%.17g,"
                  "terminal_residual=%.17g\n",
                  result.cost, result.baseline, result.res_waste,
                  result.terminal_residual);
    out << buf;
    if (!out) throw IoError("write failed: " + path);
}

Strategy idle_strategy() {
    return [](const SlotObservation&) { return SlotDispatch{}; };
}

}  // namespace hems
