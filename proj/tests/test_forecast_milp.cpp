#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "hems/forecast_milp.hpp"
#include "test_util.hpp"

using namespace hems;
using namespace hems::testutil;

namespace {

DayForecastFn fixed_forecast(std::vector<double> values) {
    return [values](std::span<const double>) { return values; };
}

DayContext flat_context(std::size_t hours) {
    DayContext ctx;
    ctx.consumption.assign(hours, 0.5);
    ctx.irradiation.assign(hours, 0.2);
    ctx.price.assign(hours, 0.1);
    return ctx;
}

}  // namespace

TEST_CASE("oracle forecasts reproduce the offline MILP plan exactly") {
    auto params = table_params();
    std::mt19937_64 rng(101);
    const auto day = random_day(rng, params.slots_per_day, 0.5);
    const auto offline = solve_milp(build_day_model(day, params));
    const std::vector<double> window(168, 0.0);
    const auto plan = plan_day(fixed_forecast(day.consumption),
                               fixed_forecast(day.irradiation),
                               fixed_forecast(day.price), window, window, window, params);
    CHECK_FALSE(plan.fallback);
    CHECK(plan.dispatch.objective == doctest::Approx(offline.objective).epsilon(1e-9));
    for (std::size_t t = 0; t < plan.dispatch.slots.size(); ++t)
        CHECK(plan.dispatch.levels[t] == doctest::Approx(offline.levels[t]).epsilon(1e-9));
}

TEST_CASE("zero consumption and sun at constant price plans idle") {
    auto params = table_params();
    params.slots_per_day = 6;
    const std::vector<double> zeros(6, 0.0);
    const std::vector<double> price(6, 0.2);
    const std::vector<double> window(168, 0.0);
    const auto plan = plan_day(fixed_forecast(zeros), fixed_forecast(zeros),
                               fixed_forecast(price), window, window, window, params);
    CHECK(plan.dispatch.objective == doctest::Approx(0.0).epsilon(1e-9));
    for (const auto& d : plan.dispatch.slots) {
        CHECK(d.charge_total() == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(d.discharge_total() == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("solver failure falls back to the idle plan with a warning") {
    auto params = table_params();
    params.slots_per_day = 4;
    std::mt19937_64 rng(103);
    const auto day = random_day(rng, 4, 0.5);
    const std::vector<double> window(168, 0.0);
    std::ostringstream warnings;
    const auto plan = plan_day(fixed_forecast(day.consumption),
                               fixed_forecast(day.irradiation), fixed_forecast(day.price),
                               window, window, window, params, &warnings, 0);
    CHECK(plan.fallback);
    CHECK(warnings.str().find("falls back to idle") != std::string::npos);
    for (const auto& d : plan.dispatch.slots) CHECK(d.charge_total() == 0.0);
}

TEST_CASE("charge-slot RES shortfall is clipped, never grid-compensated") {
    auto params = table_params();
    OptimalDispatch plan;
    plan.slots.resize(24);
    plan.levels.assign(24, params.level_initial);
    SlotDispatch& p = plan.slots[3];
    p.charging = true;
    p.res_to_load = 0.2;
    p.res_to_ess = 0.6;
    p.grid_to_ess = 0.4;
    // Sun failed entirely: only the planned grid charge survives.
    const auto d = execute_slot(plan, 3, 1.0, 0.0, 5.0, params);
    CHECK(d.charging);
    CHECK(d.res_to_load == 0.0);
    CHECK(d.res_to_ess == 0.0);
    CHECK(d.grid_to_ess == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("discharge slot serves the realized load first and sells the surplus") {
    auto params = table_params();
    OptimalDispatch plan;
    plan.slots.resize(24);
    plan.levels.assign(24, params.level_initial);
    SlotDispatch& p = plan.slots[7];
    p.charging = false;
    p.ess_to_load = 0.5;
    // Planned 0.5 discharge meets an actual load of only 0.2 with no sun.
    const auto d = execute_slot(plan, 7, 0.2, 0.0, 5.0, params);
    CHECK_FALSE(d.charging);
    CHECK(d.ess_to_load == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(d.ess_to_sell == doctest::Approx(0.3).epsilon(1e-12));
    CHECK_THROWS_AS(execute_slot(plan, 24, 0.2, 0.0, 5.0, params), DomainError);
}

TEST_CASE("oracle plan executed on actuals realizes the planned objective") {
    auto params = table_params();
    std::mt19937_64 rng(107);
    for (int trial = 0; trial < 5; ++trial) {
        const auto day = random_day(rng, params.slots_per_day, 0.5);
        const auto offline = solve_milp(build_day_model(day, params));
        const auto strategy = forecast_milp_strategy(
            fixed_forecast(day.consumption), fixed_forecast(day.irradiation),
            fixed_forecast(day.price), 168, params);
        const auto result = simulate_day(strategy, day, flat_context(168), params);
        CHECK(result.cost == doctest::Approx(offline.objective).epsilon(1e-6));
    }
}

TEST_CASE("noisy plans never beat the offline optimum") {
    auto params = table_params();
    std::mt19937_64 rng(109);
    std::normal_distribution<double> noise(0.0, 0.3);
    for (int trial = 0; trial < 10; ++trial) {
        const auto day = random_day(rng, params.slots_per_day, 0.5);
        const auto offline = solve_milp(build_day_model(day, params));
        auto noisy = [&](std::vector<double> base) {
            for (auto& v : base) v = std::max(0.0, v * (1.0 + noise(rng)));
            return fixed_forecast(base);
        };
        const auto strategy =
            forecast_milp_strategy(noisy(day.consumption), noisy(day.irradiation),
                                   noisy(day.price), 168, params);
        const auto result = simulate_day(strategy, day, flat_context(168), params);
        CHECK(result.cost >= offline.objective - 1e-6);
    }
}

TEST_CASE("fuzzed plans always execute feasibly") {
    auto params = table_params();
    std::mt19937_64 rng(113);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        OptimalDispatch plan;
        plan.slots.resize(24);
        plan.levels.assign(24, params.level_initial);
        for (auto& p : plan.slots) {
            p.charging = unit(rng) < 0.5;
            if (p.charging) {
                p.res_to_load = 2.0 * unit(rng);
                p.res_to_ess = 2.0 * unit(rng);
                p.grid_to_ess = 2.0 * unit(rng);
            } else {
                p.ess_to_load = 2.0 * unit(rng);
                p.ess_to_sell = 2.0 * unit(rng);
            }
        }
        const int t = trial % 24;
        const double e_ec = 2.0 * unit(rng);
        const double e_res = res_energy(1.2 * unit(rng), params);
        const double level =
            params.level_min + unit(rng) * (params.level_max - params.level_min);
        const auto d = execute_slot(plan, t, e_ec, e_res, level, params);
        CHECK_NOTHROW(d.validate(params));
        CHECK(d.res_to_load + d.res_to_ess <= e_res + 1e-9);
        CHECK(d.res_to_load + d.ess_to_load <= e_ec + 1e-9);
        CHECK_NOTHROW(ess_level_update(level, d, params));
    }
}

TEST_CASE("plan CSV dump has 24 rows plus a header") {
    auto params = table_params();
    std::mt19937_64 rng(127);
    const auto day = random_day(rng, params.slots_per_day, 0.5);
    const std::vector<double> window(168, 0.0);
    const auto plan = plan_day(fixed_forecast(day.consumption),
                               fixed_forecast(day.irradiation),
                               fixed_forecast(day.price), window, window, window, params);
    const std::string path = "/tmp/hems_plan.csv";
    dump_plan_csv(plan, path);
    std::ifstream in(path);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 25);
    std::remove(path.c_str());
}
