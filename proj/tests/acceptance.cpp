// Acceptance suite: one PASS/FAIL line per criterion. Hard criteria fail the
// process (non-zero exit); soft targets are measured and reported but do not
// fail the run, since they depend on training outcomes that are not exactly
// reproducible at desk scale.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hems/config.hpp"
#include "hems/core.hpp"
#include "hems/data.hpp"
#include "hems/forecast.hpp"
#include "hems/forecast_milp.hpp"
#include "hems/imitation.hpp"
#include "hems/maddpg.hpp"
#include "hems/milp.hpp"
#include "hems/report.hpp"
#include "hems/sim.hpp"
#include "test_util.hpp"

using namespace hems;
using namespace hems::testutil;

namespace {

int g_hard_failures = 0;

void verdict(int index, const std::string& name, bool pass, bool hard,
             const std::string& detail) {
    if (!pass && hard) ++g_hard_failures;
    std::printf("%s  criterion %d%s: %s (%s)\n", pass ? "PASS" : "FAIL", index,
                hard ? "" : " [soft]", name.c_str(), detail.c_str());
    std::fflush(stdout);
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

/// The fixed synthetic day shared by the memorization criteria.
DayProfile pinned_day() {
    const auto cons = synth_home(HomeClass::preset(BehaviorClass::Stable), 2, 51);
    const auto ghi = synth_irradiance(2, 52);
    const auto price = synth_price(2, 53);
    return make_day_profile(cons, ghi, price, 24 * 10);
}

Strategy replay_strategy(std::shared_ptr<std::vector<OptimalDispatch>> plans) {
    auto idx = std::make_shared<int>(-1);
    return [plans, idx](const SlotObservation& obs) {
        if (obs.t == 0) ++*idx;
        return (*plans)[static_cast<std::size_t>(*idx)]
            .slots[static_cast<std::size_t>(obs.t)];
    };
}

// ---- 1. MILP correctness against the brute-force oracle ----
void criterion_1() {
    auto params = table_params();
    params.slots_per_day = 4;
    const double grid = 0.05;
    const double max_price = 0.5;
    std::mt19937_64 rng(1001);
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = true;
    std::string detail;
    for (int i = 0; i < 50 && pass; ++i) {
        const auto day = random_day(rng, 4, max_price);
        const auto solved = solve_milp(build_day_model(day, params));
        const auto oracle = brute_force_oracle(day, params, grid);
        const double slack = 4 * grid * max_price;
        if (solved.objective > oracle.objective + 1e-6) {
            pass = false;
            detail = "instance " + std::to_string(i) + " beats the oracle bound";
        }
        if (solved.objective < oracle.objective - slack) {
            pass = false;
            detail = "instance " + std::to_string(i) + " below the oracle - slack";
        }
        try {
            check_dispatch_feasible(solved, day, params, 1e-9);
        } catch (const std::exception& e) {
            pass = false;
            detail = std::string("feasibility: ") + e.what();
        }
    }
    const double elapsed = seconds_since(t0);
    if (elapsed >= 10.0) {
        pass = false;
        detail = "runtime " + fmt(elapsed) + " s >= 10 s";
    }
    if (pass) detail = "50 oracle sandwiches, " + fmt(elapsed) + " s";
    verdict(1, "MILP objective within oracle sandwich, all solutions feasible",
            pass, true, detail);
}

// ---- 2. slot_cost vs slot_cost_signed equivalence ----
void criterion_2() {
    const auto params = table_params();
    std::mt19937_64 rng(1002);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto s = random_canonical_slot(rng, params);
        const double full = slot_cost(s.dispatch, s.e_ec, s.price, params);
        const double reduced =
            slot_cost_signed(s.action, s.e_res_load, s.e_ec, s.e_res, s.price, params);
        worst = std::max(worst, std::abs(full - reduced));
    }
    verdict(2, "cost formulations agree on 10^4 random dispatches", worst <= 1e-9,
            true, "max |diff| " + fmt(worst));
}

// ---- 3. gradient checks across 20 seeds ----
void criterion_3() {
    std::mt19937_64 rng(1003);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Mlp dense(4,
                  {{8, Activation::Relu},
                   {6, Activation::Sigmoid},
                   {3, Activation::Identity}},
                  seed);
        std::vector<double> x(4), target(3);
        for (auto& v : x) v = unit(rng);
        for (auto& v : target) v = unit(rng);
        worst = std::max(worst, grad_check(dense, x, target));

        GruStack gru(2, 6, 2, 5, 2, seed);
        std::vector<double> gx(12), gt(2);
        for (auto& v : gx) v = unit(rng);
        for (auto& v : gt) v = unit(rng);
        worst = std::max(worst, grad_check(gru, gx, gt));
    }
    verdict(3, "dense and GRU gradients match finite differences over 20 seeds",
            worst < 1e-4, true, "max relative error " + fmt(worst));
}

// ---- 4. imitation closure: memorization and month-scale ordering ----
ImitationController criterion_4a(const DayProfile& day, double milp_cost) {
    const auto params = table_params();
    const auto data = generate_dataset({day}, params);

    HourlySeries history;
    history.start_hour = 0;
    for (int rep = 0; rep < 12; ++rep)
        history.values.insert(history.values.end(), day.consumption.begin(),
                              day.consumption.end());
    ImitationTrainOptions opts;
    opts.hidden = {64, 64};
    opts.epochs = 300;
    opts.batch = 8;
    opts.lr = 2e-3;
    opts.seed = 17;
    ForecastOptions fo;
    fo.window = 24;
    fo.hidden = 16;
    fo.epochs = 150;
    fo.lr = 3e-3;
    fo.seed = 17;
    fo.max_samples = 128;
    auto controller = train_controller(data, history, opts, fo);
    controller.params = params;

    DayContext ctx;
    ctx.consumption = history.values;
    ctx.irradiation.assign(history.values.size(), 0.0);
    ctx.price.assign(history.values.size(), 0.1);
    const auto result = simulate_day(imitation_strategy(controller), day, ctx, params);
    const double gap = (result.cost - milp_cost) / std::abs(milp_cost);
    verdict(4, "imitation memorizes one day to within 5% of its MILP optimum",
            gap <= 0.05, true,
            "cost " + fmt(result.cost) + " vs optimum " + fmt(milp_cost) +
                ", gap " + fmt(100.0 * gap) + "%");
    return controller;
}

void criterion_4b() {
    const auto params = table_params();
    const auto t0 = std::chrono::steady_clock::now();
    const auto cons = synth_home(HomeClass::preset(BehaviorClass::Stable), 2, 42);
    const auto ghi = synth_irradiance(2, 43);
    const auto price = synth_price(2, 44);
    const auto sc = split(cons);
    const auto sg = split(ghi);
    const auto sp = split(price);

    std::vector<DayProfile> train_days, test_days;
    for (std::size_t start = 0; start + 24 <= sc.train.values.size(); start += 24)
        train_days.push_back(make_day_profile(sc.train, sg.train, sp.train, start));
    for (std::size_t start = 0; start + 24 <= sc.test.values.size(); start += 24)
        test_days.push_back(make_day_profile(sc.test, sg.test, sp.test, start));

    // Imitation: label the training month, distill the four heads.
    const auto dataset = generate_dataset(train_days, params);
    ImitationTrainOptions iopts;  // reference head sizes
    iopts.seed = 5;
    ForecastOptions h1;
    h1.horizon = 1;
    h1.window = 48;
    h1.layers = 2;
    h1.hidden = 16;
    h1.epochs = 40;
    h1.lr = 2e-3;
    h1.max_samples = 192;
    h1.seed = 5;
    auto controller = train_controller(dataset, sc.train, iopts, h1);
    controller.params = params;

    // Forecast-MILP: three day-ahead forecasters on the same training split.
    auto h24 = h1;
    h24.horizon = 24;
    h24.seed = 6;
    const auto f_ec = fit_forecaster(sc.train, h24);
    h24.seed = 7;
    const auto f_ghi = fit_forecaster(sg.train, h24);
    h24.seed = 8;
    const auto f_price = fit_forecaster(sp.train, h24);

    const std::vector<NamedStrategy> strategies = {
        {"imitation", imitation_strategy(controller), false},
        {"forecast", forecast_milp_strategy(forecaster_fn(f_ec), forecaster_fn(f_ghi),
                                            forecaster_fn(f_price), h24.window, params),
         true},
    };
    DayContext ctx{sc.train.values, sg.train.values, sp.train.values};
    const auto report = evaluate_month(strategies, test_days, ctx, params);
    const double eff_imit = report.strategies[0].effectiveness;
    const double eff_fc = report.strategies[1].effectiveness;
    const std::string detail = "imitation " + fmt(eff_imit) + "% vs forecast " +
                               fmt(eff_fc) + "% over " +
                               std::to_string(test_days.size()) + " days, " +
                               fmt(seconds_since(t0)) + " s";
    verdict(4, "month-scale ordering: imitation >= forecast-based effectiveness",
            eff_imit >= eff_fc, true, detail);
    verdict(4, "imitation effectiveness reaches the 60% target band",
            eff_imit >= 60.0, false, "imitation " + fmt(eff_imit) + "%");
}

// ---- 5. forecast-MILP reduction with oracle forecasters ----
void criterion_5() {
    const auto params = table_params();
    std::mt19937_64 rng(1005);
    double worst = 0.0;
    DayContext ctx;
    ctx.consumption.assign(168, 0.5);
    ctx.irradiation.assign(168, 0.2);
    ctx.price.assign(168, 0.1);
    for (int trial = 0; trial < 20; ++trial) {
        const auto day = random_day(rng, params.slots_per_day, 0.5);
        const auto offline = solve_milp(build_day_model(day, params));
        const auto oracle = [](std::vector<double> v) {
            return [v](std::span<const double>) { return v; };
        };
        const auto strategy = forecast_milp_strategy(
            oracle(day.consumption), oracle(day.irradiation), oracle(day.price), 168,
            params);
        const auto result = simulate_day(strategy, day, ctx, params);
        worst = std::max(worst, std::abs(result.cost - offline.objective));
    }
    verdict(5, "oracle-forecast planning realizes the offline optimum on 20 days",
            worst <= 1e-6, true, "max |cost - optimum| " + fmt(worst));
}

// ---- 6. MADDPG reward identity and single-day memorization ----
void criterion_6a() {
    const auto params = table_params();
    std::mt19937_64 rng(1006);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        const double ghi = unit(rng) * 1.2;
        const double e_res = res_energy(ghi, params);
        const double level =
            params.level_min + unit(rng) * (params.level_max - params.level_min);
        const double e_ec = unit(rng) * 2.0;
        const double price = 0.01 + unit(rng) * 0.4;
        // Stay inside the level-feasible set so no projection penalty fires
        // and the reward must equal -C(t) exactly.
        const double room = (params.level_max - level) / params.ess_efficiency;
        const double avail = (level - params.level_min) * params.ess_efficiency;
        const double hi = std::min(params.max_charge_energy(), room);
        const double lo = -std::min(params.max_discharge_energy(), avail);
        const double a_ess = lo + unit(rng) * (hi - lo);
        const double a_res = unit(rng) * std::min(e_res, e_ec);

        DayProfile day;
        day.consumption.assign(24, e_ec);
        day.irradiation.assign(24, ghi);
        day.price.assign(24, price);
        DrState s{e_ec, ghi, level, price, 1 + trial % 24};
        const auto step = env_step(s, a_res, a_ess, day, params);
        const double expected =
            -slot_cost_signed(SignedEssAction{a_ess}, a_res, e_ec, e_res, price, params);
        worst = std::max(worst, std::abs(step.reward - expected));
    }
    verdict(6, "reward equals -C(t) on 10^4 in-bounds transitions", worst <= 1e-9,
            true, "max |diff| " + fmt(worst));
}

MaddpgAgents criterion_6b(const DayProfile& day, double milp_cost) {
    const auto params = table_params();
    MaddpgConfig cfg;  // reference hyperparameters
    cfg.seed = 9;
    cfg.stop_return = -1.25 * milp_cost;  // stop once within 25% of the optimum
    cfg.stop_window = 50;
    cfg.max_seconds = 900.0;  // desk-scale wall-clock cap, reported honestly
    const auto t0 = std::chrono::steady_clock::now();
    const auto agents = train_agents({day}, params, cfg);
    const double elapsed = seconds_since(t0);
    const double greedy_cost = -greedy_day_return(agents, day);
    const double gap = (greedy_cost - milp_cost) / std::abs(milp_cost);
    const bool capped = elapsed >= cfg.max_seconds &&
                        agents.episode_returns.size() <
                            static_cast<std::size_t>(cfg.episodes);
    verdict(6, "single-day MADDPG within 25% of the MILP optimum", gap <= 0.25,
            false,
            "greedy cost " + fmt(greedy_cost) + " vs optimum " + fmt(milp_cost) +
                ", gap " + fmt(100.0 * gap) + "% after " +
                std::to_string(agents.episode_returns.size()) + " episodes in " +
                fmt(elapsed) + " s" + (capped ? " (wall-clock cap hit)" : ""));
    return agents;
}

// ---- 7. MAPE ordering across home classes ----
void criterion_7() {
    const auto t0 = std::chrono::steady_clock::now();
    ForecastOptions opts;
    opts.horizon = 1;
    opts.window = 48;
    opts.layers = 2;
    opts.hidden = 16;
    opts.epochs = 40;
    opts.lr = 2e-3;
    opts.max_samples = 192;

    bool ordered = true;
    double stable_worst = 0.0;
    std::ostringstream rows;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        double mapes[3] = {0, 0, 0};
        const BehaviorClass classes[3] = {BehaviorClass::Stable,
                                          BehaviorClass::Fluctuating,
                                          BehaviorClass::Chaos};
        for (int c = 0; c < 3; ++c) {
            const auto series =
                synth_home(HomeClass::preset(classes[c]), 2, 100 * seed + c);
            const auto sp = split(series);
            opts.seed = seed;
            const auto f = fit_forecaster(sp.train, opts);
            mapes[c] = evaluate_mape(f, sp.train, sp.test);
        }
        if (!(mapes[0] < mapes[1] && mapes[1] < mapes[2])) ordered = false;
        stable_worst = std::max(stable_worst, mapes[0]);
        rows << " s" << seed << ":" << fmt(mapes[0]) << "/" << fmt(mapes[1]) << "/"
             << fmt(mapes[2]);
    }
    verdict(7, "horizon-1 MAPE strictly ordered stable < fluctuating < chaos",
            ordered, true,
            "stable/fluctuating/chaos %" + rows.str() + ", " +
                fmt(seconds_since(t0)) + " s");
    verdict(7, "stable-home MAPE inside the sub-3% calibration band",
            stable_worst < 3.0, false, "worst stable MAPE " + fmt(stable_worst) + "%");
}

// ---- 8. per-slot inference timing ----
void criterion_8(const ImitationController& controller, const MaddpgAgents& agents) {
    std::vector<double> window(static_cast<std::size_t>(controller.forecaster.window),
                               0.5);
    const auto t0 = std::chrono::steady_clock::now();
    double sink = 0.0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
        const auto d =
            controller.control_step(window, 0.3, 2.0 + (i % 5) * 0.1, 0.2, i % 24);
        sink += d.charge_total();
    }
    const double imit_mean = seconds_since(t0) / n;

    const auto t1 = std::chrono::steady_clock::now();
    for (int i = 0; i < n; ++i) {
        DrState s{0.8, 0.3, 2.0 + (i % 5) * 0.1, 0.2, 1 + i % 24};
        const auto [a_res, a_ess] = act(agents, s);
        sink += a_res + a_ess;
    }
    const double dr_mean = seconds_since(t1) / n;
    (void)sink;
    verdict(8, "per-slot inference under 0.5 s for both controllers",
            imit_mean < 0.5 && dr_mean < 0.5,
            true,
            "imitation " + fmt(imit_mean) + " s, maddpg actors " + fmt(dr_mean) +
                " s per slot");
}

// ---- 9. conservation on fuzzed days for every strategy ----
void criterion_9(const ImitationController& controller, const MaddpgAgents& agents,
                 const Forecaster& ec_h1) {
    const auto params = table_params();
    std::mt19937_64 rng(1009);
    const int days = 1000;

    double max_balance_violation = 0.0;
    double max_level_violation = 0.0;
    double max_residual = 0.0;
    double sum_residual = 0.0;
    std::size_t sims = 0;
    std::string failure;

    DayContext ctx;
    ctx.consumption.assign(48, 0.6);
    ctx.irradiation.assign(48, 0.2);
    ctx.price.assign(48, 0.1);

    for (int i = 0; i < days && failure.empty(); ++i) {
        const auto day = random_day(rng, params.slots_per_day, 0.5);
        const auto oracle = [](std::vector<double> v) {
            return [v](std::span<const double>) { return v; };
        };
        auto plans = std::make_shared<std::vector<OptimalDispatch>>();
        plans->push_back(solve_milp(build_day_model(day, params)));

        const std::pair<const char*, Strategy> strategies[] = {
            {"idle", idle_strategy()},
            {"milp", replay_strategy(plans)},
            {"forecast",
             forecast_milp_strategy(oracle(day.consumption), oracle(day.irradiation),
                                    oracle(day.price), 48, params)},
            {"imitation", imitation_strategy(controller)},
            {"maddpg", maddpg_strategy(agents, ec_h1)},
        };
        for (const auto& [name, strategy] : strategies) {
            RealizedDayResult result;
            try {
                result = simulate_day(strategy, day, ctx, params);
            } catch (const std::exception& e) {
                failure = std::string(name) + " day " + std::to_string(i) + ": " +
                          e.what();
                break;
            }
            for (int t = 0; t < params.slots_per_day; ++t) {
                const auto& d = result.dispatches[static_cast<std::size_t>(t)];
                const double grid_load =
                    day.consumption[static_cast<std::size_t>(t)] - d.res_to_load -
                    d.ess_to_load;
                max_balance_violation =
                    std::max(max_balance_violation, -grid_load);
                const double level = result.levels[static_cast<std::size_t>(t)];
                max_level_violation =
                    std::max({max_level_violation, params.level_min - level,
                              level - params.level_max});
            }
            max_residual = std::max(max_residual, result.terminal_residual);
            sum_residual += result.terminal_residual;
            ++sims;
        }
    }
    const bool pass = failure.empty() && max_balance_violation <= 1e-9 &&
                      max_level_violation <= 1e-9;
    std::string detail;
    if (!failure.empty()) {
        detail = failure;
    } else {
        detail = std::to_string(sims) + " simulations, max grid-balance violation " +
                 fmt(max_balance_violation) + " kWh, max level violation " +
                 fmt(max_level_violation) + " kWh, terminal residual mean " +
                 fmt(sum_residual / static_cast<double>(sims)) + " / max " +
                 fmt(max_residual) + " kWh";
    }
    verdict(9, "balance and level bounds hold on 1000 fuzzed days per strategy",
            pass, true, detail);
}

}  // namespace

int main() {
    const auto t_all = std::chrono::steady_clock::now();
    try {
        criterion_1();
        criterion_2();
        criterion_3();

        const auto day = pinned_day();
        const auto params = table_params();
        const auto optimal = solve_milp(build_day_model(day, params));
        double milp_cost = 0.0;
        for (int t = 0; t < params.slots_per_day; ++t)
            milp_cost += slot_cost(optimal.slots[static_cast<std::size_t>(t)],
                                   day.consumption[static_cast<std::size_t>(t)],
                                   day.price[static_cast<std::size_t>(t)], params);

        const auto controller = criterion_4a(day, milp_cost);
        criterion_4b();
        criterion_5();
        criterion_6a();
        const auto agents = criterion_6b(day, milp_cost);
        criterion_7();
        criterion_8(controller, agents);
        criterion_9(controller, agents, controller.forecaster);
    } catch (const std::exception& e) {
        std::printf("FAIL  acceptance aborted: %s\n", e.what());
        return 1;
    }
    std::printf("acceptance finished in %.1f s with %d hard failure(s)\n",
                seconds_since(t_all), g_hard_failures);
    return g_hard_failures == 0 ? 0 : 1;
}
