#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "hems/data.hpp"
#include "hems/imitation.hpp"
#include "test_util.hpp"

using namespace hems;
using namespace hems::testutil;

namespace {

/// A head that always outputs `value`, built from a zero-weight net whose
/// output standardizer supplies the constant.
Network constant_head(double value) {
    Network net;
    net.model = std::make_unique<Mlp>(
        5, std::vector<Mlp::LayerSpec>{{1, Activation::Identity}}, 0);
    std::fill(net.model->params().begin(), net.model->params().end(), 0.0);
    net.x_norm.mean.assign(5, 0.0);
    net.x_norm.std.assign(5, 1.0);
    net.y_norm.mean = {value};
    net.y_norm.std = {1.0};
    return net;
}

Forecaster constant_forecaster(double value, int window) {
    Forecaster f;
    f.window = window;
    f.horizon = 1;
    f.net.model = std::make_unique<GruStack>(1, window, 1, 2, 1, 0);
    std::fill(f.net.model->params().begin(), f.net.model->params().end(), 0.0);
    f.net.x_norm.mean.assign(static_cast<std::size_t>(window), 0.0);
    f.net.x_norm.std.assign(static_cast<std::size_t>(window), 1.0);
    f.net.y_norm.mean = {value};
    f.net.y_norm.std = {1.0};
    return f;
}

ImitationController manual_controller(double rl, double gc, double dl, double ds,
                                      double forecast_ec, const SystemParams& params) {
    ImitationController c;
    c.params = params;
    c.res_load = constant_head(rl);
    c.grid_charge = constant_head(gc);
    c.ess_load = constant_head(dl);
    c.ess_sell = constant_head(ds);
    c.forecaster = constant_forecaster(forecast_ec, 4);
    return c;
}

std::vector<double> zero_window() { return {0.0, 0.0, 0.0, 0.0}; }

/// One plausible sunny day reused by the memorization tests.
DayProfile stable_day() {
    const auto cons = synth_home(HomeClass::preset(BehaviorClass::Stable), 2, 51);
    const auto ghi = synth_irradiance(2, 52);
    const auto price = synth_price(2, 53);
    return make_day_profile(cons, ghi, price, 24 * 10);
}

}  // namespace

TEST_CASE("dataset counts and level features follow the optimal trajectory") {
    auto params = table_params();
    params.slots_per_day = 4;
    std::mt19937_64 rng(61);
    std::vector<DayProfile> days;
    for (int i = 0; i < 3; ++i) days.push_back(random_day(rng, 4, 0.5));
    const auto data = generate_dataset(days, params);
    CHECK(data.size() == 12);  // hd * T
    CHECK(data.res_load.size() == 12);
    CHECK(data.grid_charge.size() == 12);
    CHECK(data.ess_load.size() == 12);
    CHECK(data.ess_sell.size() == 12);

    const auto optimal = solve_milp(build_day_model(days[0], params));
    CHECK(data.inputs[0][2] == params.level_initial);
    for (std::size_t t = 1; t < 4; ++t)
        CHECK(data.inputs[t][2] == doctest::Approx(optimal.levels[t - 1]).epsilon(1e-12));
    for (std::size_t t = 0; t < 4; ++t) {
        CHECK(data.inputs[t][0] == days[0].consumption[t]);
        CHECK(data.inputs[t][4] == static_cast<double>(t));
        CHECK(data.res_load[t] == doctest::Approx(optimal.slots[t].res_to_load).epsilon(1e-12));
        CHECK(data.grid_charge[t] ==
              doctest::Approx(optimal.slots[t].grid_to_ess).epsilon(1e-12));
        CHECK(data.ess_load[t] == doctest::Approx(optimal.slots[t].ess_to_load).epsilon(1e-12));
        CHECK(data.ess_sell[t] == doctest::Approx(optimal.slots[t].ess_to_sell).epsilon(1e-12));
    }
}

TEST_CASE("zero-irradiation day yields zero RES-to-load labels") {
    auto params = table_params();
    params.slots_per_day = 4;
    std::mt19937_64 rng(67);
    auto day = random_day(rng, 4, 0.5);
    day.irradiation.assign(4, 0.0);
    const auto data = generate_dataset({day}, params);
    for (const double label : data.res_load) CHECK(label == 0.0);
}

TEST_CASE("unsolvable day is skipped with a warning") {
    auto params = table_params();
    params.slots_per_day = 4;
    std::mt19937_64 rng(71);
    const std::vector<DayProfile> days = {random_day(rng, 4, 0.5),
                                          random_day(rng, 4, 0.5)};
    std::ostringstream warnings;
    // A node limit of 0 forces the solver to give up on every day.
    const auto data = generate_dataset(days, params, &warnings, 0);
    CHECK(data.size() == 0);
    CHECK(warnings.str().find("skipping day 0") != std::string::npos);
    CHECK(warnings.str().find("skipping day 1") != std::string::npos);
}

TEST_CASE("dataset CSV round trips") {
    auto params = table_params();
    params.slots_per_day = 4;
    std::mt19937_64 rng(73);
    const auto data = generate_dataset({random_day(rng, 4, 0.5)}, params);
    const std::string path = "/tmp/hems_imitation_data.csv";
    dump_dataset_csv(data, path);
    const auto reloaded = load_dataset_csv(path);
    CHECK(reloaded.inputs == data.inputs);
    CHECK(reloaded.res_load == data.res_load);
    CHECK(reloaded.grid_charge == data.grid_charge);
    CHECK(reloaded.ess_load == data.ess_load);
    CHECK(reloaded.ess_sell == data.ess_sell);
    std::remove(path.c_str());

    std::ofstream bad(path);
    bad << "wrong,header\n";
    bad.close();
    CHECK_THROWS_AS(load_dataset_csv(path), DataError);
    std::remove(path.c_str());
}

TEST_CASE("empty dataset is a data error") {
    HourlySeries history;
    history.values.assign(200, 1.0);
    ForecastOptions fo;
    fo.window = 24;
    fo.epochs = 1;
    CHECK_THROWS_AS(train_controller(ImitationDataset{}, history, {}, fo), DataError);
}

TEST_CASE("all-zero heads on a zero-sun slot dispatch idle") {
    const auto params = table_params();
    auto c = manual_controller(0.0, 0.0, 0.0, 0.0, 1.0, params);
    const auto d = c.control_step(zero_window(), 0.0, params.level_initial, 0.2, 5);
    CHECK(d.charging);
    CHECK(d.res_to_load == 0.0);
    CHECK(d.res_to_ess == 0.0);
    CHECK(d.grid_to_ess == 0.0);
    CHECK(d.ess_to_load == 0.0);
    CHECK(d.ess_to_sell == 0.0);
}

TEST_CASE("over-rate charge head is clamped to the charge rate") {
    const auto params = table_params();  // Ch_rate * dt = 1.0 kWh
    auto c = manual_controller(0.0, 2.0, 0.0, 0.0, 1.0, params);
    const auto d = c.control_step(zero_window(), 0.0, params.level_initial, 0.2, 5);
    CHECK(d.charging);
    CHECK(d.grid_to_ess == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.charge_total() <= params.max_charge_energy() + 1e-12);
}

TEST_CASE("discharge branch serves the load before selling") {
    const auto params = table_params();
    // Heads want a 0.8 kWh discharge; forecast load is 0.5 kWh with no sun.
    auto c = manual_controller(0.0, 0.0, 0.5, 0.3, 0.5, params);
    const auto d = c.control_step(zero_window(), 0.0, 5.0, 0.2, 5);
    CHECK_FALSE(d.charging);
    CHECK(d.ess_to_load == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d.ess_to_sell == doctest::Approx(0.3).epsilon(1e-12));
    // At the bottom of the battery nothing can discharge.
    const auto empty = c.control_step(zero_window(), 0.0, params.level_min, 0.2, 5);
    CHECK(empty.discharge_total() <= 1e-12);
}

TEST_CASE("control_step is deterministic and validates the level") {
    const auto params = table_params();
    auto c = manual_controller(0.2, 0.3, 0.0, 0.0, 1.0, params);
    const auto a = c.control_step(zero_window(), 0.5, 2.0, 0.2, 7);
    const auto b = c.control_step(zero_window(), 0.5, 2.0, 0.2, 7);
    CHECK(a.res_to_load == b.res_to_load);
    CHECK(a.grid_to_ess == b.grid_to_ess);
    CHECK_THROWS_AS(c.control_step(zero_window(), 0.5, params.level_max + 1.0, 0.2, 7),
                    DomainError);
}

TEST_CASE("fuzzed heads always produce feasible dispatches") {
    const auto params = table_params();
    std::mt19937_64 rng(79);
    std::uniform_real_distribution<double> head(-3.0, 3.0);
    std::uniform_real_distribution<double> ghi(0.0, 1.2);
    std::uniform_real_distribution<double> level(params.level_min, params.level_max);
    std::uniform_real_distribution<double> price(0.01, 0.5);
    std::uniform_real_distribution<double> ec(0.0, 3.0);
    for (int trial = 0; trial < 10000; ++trial) {
        auto c = manual_controller(head(rng), head(rng), head(rng), head(rng), ec(rng),
                                   params);
        const double g = ghi(rng);
        const double lv = level(rng);
        const auto d = c.control_step(zero_window(), g, lv, price(rng), trial % 24);
        CHECK_NOTHROW(d.validate(params));
        CHECK(d.res_to_load + d.res_to_ess <= res_energy(g, params) + 1e-9);
        CHECK_NOTHROW(ess_level_update(lv, d, params));
    }
}

TEST_CASE("training is deterministic across runs") {
    auto params = table_params();
    params.slots_per_day = 4;
    std::mt19937_64 rng(83);
    const auto data = generate_dataset({random_day(rng, 4, 0.5)}, params);
    HourlySeries history;
    history.start_hour = 0;
    history.values.assign(120, 1.0);
    ImitationTrainOptions opts;
    opts.hidden = {8};
    opts.epochs = 5;
    opts.seed = 9;
    ForecastOptions fo;
    fo.window = 24;
    fo.hidden = 4;
    fo.epochs = 2;
    fo.seed = 9;
    const auto a = train_controller(data, history, opts, fo);
    const auto b = train_controller(data, history, opts, fo);
    CHECK(a.res_load.model->params() == b.res_load.model->params());
    CHECK(a.ess_sell.model->params() == b.ess_sell.model->params());
    CHECK(a.forecaster.net.model->params() == b.forecaster.net.model->params());
}

TEST_CASE("single-day dataset is memorized to tiny MSE per head") {
    const auto params = table_params();
    const auto day = stable_day();
    const auto data = generate_dataset({day}, params);
    REQUIRE(data.size() == 24);
    const std::vector<const std::vector<double>*> heads = {
        &data.res_load, &data.grid_charge, &data.ess_load, &data.ess_sell};
    for (const auto* labels : heads) {
        Network net;
        net.model = std::make_unique<Mlp>(
            5,
            std::vector<Mlp::LayerSpec>{
                {64, Activation::Relu}, {64, Activation::Relu}, {1, Activation::Identity}},
            13);
        const auto curve =
            train(net, data.head(*labels), {.epochs = 300, .batch = 8, .lr = 2e-3, .seed = 13});
        CHECK(curve.back() < 1e-3);  // normalized units
    }
}

TEST_CASE("memorizing controller closes to within 5% of the MILP optimum") {
    auto params = table_params();
    const auto day = stable_day();
    const auto optimal = solve_milp(build_day_model(day, params));
    const auto data = generate_dataset({day}, params);

    // The forecaster memorizes the day by seeing it tiled as history.
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
    const double gap = result.cost - optimal.objective;
    CHECK(gap <= 0.05 * std::abs(optimal.objective) + 1e-9);
    CHECK(result.cost <= result.baseline + 1e-9);
}

TEST_CASE("controller bundle save/load round trip") {
    const auto params = table_params();
    auto c = manual_controller(0.1, 0.2, 0.3, 0.4, 0.9, params);
    const std::string dir = "/tmp/hems_controller_bundle";
    save_controller(c, dir);
    const auto loaded = load_controller(dir);
    CHECK(loaded.params.level_max == params.level_max);
    CHECK(loaded.forecaster.window == c.forecaster.window);
    const auto a = c.control_step(zero_window(), 0.5, 2.0, 0.2, 3);
    const auto b = loaded.control_step(zero_window(), 0.5, 2.0, 0.2, 3);
    CHECK(a.res_to_load == b.res_to_load);
    CHECK(a.grid_to_ess == b.grid_to_ess);
    CHECK(a.ess_to_load == b.ess_to_load);
    CHECK(a.ess_to_sell == b.ess_to_sell);
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
}
