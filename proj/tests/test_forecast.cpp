#include "doctest.h"

#include <cmath>
#include <cstdio>

#include "hems/forecast.hpp"

using namespace hems;

namespace {

HourlySeries periodic_series(std::size_t hours) {
    HourlySeries s;
    s.kind = SeriesKind::Consumption;
    s.start_hour = hour_from_civil(2013, 1, 1, 0);
    s.values.reserve(hours);
    for (std::size_t i = 0; i < hours; ++i) {
        const double phase = 2.0 * M_PI * static_cast<double>(i % 24) / 24.0;
        s.values.push_back(1.0 + 0.5 * std::sin(phase) + 0.2 * std::cos(2.0 * phase));
    }
    return s;
}

ForecastOptions small_opts(int horizon, std::uint64_t seed) {
    ForecastOptions o;
    o.horizon = horizon;
    o.window = 24;
    o.layers = 1;
    o.hidden = 16;
    o.epochs = 150;
    o.batch = 16;
    o.lr = 3e-3;
    o.seed = seed;
    o.max_samples = 128;
    return o;
}

}  // namespace

TEST_CASE("mape matches its definition") {
    CHECK(mape(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0}) == 0.0);
    CHECK(mape(std::vector<double>{1.1}, std::vector<double>{1.0}) ==
          doctest::Approx(10.0).epsilon(1e-12));
    // Floor guards zero actuals: |0.5 - 0| / max(0, 0.01) = 50 -> 5000%.
    CHECK(mape(std::vector<double>{0.5}, std::vector<double>{0.0}) ==
          doctest::Approx(5000.0).epsilon(1e-12));
    CHECK_THROWS_AS(mape(std::vector<double>{}, std::vector<double>{}), DomainError);
    CHECK_THROWS_AS(mape(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
                    DomainError);
    CHECK_THROWS_AS(
        mape(std::vector<double>{1.0}, std::vector<double>{1.0}, 0.0), DomainError);
}

TEST_CASE("predict validates the window and clamps negatives") {
    Forecaster f;
    f.window = 4;
    f.horizon = 1;
    f.net.model = std::make_unique<GruStack>(1, 4, 1, 3, 1, 0);
    f.net.x_norm.mean.assign(4, 0.0);
    f.net.x_norm.std.assign(4, 1.0);
    // A strongly negative output bias guarantees a negative raw prediction.
    f.net.y_norm.mean = {-5.0};
    f.net.y_norm.std = {0.1};
    const std::vector<double> window = {0.0, 0.0, 0.0, 0.0};
    const auto out = f.predict(window);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == 0.0);  // clamped
    CHECK(f.predict(window) == f.predict(window));  // purity

    CHECK_THROWS_AS(f.predict(std::vector<double>{1.0, 2.0}), DomainError);
    CHECK_THROWS_AS(f.predict(std::vector<double>{1.0, -1.0, 0.0, 0.0}), DomainError);
}

TEST_CASE("constant series converges to the constant") {
    HourlySeries s;
    s.start_hour = 0;
    s.values.assign(200, 3.5);
    auto opts = small_opts(1, 2);
    opts.epochs = 60;
    const auto f = fit_forecaster(s, opts);
    const std::vector<double> window(24, 3.5);
    CHECK(f.predict(window)[0] == doctest::Approx(3.5).epsilon(0.01));
}

TEST_CASE("periodic series: horizon-1 held-out MAPE below 1%") {
    const auto s = periodic_series(24 * 40);
    HourlySeries train_part, test_part;
    train_part.start_hour = s.start_hour;
    train_part.values.assign(s.values.begin(), s.values.begin() + 24 * 33);
    test_part.start_hour = s.hour_at(24 * 33);
    test_part.values.assign(s.values.begin() + 24 * 33, s.values.end());

    const auto f = fit_forecaster(train_part, small_opts(1, 3));
    CHECK(evaluate_mape(f, train_part, test_part) < 1.0);
}

TEST_CASE("periodic series: 24-step forecast within 5% of the next period") {
    const auto s = periodic_series(24 * 40);
    const auto f = fit_forecaster(s, small_opts(24, 4));
    std::vector<double> window(s.values.end() - 24, s.values.end());
    const auto pred = f.predict(window);
    REQUIRE(pred.size() == 24);
    for (std::size_t k = 0; k < 24; ++k)
        CHECK(std::abs(pred[k] - s.values[k]) <= 0.05 * s.values[k]);
}

TEST_CASE("insufficient history is a data error") {
    HourlySeries s;
    s.start_hour = 0;
    s.values.assign(24, 1.0);  // window 24 + horizon 1 needs 25
    CHECK_THROWS_AS(fit_forecaster(s, small_opts(1, 0)), DataError);
    ForecastOptions bad = small_opts(1, 0);
    bad.horizon = 7;
    CHECK_THROWS_AS(fit_forecaster(periodic_series(200), bad), DomainError);
}

TEST_CASE("fitting is deterministic for a fixed seed") {
    const auto s = periodic_series(24 * 10);
    auto opts = small_opts(1, 5);
    opts.epochs = 10;
    const auto a = fit_forecaster(s, opts);
    const auto b = fit_forecaster(s, opts);
    CHECK(a.net.model->params() == b.net.model->params());  // bitwise
}

TEST_CASE("forecaster save/load round trip") {
    const auto s = periodic_series(24 * 10);
    auto opts = small_opts(1, 6);
    opts.epochs = 5;
    const auto f = fit_forecaster(s, opts);
    const std::string path = "/tmp/hems_forecaster.bin";
    save_forecaster(f, path);
    const auto g = load_forecaster(path, SeriesKind::Consumption);
    CHECK(g.window == f.window);
    CHECK(g.horizon == f.horizon);
    CHECK(g.target == SeriesKind::Consumption);
    std::vector<double> window(s.values.end() - 24, s.values.end());
    CHECK(g.predict(window) == f.predict(window));
    std::remove(path.c_str());
}

TEST_CASE("evaluate_mape rejects misaligned context") {
    const auto s = periodic_series(24 * 10);
    auto opts = small_opts(1, 7);
    opts.epochs = 2;
    const auto f = fit_forecaster(s, opts);
    HourlySeries test_part;
    test_part.start_hour = s.hour_at(s.values.size()) + 5;  // gap of 5 hours
    test_part.values.assign(48, 1.0);
    CHECK_THROWS_AS(evaluate_mape(f, s, test_part), DataError);
}
