#include "hems/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace hems {

std::vector<double> Forecaster::predict(std::span<const double> recent) const {
    if (static_cast<int>(recent.size()) != window)
        throw DomainError("forecast window must have " + std::to_string(window) +
                          " values, got " + std::to_string(recent.size()));
    for (const double v : recent)
        if (!std::isfinite(v) || v < 0.0)
            throw DomainError("forecast window values must be finite and non-negative");
    auto out = net.predict(recent);
    for (auto& v : out) v = std::max(0.0, v);
    return out;
}

Forecaster fit_forecaster(const HourlySeries& history, const ForecastOptions& opts) {
    if (opts.horizon != 1 && opts.horizon != 24)
        throw DomainError("forecast horizon must be 1 or 24");
    if (opts.window < 1) throw DomainError("forecast window must be positive");
    const std::size_t need =
        static_cast<std::size_t>(opts.window) + static_cast<std::size_t>(opts.horizon);
    if (history.values.size() < need)
        throw DataError("history too short: need at least " + std::to_string(need) +
                        " hours to form one training pair");
    history.validate();

    const std::size_t pairs = history.values.size() - need + 1;
    // Subsample by shuffling rather than striding: a regular stride can alias
    // with the daily period and starve whole phases of training examples.
    std::vector<std::size_t> indices(pairs);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (opts.max_samples > 0 && pairs > opts.max_samples) {
        std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
        std::shuffle(indices.begin(), indices.end(), rng);
        indices.resize(opts.max_samples);
        std::sort(indices.begin(), indices.end());
    }

    Dataset data;
    for (const std::size_t i : indices) {
        data.inputs.emplace_back(
            history.values.begin() + static_cast<std::ptrdiff_t>(i),
            history.values.begin() + static_cast<std::ptrdiff_t>(i + static_cast<std::size_t>(opts.window)));
        data.targets.emplace_back(
            history.values.begin() + static_cast<std::ptrdiff_t>(i + static_cast<std::size_t>(opts.window)),
            history.values.begin() + static_cast<std::ptrdiff_t>(i + need));
    }

    Forecaster f;
    f.horizon = opts.horizon;
    f.window = opts.window;
    f.target = history.kind;
    f.net.seed = opts.seed;
    f.net.model = std::make_unique<GruStack>(1, opts.window, opts.layers, opts.hidden,
                                             opts.horizon, opts.seed);
    train(f.net, data,
          {.epochs = opts.epochs, .batch = opts.batch, .lr = opts.lr, .seed = opts.seed});
    return f;
}

double mape(std::span<const double> pred, std::span<const double> actual, double floor) {
    if (pred.size() != actual.size())
        throw DomainError("mape requires equal-length series");
    if (pred.empty()) throw DomainError("mape of empty series is undefined");
    if (floor <= 0.0) throw DomainError("mape floor must be positive");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        sum += std::abs(pred[i] - actual[i]) / std::max(actual[i], floor);
    return 100.0 * sum / static_cast<double>(pred.size());
}

double evaluate_mape(const Forecaster& f, const HourlySeries& context,
                     const HourlySeries& test, double floor) {
    const auto w = static_cast<std::size_t>(f.window);
    if (context.values.size() < w)
        throw DataError("context shorter than the forecast window");
    if (context.hour_at(context.values.size()) != test.start_hour)
        throw DataError("context must end exactly where the test series begins");
    if (test.values.size() < static_cast<std::size_t>(f.horizon))
        throw DataError("test series shorter than the forecast horizon");

    std::vector<double> rolling(context.values.end() - static_cast<std::ptrdiff_t>(w),
                                context.values.end());
    double sum = 0.0;
    std::size_t slots = 0;
    for (std::size_t i = 0; i + static_cast<std::size_t>(f.horizon) <= test.values.size();
         i += static_cast<std::size_t>(f.horizon)) {
        const auto pred = f.predict(rolling);
        for (int k = 0; k < f.horizon; ++k) {
            const double actual = test.values[i + static_cast<std::size_t>(k)];
            sum += std::abs(pred[static_cast<std::size_t>(k)] - actual) /
                   std::max(actual, floor);
            ++slots;
            rolling.erase(rolling.begin());
            rolling.push_back(actual);  // walk forward on realized values
        }
    }
    if (slots == 0) throw DataError("no complete forecast windows in the test series");
    return 100.0 * sum / static_cast<double>(slots);
}

void save_forecaster(const Forecaster& f, const std::string& path) {
    save_network(f.net, path);
}

Forecaster load_forecaster(const std::string& path, SeriesKind target) {
    Forecaster f;
    f.net = load_network(path);
    const auto* gru = dynamic_cast<const GruStack*>(f.net.model.get());
    if (gru == nullptr) throw DataError("forecaster file does not hold a GRU model: " + path);
    f.window = gru->window();
    f.horizon = gru->output_size();
    f.target = target;
    return f;
}

}  // namespace hems
