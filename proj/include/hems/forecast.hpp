#pragma once

#include <cstdint>
#include <string>

#include "hems/data.hpp"
#include "hems/nn.hpp"

namespace hems {

/// Recurrent forecaster over a fixed trailing window of hourly values.
struct Forecaster {
    Network net;  // GruStack model
    int horizon = 1;
    int window = 168;
    SeriesKind target = SeriesKind::Consumption;

    /// Predicts the next `horizon` values from the last `window` values.
    /// Outputs are clamped to be non-negative.
    std::vector<double> predict(std::span<const double> recent) const;
};

struct ForecastOptions {
    int horizon = 1;
    int window = 168;
    int layers = 2;
    int hidden = 48;
    int epochs = 40;
    int batch = 32;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    /// Caps the number of sliding-window training pairs (evenly strided);
    /// 0 keeps them all.
    std::size_t max_samples = 0;
};

/// Supervised sliding-window fit. Throws DataError when the history cannot
/// form a single (window, horizon) pair.
Forecaster fit_forecaster(const HourlySeries& history, const ForecastOptions& opts);

/// Mean absolute percentage error with a denominator floor.
double mape(std::span<const double> pred, std::span<const double> actual,
            double floor = 0.01);

/// Walk-forward MAPE of a fitted forecaster over a test series, using the
/// tail of `context` (and then realized test values) as the input window.
double evaluate_mape(const Forecaster& f, const HourlySeries& context,
                     const HourlySeries& test, double floor = 0.01);

void save_forecaster(const Forecaster& f, const std::string& path);
Forecaster load_forecaster(const std::string& path, SeriesKind target);

}  // namespace hems
