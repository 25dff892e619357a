#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hems/core.hpp"

namespace hems {

enum class SeriesKind { Consumption, Irradiation, Price };

const char* series_kind_name(SeriesKind k);
SeriesKind series_kind_from_name(const std::string& name);

/// Gap-free hourly series anchored at a UTC hour.
struct HourlySeries {
    std::int64_t start_hour = 0;  // hours since the Unix epoch
    std::vector<double> values;
    SeriesKind kind = SeriesKind::Consumption;

    std::int64_t hour_at(std::size_t i) const {
        return start_hour + static_cast<std::int64_t>(i);
    }
    void validate() const;
};

// Civil-time helpers (UTC).
std::int64_t hour_from_civil(int year, int month, int day, int hour);
void civil_from_hour(std::int64_t epoch_hour, int& year, int& month, int& day, int& hour);
std::string format_hour(std::int64_t epoch_hour);       // ISO-8601, hour precision
std::int64_t parse_hour(const std::string& timestamp);  // throws DataError

HourlySeries load_csv(const std::string& path, SeriesKind kind);
void save_csv(const HourlySeries& series, const std::string& path);

enum class BehaviorClass { Stable, Fluctuating, Chaos };

BehaviorClass behavior_from_name(const std::string& name);
const char* behavior_name(BehaviorClass c);

/// Resident-behavior template for the synthetic consumption generator.
struct HomeClass {
    BehaviorClass behavior = BehaviorClass::Stable;
    std::vector<double> base_profile;  // 24 hourly kWh values
    double noise_amplitude = 0.0;      // multiplicative, fraction of the base
    double regime_switch_prob = 0.0;   // per-day probability of swapping profiles

    static HomeClass preset(BehaviorClass c);
};

/// Synthetic hourly consumption: base profile, multiplicative noise, and (for
/// the chaotic class) occasional day-long regime switches. Starts Jan 1 2013.
HourlySeries synth_home(const HomeClass& home, int months, std::uint64_t seed);

/// Clear-sky half-sine irradiance scaled by a per-day cloudiness factor.
HourlySeries synth_irradiance(int months, std::uint64_t seed);

/// Two-peak daily price shape plus noise.
HourlySeries synth_price(int months, std::uint64_t seed);

struct SplitSeries {
    HourlySeries train;
    HourlySeries test;
};

/// Chronological split: the last `test_months` calendar months become the
/// test set; everything before (including the 168 context hours that also
/// precede the first test window) stays in train.
SplitSeries split(const HourlySeries& series, int test_months = 1);

/// Slices one day (24 slots) starting at `day_start_index`.
std::vector<double> day_slice(const HourlySeries& series, std::size_t day_start_index);

DayProfile make_day_profile(const HourlySeries& consumption, const HourlySeries& irradiation,
                            const HourlySeries& price, std::size_t day_start_index);

}  // namespace hems
