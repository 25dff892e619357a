#include "hems/data.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace hems {

const char* series_kind_name(SeriesKind k) {
    switch (k) {
        case SeriesKind::Consumption: return "consumption";
        case SeriesKind::Irradiation: return "irradiation";
        case SeriesKind::Price: return "price";
    }
    return "consumption";
}

SeriesKind series_kind_from_name(const std::string& name) {
    if (name == "consumption") return SeriesKind::Consumption;
    if (name == "irradiation") return SeriesKind::Irradiation;
    if (name == "price") return SeriesKind::Price;
    throw DataError("unknown series kind: " + name);
}

const char* behavior_name(BehaviorClass c) {
    switch (c) {
        case BehaviorClass::Stable: return "stable";
        case BehaviorClass::Fluctuating: return "fluctuating";
        case BehaviorClass::Chaos: return "chaos";
    }
    return "stable";
}

BehaviorClass behavior_from_name(const std::string& name) {
    if (name == "stable") return BehaviorClass::Stable;
    if (name == "fluctuating") return BehaviorClass::Fluctuating;
    if (name == "chaos") return BehaviorClass::Chaos;
    throw DataError("unknown behavior class: " + name);
}

void HourlySeries::validate() const {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]) || values[i] < 0.0)
            throw DataError("series value at index " + std::to_string(i) +
                            " is negative or non-finite");
    }
}

// Civil calendar conversions (proleptic Gregorian, UTC).
std::int64_t hour_from_civil(int year, int month, int day, int hour) {
    const int y = year - (month <= 2 ? 1 : 0);
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy =
        static_cast<unsigned>((153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    const std::int64_t days =
        static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
    return days * 24 + hour;
}

void civil_from_hour(std::int64_t epoch_hour, int& year, int& month, int& day, int& hour) {
    std::int64_t days = epoch_hour / 24;
    std::int64_t rem = epoch_hour % 24;
    if (rem < 0) {
        rem += 24;
        days -= 1;
    }
    hour = static_cast<int>(rem);
    days += 719468;
    const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(days - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    month = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
    year = static_cast<int>(y + (month <= 2 ? 1 : 0));
}

std::string format_hour(std::int64_t epoch_hour) {
    int y, m, d, h;
    civil_from_hour(epoch_hour, y, m, d, h);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:00:00Z", y, m, d, h);
    return buf;
}

std::int64_t parse_hour(const std::string& timestamp) {
    int y, m, d, h, min = 0, sec = 0;
    const int n = std::sscanf(timestamp.c_str(), "%d-%d-%dT%d:%d:%dZ", &y, &m, &d, &h,
                              &min, &sec);
    if (n < 4 || min != 0 || sec != 0)
        throw DataError("timestamp not hour-aligned ISO-8601 UTC: " + timestamp);
    if (m < 1 || m > 12 || d < 1 || d > 31 || h < 0 || h > 23)
        throw DataError("timestamp out of range: " + timestamp);
    return hour_from_civil(y, m, d, h);
}

HourlySeries load_csv(const std::string& path, SeriesKind kind) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file: " + path);
    if (line.ends_with("\r")) line.pop_back();
    if (line != "timestamp,value")
        throw DataError(path + ": expected header 'timestamp,value'");

    HourlySeries series;
    series.kind = kind;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.ends_with("\r")) line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw DataError(path + " row " + std::to_string(row) + ": missing comma");
        const std::int64_t hour = parse_hour(line.substr(0, comma));
        char* endp = nullptr;
        const std::string value_text = line.substr(comma + 1);
        const double value = std::strtod(value_text.c_str(), &endp);
        if (endp == value_text.c_str() || *endp != '\0')
            throw DataError(path + " row " + std::to_string(row) + ": bad value");
        if (!std::isfinite(value) || value < 0.0)
            throw DataError(path + " row " + std::to_string(row) +
                            ": negative or non-finite value");
        if (series.values.empty()) {
            series.start_hour = hour;
        } else {
            const std::int64_t expected = series.hour_at(series.values.size());
            if (hour != expected)
                throw DataError(path + " row " + std::to_string(row) + ": gap, expected " +
                                format_hour(expected) + " got " + format_hour(hour));
        }
        series.values.push_back(value);
    }
    if (series.values.empty()) throw DataError(path + ": no data rows");
    return series;
}

void save_csv(const HourlySeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "timestamp,value\n";
    char buf[64];
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", series.values[i]);
        out << format_hour(series.hour_at(i)) << "," << buf << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

HomeClass HomeClass::preset(BehaviorClass c) {
    HomeClass home;
    home.behavior = c;
    home.base_profile = {0.35, 0.30, 0.28, 0.27, 0.30, 0.45, 0.70, 0.90,
                         0.80, 0.60, 0.50, 0.50, 0.55, 0.50, 0.50, 0.60,
                         0.80, 1.10, 1.30, 1.20, 1.00, 0.80, 0.60, 0.45};
    switch (c) {
        case BehaviorClass::Stable:
            home.noise_amplitude = 0.006;
            break;
        case BehaviorClass::Fluctuating:
            home.noise_amplitude = 0.13;
            break;
        case BehaviorClass::Chaos:
            home.noise_amplitude = 0.24;
            home.regime_switch_prob = 0.1;
            break;
    }
    return home;
}

namespace {

constexpr int kStartYear = 2013;

int months_span_hours(int months) {
    const std::int64_t start = hour_from_civil(kStartYear, 1, 1, 0);
    int y = kStartYear, m = 1;
    for (int i = 0; i < months; ++i) {
        if (++m > 12) {
            m = 1;
            ++y;
        }
    }
    return static_cast<int>(hour_from_civil(y, m, 1, 0) - start);
}

}  // namespace

HourlySeries synth_home(const HomeClass& home, int months, std::uint64_t seed) {
    if (months < 2) throw DataError("synth_home needs at least 2 months");
    if (home.base_profile.size() != 24u)
        throw DataError("base profile must have 24 entries");
    const int hours = months_span_hours(months);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Day-long alternate regime: evening life shifted into the night, scaled up.
    std::vector<double> alt(24);
    for (int h = 0; h < 24; ++h)
        alt[static_cast<std::size_t>(h)] =
            1.5 * home.base_profile[static_cast<std::size_t>((h + 6) % 24)];

    HourlySeries series;
    series.kind = SeriesKind::Consumption;
    series.start_hour = hour_from_civil(kStartYear, 1, 1, 0);
    series.values.reserve(static_cast<std::size_t>(hours));
    bool alt_day = false;
    for (int t = 0; t < hours; ++t) {
        const int h = t % 24;
        if (h == 0) alt_day = unit(rng) < home.regime_switch_prob;
        const double base = (alt_day ? alt : home.base_profile)[static_cast<std::size_t>(h)];
        const double factor = std::max(0.05, 1.0 + home.noise_amplitude * noise(rng));
        series.values.push_back(base * factor);
    }
    return series;
}

HourlySeries synth_irradiance(int months, std::uint64_t seed) {
    if (months < 2) throw DataError("synth_irradiance needs at least 2 months");
    const int hours = months_span_hours(months);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> cloud(0.25, 1.0);
    std::normal_distribution<double> noise(0.0, 0.02);

    HourlySeries series;
    series.kind = SeriesKind::Irradiation;
    series.start_hour = hour_from_civil(kStartYear, 1, 1, 0);
    series.values.reserve(static_cast<std::size_t>(hours));
    double cloudiness = cloud(rng);
    for (int t = 0; t < hours; ++t) {
        const int h = t % 24;
        if (h == 0) cloudiness = cloud(rng);
        const int day_of_year = (t / 24) % 365;
        const double season =
            0.65 + 0.35 * std::sin(2.0 * M_PI * (day_of_year - 80) / 365.0);
        double ghi = 0.0;
        if (h > 6 && h < 18)
            ghi = 0.9 * season * cloudiness * std::sin(M_PI * (h - 6) / 12.0) + noise(rng);
        series.values.push_back(std::max(0.0, ghi));
    }
    return series;
}

HourlySeries synth_price(int months, std::uint64_t seed) {
    if (months < 2) throw DataError("synth_price needs at least 2 months");
    const int hours = months_span_hours(months);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> daily(0.85, 1.25);
    std::normal_distribution<double> noise(0.0, 0.03);

    HourlySeries series;
    series.kind = SeriesKind::Price;
    series.start_hour = hour_from_civil(kStartYear, 1, 1, 0);
    series.values.reserve(static_cast<std::size_t>(hours));
    double factor = daily(rng);
    for (int t = 0; t < hours; ++t) {
        const int h = t % 24;
        if (h == 0) factor = daily(rng);
        const double morning = 0.05 * std::exp(-(h - 8.5) * (h - 8.5) / 4.0);
        const double evening = 0.09 * std::exp(-(h - 19.0) * (h - 19.0) / 5.0);
        const double p = (0.08 + morning + evening) * factor * (1.0 + noise(rng));
        series.values.push_back(std::max(0.01, p));
    }
    return series;
}

SplitSeries split(const HourlySeries& series, int test_months) {
    if (test_months < 1) throw DataError("test_months must be >= 1");
    if (series.values.empty()) throw DataError("cannot split an empty series");

    // First hour of the month test_months-1 months before the last sample's month.
    int y, m, d, h;
    civil_from_hour(series.hour_at(series.values.size() - 1), y, m, d, h);
    for (int i = 1; i < test_months; ++i) {
        if (--m < 1) {
            m = 12;
            --y;
        }
    }
    const std::int64_t boundary = hour_from_civil(y, m, 1, 0);
    const std::int64_t offset = boundary - series.start_hour;
    if (offset < 168 + 1)
        throw DataError("series too short: need 168 context hours plus training data "
                        "before the test window");
    const auto idx = static_cast<std::size_t>(offset);

    SplitSeries out;
    out.train.kind = out.test.kind = series.kind;
    out.train.start_hour = series.start_hour;
    out.train.values.assign(series.values.begin(),
                            series.values.begin() + static_cast<std::ptrdiff_t>(idx));
    out.test.start_hour = boundary;
    out.test.values.assign(series.values.begin() + static_cast<std::ptrdiff_t>(idx),
                           series.values.end());
    return out;
}

std::vector<double> day_slice(const HourlySeries& series, std::size_t day_start_index) {
    if (day_start_index + 24 > series.values.size())
        throw DataError("day slice out of range");
    return {series.values.begin() + static_cast<std::ptrdiff_t>(day_start_index),
            series.values.begin() + static_cast<std::ptrdiff_t>(day_start_index + 24)};
}

DayProfile make_day_profile(const HourlySeries& consumption, const HourlySeries& irradiation,
                            const HourlySeries& price, std::size_t day_start_index) {
    DayProfile day;
    day.consumption = day_slice(consumption, day_start_index);
    day.irradiation = day_slice(irradiation, day_start_index);
    day.price = day_slice(price, day_start_index);
    return day;
}

}  // namespace hems
