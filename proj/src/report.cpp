#include "hems/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace hems {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// SVG coordinates: two decimals are plenty for a 640x400 canvas and keep the
// files small and stable.
std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMarginLeft = 60.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 20.0;
constexpr double kMarginBottom = 40.0;

// Fixed palette cycled over the plotted series.
const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                         "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    double to_x(double day, std::size_t n) const {
        if (n <= 1) return kMarginLeft;
        return kMarginLeft +
               day / static_cast<double>(n - 1) * (kWidth - kMarginLeft - kMarginRight);
    }
    double to_y(double v) const {
        const double span = hi > lo ? hi - lo : 1.0;
        return kHeight - kMarginBottom -
               (v - lo) / span * (kHeight - kMarginTop - kMarginBottom);
    }
};

void svg_open(std::ostream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
        << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << px(kWidth / 2) << "\" y=\"14\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"13\">"
        << title << "</text>\n";
    // Axes.
    out << "<line x1=\"" << px(kMarginLeft) << "\" y1=\"" << px(kMarginTop)
        << "\" x2=\"" << px(kMarginLeft) << "\" y2=\"" << px(kHeight - kMarginBottom)
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << px(kMarginLeft) << "\" y1=\"" << px(kHeight - kMarginBottom)
        << "\" x2=\"" << px(kWidth - kMarginRight) << "\" y2=\""
        << px(kHeight - kMarginBottom) << "\" stroke=\"black\"/>\n";
}

void svg_axis_labels(std::ostream& out, const Axis& axis, const std::string& x_label) {
    out << "<text x=\"" << px(kMarginLeft - 6) << "\" y=\"" << px(kMarginTop + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
        << px(axis.hi) << "</text>\n";
    out << "<text x=\"" << px(kMarginLeft - 6) << "\" y=\""
        << px(kHeight - kMarginBottom) << "\" text-anchor=\"end\" "
           "font-family=\"sans-serif\" font-size=\"10\">"
        << px(axis.lo) << "</text>\n";
    out << "<text x=\"" << px(kWidth / 2) << "\" y=\"" << px(kHeight - 8)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << x_label << "</text>\n";
}

void svg_legend(std::ostream& out, const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double y = kMarginTop + 14.0 + 14.0 * static_cast<double>(i);
        out << "<rect x=\"" << px(kWidth - kMarginRight - 150) << "\" y=\""
            << px(y - 8) << "\" width=\"10\" height=\"10\" fill=\""
            << kColors[i % 8] << "\"/>\n";
        out << "<text x=\"" << px(kWidth - kMarginRight - 136) << "\" y=\"" << px(y)
            << "\" font-family=\"sans-serif\" font-size=\"10\">" << names[i]
            << "</text>\n";
    }
}

void write_costs_svg(const EvaluationReport& report, const std::string& path) {
    std::vector<std::string> names = {"baseline", "milp"};
    std::vector<const std::vector<double>*> series = {&report.baseline_costs,
                                                      &report.milp_costs};
    for (const auto& s : report.strategies) {
        names.push_back(s.name);
        series.push_back(&s.daily_costs);
    }
    Axis axis;
    bool any = false;
    for (const auto* s : series)
        for (double v : *s) {
            if (!any) {
                axis.lo = axis.hi = v;
                any = true;
            }
            axis.lo = std::min(axis.lo, v);
            axis.hi = std::max(axis.hi, v);
        }
    if (!any) {
        axis.lo = 0.0;
        axis.hi = 1.0;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    svg_open(out, "Daily energy cost");
    svg_axis_labels(out, axis, "day");
    const std::size_t n = report.baseline_costs.size();
    if (n > 0) {
        for (std::size_t i = 0; i < series.size(); ++i) {
            out << "<polyline fill=\"none\" stroke=\"" << kColors[i % 8]
                << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t d = 0; d < series[i]->size(); ++d) {
                if (d) out << ' ';
                out << px(axis.to_x(static_cast<double>(d), n)) << ','
                    << px(axis.to_y((*series[i])[d]));
            }
            out << "\"/>\n";
        }
        svg_legend(out, names);
    }
    out << "</svg>\n";
    if (!out) throw IoError("write failed: " + path);
}

void write_bar_svg(const std::vector<std::string>& names,
                   const std::vector<double>& values, const std::string& title,
                   const std::string& path) {
    Axis axis;
    axis.lo = 0.0;
    axis.hi = 1.0;
    for (double v : values) axis.hi = std::max(axis.hi, v);
    for (double v : values) axis.lo = std::min(axis.lo, v);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    svg_open(out, title);
    svg_axis_labels(out, axis, "strategy");
    const std::size_t n = values.size();
    if (n > 0) {
        const double span = kWidth - kMarginLeft - kMarginRight;
        const double step = span / static_cast<double>(n);
        const double bar = step * 0.6;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = kMarginLeft + step * (static_cast<double>(i) + 0.2);
            const double y0 = axis.to_y(std::max(values[i], 0.0));
            const double y1 = axis.to_y(std::min(values[i], 0.0));
            out << "<rect x=\"" << px(x) << "\" y=\"" << px(y0) << "\" width=\""
                << px(bar) << "\" height=\"" << px(std::max(y1 - y0, 0.0))
                << "\" fill=\"" << kColors[i % 8] << "\"/>\n";
            out << "<text x=\"" << px(x + bar / 2) << "\" y=\""
                << px(kHeight - kMarginBottom + 14) << "\" text-anchor=\"middle\" "
                   "font-family=\"sans-serif\" font-size=\"10\">"
                << names[i] << "</text>\n";
            out << "<text x=\"" << px(x + bar / 2) << "\" y=\"" << px(y0 - 4)
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                   "font-size=\"10\">"
                << px(values[i]) << "</text>\n";
        }
    }
    out << "</svg>\n";
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace

double effectiveness(const std::vector<double>& costs_strategy,
                     const std::vector<double>& costs_milp,
                     const std::vector<double>& costs_base) {
    if (costs_strategy.size() != costs_milp.size() ||
        costs_strategy.size() != costs_base.size())
        throw DomainError("effectiveness needs equally long cost series");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < costs_base.size(); ++i) {
        if (!(costs_base[i] > 0.0))
            throw DomainError("effectiveness needs a positive baseline cost");
        if (costs_milp[i] > costs_base[i])
            throw DomainError("optimal cost exceeds the baseline; bad reference");
        num += (costs_base[i] - costs_strategy[i]) / costs_base[i];
        den += (costs_base[i] - costs_milp[i]) / costs_base[i];
    }
    if (den == 0.0)
        throw DomainError("effectiveness undefined: the optimizer saves nothing");
    return 100.0 * num / den;
}

EvaluationReport evaluate_month(const std::vector<NamedStrategy>& strategies,
                                const std::vector<DayProfile>& days,
                                const DayContext& initial_context,
                                const SystemParams& params, long node_limit) {
    params.validate();
    EvaluationReport report;
    report.strategies.resize(strategies.size());
    std::vector<double> slot_time_sum(strategies.size(), 0.0);
    std::vector<std::size_t> slot_time_count(strategies.size(), 0);
    std::vector<double> plan_time_sum(strategies.size(), 0.0);
    for (std::size_t i = 0; i < strategies.size(); ++i)
        report.strategies[i].name = strategies[i].name;

    DayContext ctx = initial_context;
    for (const auto& day : days) {
        day.validate(params.slots_per_day);
        report.baseline_costs.push_back(baseline_cost(day, params));
        // End-of-day reference, priced through the same per-slot formula the
        // simulator uses so a replay of this dispatch costs exactly the same.
        const auto opt = solve_milp(build_day_model(day, params), 1e-9, node_limit);
        double milp_cost = 0.0;
        for (int t = 0; t < params.slots_per_day; ++t)
            milp_cost += slot_cost(opt.slots[static_cast<std::size_t>(t)],
                                   day.consumption[static_cast<std::size_t>(t)],
                                   day.price[static_cast<std::size_t>(t)], params);
        report.milp_costs.push_back(milp_cost);

        for (std::size_t i = 0; i < strategies.size(); ++i) {
            const auto result = simulate_day(strategies[i].strategy, day, ctx, params);
            auto& eval = report.strategies[i];
            eval.daily_costs.push_back(result.cost);
            eval.res_waste_total += result.res_waste;
            std::size_t first = 0;
            if (strategies[i].day_ahead && !result.slot_seconds.empty()) {
                plan_time_sum[i] += result.slot_seconds[0];
                first = 1;
            }
            for (std::size_t t = first; t < result.slot_seconds.size(); ++t) {
                slot_time_sum[i] += result.slot_seconds[t];
                ++slot_time_count[i];
            }
        }
        ctx.consumption.insert(ctx.consumption.end(), day.consumption.begin(),
                               day.consumption.end());
        ctx.irradiation.insert(ctx.irradiation.end(), day.irradiation.begin(),
                               day.irradiation.end());
        ctx.price.insert(ctx.price.end(), day.price.begin(), day.price.end());
    }

    for (std::size_t i = 0; i < strategies.size(); ++i) {
        auto& eval = report.strategies[i];
        if (!days.empty())
            eval.effectiveness = effectiveness(eval.daily_costs, report.milp_costs,
                                               report.baseline_costs);
        if (slot_time_count[i] > 0)
            eval.mean_slot_seconds =
                slot_time_sum[i] / static_cast<double>(slot_time_count[i]);
        if (strategies[i].day_ahead && !days.empty())
            eval.mean_plan_seconds =
                plan_time_sum[i] / static_cast<double>(days.size());
    }
    return report;
}

void emit_report(const EvaluationReport& report, const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    const auto join = [&](const char* name) {
        return (std::filesystem::path(out_dir) / name).string();
    };

    {
        const std::string path = join("costs.csv");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open " + path + " for writing");
        out << "day,baseline,milp";
        for (const auto& s : report.strategies) out << ',' << s.name;
        out << '\n';
        for (std::size_t d = 0; d < report.baseline_costs.size(); ++d) {
            out << d << ',' << fmt(report.baseline_costs[d]) << ','
                << fmt(report.milp_costs[d]);
            for (const auto& s : report.strategies) out << ',' << fmt(s.daily_costs[d]);
            out << '\n';
        }
        if (!out) throw IoError("write failed: " + path);
    }

    {
        const std::string path = join("summary.csv");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open " + path + " for writing");
        out << "strategy,total_cost,effectiveness,res_waste_kwh,"
               "mean_slot_seconds,mean_plan_seconds\n";
        for (const auto& s : report.strategies) {
            const double total =
                std::accumulate(s.daily_costs.begin(), s.daily_costs.end(), 0.0);
            out << s.name << ',' << fmt(total) << ',' << fmt(s.effectiveness) << ','
                << fmt(s.res_waste_total) << ',' << fmt(s.mean_slot_seconds) << ','
                << fmt(s.mean_plan_seconds) << '\n';
        }
        if (!out) throw IoError("write failed: " + path);
    }

    write_costs_svg(report, join("costs.svg"));

    std::vector<std::string> names;
    std::vector<double> eff;
    std::vector<double> waste;
    for (const auto& s : report.strategies) {
        names.push_back(s.name);
        eff.push_back(s.effectiveness);
        waste.push_back(s.res_waste_total);
    }
    write_bar_svg(names, eff, "Effectiveness (%)", join("effectiveness.svg"));
    write_bar_svg(names, waste, "RES waste (kWh)", join("waste.svg"));
}

}  // namespace hems
