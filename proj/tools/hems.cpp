// hems: command-line front end for the demand-response pipeline.
//
// Subcommands cover the whole workflow: synthesize data, train the
// forecasters, label and distill the imitation controller, train the MADDPG
// agents, replay single days, evaluate a test month, and render reports.
// Exit codes: 0 success, 2 data error, 3 solver/training error, 4 I/O error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

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

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out = "out";
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path,
                    "Key-value config file (defaults used when omitted)");
    cmd->add_option("--seed", args.seed, "Seed for all randomized steps");
    cmd->add_option("--out", args.out, "Output directory");
}

hems::Config resolve_config(const CommonArgs& args) {
    hems::Config cfg;
    if (!args.config_path.empty()) cfg = hems::load_config(args.config_path);
    cfg.forecast.seed = args.seed;
    cfg.imitation.seed = args.seed;
    cfg.maddpg.seed = args.seed;
    return cfg;
}

void ensure_out(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw hems::IoError("cannot create " + dir + ": " + ec.message());
}

struct SeriesSet {
    hems::HourlySeries cons, ghi, price;
};

SeriesSet load_series(const std::string& dir) {
    SeriesSet s;
    s.cons = hems::load_csv((fs::path(dir) / "consumption.csv").string(),
                            hems::SeriesKind::Consumption);
    s.ghi = hems::load_csv((fs::path(dir) / "irradiance.csv").string(),
                           hems::SeriesKind::Irradiation);
    s.price = hems::load_csv((fs::path(dir) / "price.csv").string(),
                             hems::SeriesKind::Price);
    if (s.cons.start_hour != s.ghi.start_hour || s.cons.start_hour != s.price.start_hour ||
        s.cons.values.size() != s.ghi.values.size() ||
        s.cons.values.size() != s.price.values.size())
        throw hems::DataError("the three input series must be aligned and equal-length");
    return s;
}

struct SplitSet {
    SeriesSet train, test;
};

SplitSet split_series(const SeriesSet& s, int test_months) {
    SplitSet out;
    const auto c = hems::split(s.cons, test_months);
    const auto g = hems::split(s.ghi, test_months);
    const auto p = hems::split(s.price, test_months);
    out.train = {c.train, g.train, p.train};
    out.test = {c.test, g.test, p.test};
    return out;
}

std::vector<hems::DayProfile> full_days(const SeriesSet& s) {
    std::vector<hems::DayProfile> days;
    for (std::size_t start = 0; start + 24 <= s.cons.values.size(); start += 24)
        days.push_back(hems::make_day_profile(s.cons, s.ghi, s.price, start));
    return days;
}

hems::DayContext context_from(const SeriesSet& s) {
    return {s.cons.values, s.ghi.values, s.price.values};
}

// Keeps every loaded model alive for as long as the strategies that reference
// it are in use (the strategy adapters capture by reference).
struct StrategyBundle {
    std::optional<hems::ImitationController> controller;
    std::optional<hems::MaddpgAgents> agents;
    std::optional<hems::Forecaster> ec_h1, ec_h24, ghi_h24, price_h24;
    std::shared_ptr<std::vector<hems::OptimalDispatch>> milp_plans;
    std::vector<hems::NamedStrategy> strategies;
};

hems::Strategy replay_strategy(std::shared_ptr<std::vector<hems::OptimalDispatch>> plans) {
    auto idx = std::make_shared<int>(-1);
    return [plans, idx](const hems::SlotObservation& obs) {
        if (obs.t == 0) ++*idx;
        if (*idx < 0 || static_cast<std::size_t>(*idx) >= plans->size())
            throw hems::DomainError("milp replay ran past its precomputed plans");
        return (*plans)[static_cast<std::size_t>(*idx)]
            .slots[static_cast<std::size_t>(obs.t)];
    };
}

void add_strategy(StrategyBundle& bundle, const std::string& name,
                  const std::string& models, const hems::Config& cfg,
                  const std::vector<hems::DayProfile>& days) {
    const fs::path m(models);
    if (name == "idle") {
        bundle.strategies.push_back({"idle", hems::idle_strategy(), false});
    } else if (name == "milp") {
        bundle.milp_plans = std::make_shared<std::vector<hems::OptimalDispatch>>();
        for (const auto& day : days)
            bundle.milp_plans->push_back(hems::solve_milp(
                hems::build_day_model(day, cfg.system), 1e-9, cfg.node_limit));
        bundle.strategies.push_back({"milp", replay_strategy(bundle.milp_plans), false});
    } else if (name == "imitation") {
        bundle.controller = hems::load_controller((m / "controller").string());
        bundle.strategies.push_back(
            {"imitation", hems::imitation_strategy(*bundle.controller), false});
    } else if (name == "maddpg") {
        bundle.agents = hems::load_agents((m / "agents").string());
        bundle.ec_h1 = hems::load_forecaster((m / "ec_h1.bin").string(),
                                             hems::SeriesKind::Consumption);
        bundle.strategies.push_back(
            {"maddpg", hems::maddpg_strategy(*bundle.agents, *bundle.ec_h1), false});
    } else if (name == "forecast") {
        bundle.ec_h24 = hems::load_forecaster((m / "ec_h24.bin").string(),
                                              hems::SeriesKind::Consumption);
        bundle.ghi_h24 = hems::load_forecaster((m / "ghi_h24.bin").string(),
                                               hems::SeriesKind::Irradiation);
        bundle.price_h24 = hems::load_forecaster((m / "price_h24.bin").string(),
                                                 hems::SeriesKind::Price);
        bundle.strategies.push_back(
            {"forecast",
             hems::forecast_milp_strategy(hems::forecaster_fn(*bundle.ec_h24),
                                          hems::forecaster_fn(*bundle.ghi_h24),
                                          hems::forecaster_fn(*bundle.price_h24),
                                          bundle.ec_h24->window, cfg.system),
             true});
    } else {
        throw hems::DataError("unknown strategy '" + name +
                              "' (idle, milp, imitation, maddpg, forecast)");
    }
}

json report_to_json(const hems::EvaluationReport& report) {
    json j;
    j["baseline_costs"] = report.baseline_costs;
    j["milp_costs"] = report.milp_costs;
    j["strategies"] = json::array();
    for (const auto& s : report.strategies)
        j["strategies"].push_back({{"name", s.name},
                                   {"daily_costs", s.daily_costs},
                                   {"effectiveness", s.effectiveness},
                                   {"res_waste_total", s.res_waste_total},
                                   {"mean_slot_seconds", s.mean_slot_seconds},
                                   {"mean_plan_seconds", s.mean_plan_seconds}});
    return j;
}

hems::EvaluationReport report_from_json(const json& j) {
    hems::EvaluationReport report;
    try {
        report.baseline_costs = j.at("baseline_costs").get<std::vector<double>>();
        report.milp_costs = j.at("milp_costs").get<std::vector<double>>();
        for (const auto& s : j.at("strategies")) {
            hems::StrategyEval eval;
            eval.name = s.at("name").get<std::string>();
            eval.daily_costs = s.at("daily_costs").get<std::vector<double>>();
            eval.effectiveness = s.at("effectiveness").get<double>();
            eval.res_waste_total = s.at("res_waste_total").get<double>();
            eval.mean_slot_seconds = s.at("mean_slot_seconds").get<double>();
            eval.mean_plan_seconds = s.at("mean_plan_seconds").get<double>();
            report.strategies.push_back(std::move(eval));
        }
    } catch (const json::exception& e) {
        throw hems::DataError(std::string("malformed report json: ") + e.what());
    }
    return report;
}

void save_report_json(const hems::EvaluationReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw hems::IoError("cannot open " + path + " for writing");
    out << report_to_json(report).dump(2) << '\n';
    if (!out) throw hems::IoError("write failed: " + path);
}

hems::EvaluationReport load_report_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw hems::IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw hems::DataError(std::string("malformed report json: ") + e.what());
    }
    return report_from_json(j);
}

// ---- subcommand bodies ----

void cmd_synth_data(const CommonArgs& args) {
    const auto cfg = resolve_config(args);
    ensure_out(args.out);
    const auto home =
        hems::HomeClass::preset(hems::behavior_from_name(cfg.home_class));
    const auto cons = hems::synth_home(home, cfg.months, args.seed);
    const auto ghi = hems::synth_irradiance(cfg.months, args.seed + 1);
    const auto price = hems::synth_price(cfg.months, args.seed + 2);
    hems::save_csv(cons, (fs::path(args.out) / "consumption.csv").string());
    hems::save_csv(ghi, (fs::path(args.out) / "irradiance.csv").string());
    hems::save_csv(price, (fs::path(args.out) / "price.csv").string());
    std::cout << "wrote " << cfg.months << " months (" << cons.values.size()
              << " hours) of class '" << cfg.home_class << "' data to " << args.out
              << "\n";
}

void cmd_train_forecasters(const CommonArgs& args, const std::string& data) {
    const auto cfg = resolve_config(args);
    ensure_out(args.out);
    const auto series = load_series(data);
    const auto sp = split_series(series, cfg.test_months);

    struct Job {
        const char* file;
        const hems::HourlySeries* train;
        const hems::HourlySeries* test;
        int horizon;
        std::uint64_t seed_offset;
    };
    const Job jobs[] = {
        {"ec_h1.bin", &sp.train.cons, &sp.test.cons, 1, 0},
        {"ec_h24.bin", &sp.train.cons, &sp.test.cons, 24, 1},
        {"ghi_h24.bin", &sp.train.ghi, &sp.test.ghi, 24, 2},
        {"price_h24.bin", &sp.train.price, &sp.test.price, 24, 3},
    };
    std::ofstream mape_csv((fs::path(args.out) / "mape.csv").string(),
                           std::ios::binary);
    if (!mape_csv)
        throw hems::IoError("cannot open " + args.out + "/mape.csv for writing");
    mape_csv << "forecaster,horizon,test_mape_percent\n";
    for (const auto& job : jobs) {
        auto opts = cfg.forecast;
        opts.horizon = job.horizon;
        opts.seed = args.seed + job.seed_offset;
        const auto f = hems::fit_forecaster(*job.train, opts);
        hems::save_forecaster(f, (fs::path(args.out) / job.file).string());
        const double m = hems::evaluate_mape(f, *job.train, *job.test);
        mape_csv << job.file << ',' << job.horizon << ',' << m << '\n';
        std::cout << job.file << ": test MAPE " << m << "%\n";
    }
    if (!mape_csv) throw hems::IoError("write failed: " + args.out + "/mape.csv");
}

void cmd_label_dataset(const CommonArgs& args, const std::string& data) {
    const auto cfg = resolve_config(args);
    ensure_out(args.out);
    const auto sp = split_series(load_series(data), cfg.test_months);
    const auto days = full_days(sp.train);
    const auto dataset =
        hems::generate_dataset(days, cfg.system, &std::cerr, cfg.node_limit);
    hems::dump_dataset_csv(dataset, (fs::path(args.out) / "dataset.csv").string());
    std::cout << "labeled " << dataset.size() << " slots from "
              << days.size() << " training days\n";
}

void cmd_train_imitation(const CommonArgs& args, const std::string& data,
                         const std::string& dataset_path) {
    const auto cfg = resolve_config(args);
    ensure_out(args.out);
    const auto sp = split_series(load_series(data), cfg.test_months);
    const auto dataset = hems::load_dataset_csv(dataset_path);
    // The controller only needs the current-hour consumption estimate.
    auto fopts = cfg.forecast;
    fopts.horizon = 1;
    auto controller = hems::train_controller(dataset, sp.train.cons, cfg.imitation,
                                             fopts);
    controller.params = cfg.system;
    hems::save_controller(controller, (fs::path(args.out) / "controller").string());
    std::cout << "saved imitation controller to " << args.out << "/controller\n";
}

void cmd_train_maddpg(const CommonArgs& args, const std::string& data) {
    const auto cfg = resolve_config(args);
    ensure_out(args.out);
    const auto sp = split_series(load_series(data), cfg.test_months);
    const auto days = full_days(sp.train);
    const auto agents = hems::train_agents(days, cfg.system, cfg.maddpg);
    hems::save_agents(agents, (fs::path(args.out) / "agents").string());
    hems::dump_returns_csv(agents.episode_returns,
                           (fs::path(args.out) / "returns.csv").string());
    std::cout << "trained " << agents.episode_returns.size()
              << " episodes; agents saved to " << args.out << "/agents\n";
}

void cmd_run_day(const CommonArgs& args, const std::string& data,
                 const std::string& models, const std::string& strategy_name,
                 int day_index) {
    const auto cfg = resolve_config(args);
    ensure_out(args.out);
    const auto sp = split_series(load_series(data), cfg.test_months);
    const auto days = full_days(sp.test);
    if (day_index < 0 || static_cast<std::size_t>(day_index) >= days.size())
        throw hems::DataError("--day must be in [0, " +
                              std::to_string(days.size() - 1) + "]");

    // History: the whole training period plus the test days already elapsed.
    auto ctx = context_from(sp.train);
    for (int d = 0; d < day_index; ++d) {
        const auto& day = days[static_cast<std::size_t>(d)];
        ctx.consumption.insert(ctx.consumption.end(), day.consumption.begin(),
                               day.consumption.end());
        ctx.irradiation.insert(ctx.irradiation.end(), day.irradiation.begin(),
                               day.irradiation.end());
        ctx.price.insert(ctx.price.end(), day.price.begin(), day.price.end());
    }

    StrategyBundle bundle;
    add_strategy(bundle, strategy_name, models, cfg,
                 {days[static_cast<std::size_t>(day_index)]});
    const auto& day = days[static_cast<std::size_t>(day_index)];
    const auto result =
        hems::simulate_day(bundle.strategies[0].strategy, day, ctx, cfg.system);
    hems::dump_result_csv(result, day, (fs::path(args.out) / "day.csv").string());
    std::cout << strategy_name << " day " << day_index << ": cost " << result.cost
              << " (baseline " << result.baseline << "), RES waste "
              << result.res_waste << " kWh; wrote " << args.out << "/day.csv\n";
}

void cmd_evaluate_month(const CommonArgs& args, const std::string& data,
                        const std::string& models,
                        std::vector<std::string> strategy_names) {
    const auto cfg = resolve_config(args);
    ensure_out(args.out);
    const auto sp = split_series(load_series(data), cfg.test_months);
    const auto days = full_days(sp.test);
    if (strategy_names.empty()) strategy_names = {"idle", "milp"};

    StrategyBundle bundle;
    for (const auto& name : strategy_names)
        add_strategy(bundle, name, models, cfg, days);

    const auto report = hems::evaluate_month(bundle.strategies, days,
                                             context_from(sp.train), cfg.system,
                                             cfg.node_limit);
    save_report_json(report, (fs::path(args.out) / "report.json").string());
    hems::emit_report(report, args.out);
    for (const auto& s : report.strategies)
        std::cout << s.name << ": effectiveness " << s.effectiveness
                  << "%, RES waste " << s.res_waste_total << " kWh, mean slot "
                  << s.mean_slot_seconds << " s\n";
}

void cmd_report(const CommonArgs& args, const std::string& input) {
    const auto report = load_report_json(input);
    hems::emit_report(report, args.out);
    std::cout << "rendered report for " << report.strategies.size()
              << " strategies over " << report.baseline_costs.size() << " days to "
              << args.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Home energy management: optimization, learning, and evaluation"};
    app.require_subcommand(1);

    CommonArgs synth_args;
    auto* synth = app.add_subcommand("synth-data", "Generate synthetic input series");
    add_common(synth, synth_args);

    CommonArgs fc_args;
    std::string fc_data;
    auto* fc = app.add_subcommand("train-forecasters",
                                  "Fit GRU forecasters on the training split");
    add_common(fc, fc_args);
    fc->add_option("--data", fc_data, "Directory with the input CSVs")->required();

    CommonArgs label_args;
    std::string label_data;
    auto* label = app.add_subcommand(
        "label-dataset", "Solve the training days and dump optimal labels");
    add_common(label, label_args);
    label->add_option("--data", label_data, "Directory with the input CSVs")
        ->required();

    CommonArgs imit_args;
    std::string imit_data, imit_dataset;
    auto* imit = app.add_subcommand("train-imitation",
                                    "Distill the solver into the controller heads");
    add_common(imit, imit_args);
    imit->add_option("--data", imit_data, "Directory with the input CSVs")->required();
    imit->add_option("--dataset", imit_dataset, "Labeled dataset CSV")->required();

    CommonArgs dr_args;
    std::string dr_data;
    auto* dr = app.add_subcommand("train-maddpg", "Train the two-agent policy");
    add_common(dr, dr_args);
    dr->add_option("--data", dr_data, "Directory with the input CSVs")->required();

    CommonArgs day_args;
    std::string day_data, day_models = "models", day_strategy = "idle";
    int day_index = 0;
    auto* day = app.add_subcommand("run-day", "Replay one test day with a strategy");
    add_common(day, day_args);
    day->add_option("--data", day_data, "Directory with the input CSVs")->required();
    day->add_option("--models", day_models, "Directory with trained models");
    day->add_option("--strategy", day_strategy,
                    "idle | milp | imitation | maddpg | forecast");
    day->add_option("--day", day_index, "Day index within the test split");

    CommonArgs eval_args;
    std::string eval_data, eval_models = "models";
    std::vector<std::string> eval_strategies;
    auto* eval = app.add_subcommand("evaluate-month",
                                    "Compare strategies over the test month");
    add_common(eval, eval_args);
    eval->add_option("--data", eval_data, "Directory with the input CSVs")->required();
    eval->add_option("--models", eval_models, "Directory with trained models");
    eval->add_option("--strategies", eval_strategies,
                     "Strategies to compare (default: idle milp)");

    CommonArgs rep_args;
    std::string rep_input;
    auto* rep = app.add_subcommand("report", "Render CSV/SVG artifacts from a report");
    add_common(rep, rep_args);
    rep->add_option("--in", rep_input, "report.json from evaluate-month")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage problems are data errors
    }

    try {
        if (synth->parsed()) cmd_synth_data(synth_args);
        if (fc->parsed()) cmd_train_forecasters(fc_args, fc_data);
        if (label->parsed()) cmd_label_dataset(label_args, label_data);
        if (imit->parsed()) cmd_train_imitation(imit_args, imit_data, imit_dataset);
        if (dr->parsed()) cmd_train_maddpg(dr_args, dr_data);
        if (day->parsed())
            cmd_run_day(day_args, day_data, day_models, day_strategy, day_index);
        if (eval->parsed())
            cmd_evaluate_month(eval_args, eval_data, eval_models, eval_strategies);
        if (rep->parsed()) cmd_report(rep_args, rep_input);
    } catch (const hems::IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 4;
    } catch (const hems::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const hems::TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return 3;
    } catch (const hems::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const hems::DomainError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
