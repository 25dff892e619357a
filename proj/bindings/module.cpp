// Python bindings for the HEMS core: domain math, the MILP solver, data
// synthesis, forecasting, both learned controllers, and the evaluation
// metrics. Strategies are exposed through simulate_* helpers rather than raw
// callables so the GIL never sits inside the hot simulation loop.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

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

namespace py = pybind11;
using namespace hems;

namespace {

OptimalDispatch solve_day(const DayProfile& day, const SystemParams& params,
                          long node_limit) {
    return solve_milp(build_day_model(day, params), 1e-9, node_limit);
}

DayContext make_context(const std::vector<double>& cons,
                        const std::vector<double>& ghi,
                        const std::vector<double>& price) {
    return DayContext{cons, ghi, price};
}

RealizedDayResult simulate_idle(const DayProfile& day, const SystemParams& params) {
    return simulate_day(idle_strategy(), day, DayContext{}, params);
}

RealizedDayResult simulate_dispatch(const OptimalDispatch& plan, const DayProfile& day,
                                    const SystemParams& params) {
    auto shared = std::make_shared<OptimalDispatch>(plan);
    Strategy replay = [shared](const SlotObservation& obs) {
        return shared->slots[static_cast<std::size_t>(obs.t)];
    };
    return simulate_day(replay, day, DayContext{}, params);
}

RealizedDayResult simulate_forecast_milp(const Forecaster& f_ec, const Forecaster& f_ghi,
                                         const Forecaster& f_price, const DayProfile& day,
                                         const DayContext& context,
                                         const SystemParams& params) {
    const auto strategy =
        forecast_milp_strategy(forecaster_fn(f_ec), forecaster_fn(f_ghi),
                               forecaster_fn(f_price), f_ec.window, params);
    return simulate_day(strategy, day, context, params);
}

RealizedDayResult simulate_imitation(const ImitationController& controller,
                                     const DayProfile& day, const DayContext& context) {
    // The controller carries its own system parameters.
    return simulate_day(imitation_strategy(controller), day, context, controller.params);
}

RealizedDayResult simulate_maddpg(const MaddpgAgents& agents, const Forecaster& ec_h1,
                                  const DayProfile& day, const DayContext& context) {
    return simulate_day(maddpg_strategy(agents, ec_h1), day, context, agents.params);
}

}  // namespace

PYBIND11_MODULE(_hems, m) {
    m.doc() = "Home energy management: MILP dispatch, forecasting, and learned "
              "demand-response strategies";

    py::register_exception<IoError>(m, "HemsIoError", PyExc_OSError);
    py::register_exception<DataError>(m, "HemsDataError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "HemsDomainError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "HemsSolverError", PyExc_RuntimeError);
    py::register_exception<TrainingError>(m, "HemsTrainingError", PyExc_RuntimeError);

    py::class_<SystemParams>(m, "SystemParams")
        .def(py::init<>())
        .def_readwrite("ess_efficiency", &SystemParams::ess_efficiency)
        .def_readwrite("charge_rate", &SystemParams::charge_rate)
        .def_readwrite("discharge_rate", &SystemParams::discharge_rate)
        .def_readwrite("level_min", &SystemParams::level_min)
        .def_readwrite("level_max", &SystemParams::level_max)
        .def_readwrite("level_initial", &SystemParams::level_initial)
        .def_readwrite("panel_area", &SystemParams::panel_area)
        .def_readwrite("res_efficiency", &SystemParams::res_efficiency)
        .def_readwrite("sell_ratio", &SystemParams::sell_ratio)
        .def_readwrite("slot_duration", &SystemParams::slot_duration)
        .def_readwrite("slots_per_day", &SystemParams::slots_per_day)
        .def("validate", &SystemParams::validate)
        .def("max_charge_energy", &SystemParams::max_charge_energy)
        .def("max_discharge_energy", &SystemParams::max_discharge_energy);

    py::class_<DayProfile>(m, "DayProfile")
        .def(py::init<>())
        .def_readwrite("consumption", &DayProfile::consumption)
        .def_readwrite("irradiation", &DayProfile::irradiation)
        .def_readwrite("price", &DayProfile::price)
        .def("validate", &DayProfile::validate, py::arg("slots_per_day"));

    py::class_<SlotDispatch>(m, "SlotDispatch")
        .def(py::init<>())
        .def_readwrite("res_to_load", &SlotDispatch::res_to_load)
        .def_readwrite("res_to_ess", &SlotDispatch::res_to_ess)
        .def_readwrite("grid_to_ess", &SlotDispatch::grid_to_ess)
        .def_readwrite("ess_to_load", &SlotDispatch::ess_to_load)
        .def_readwrite("ess_to_sell", &SlotDispatch::ess_to_sell)
        .def_readwrite("charging", &SlotDispatch::charging)
        .def("charge_total", &SlotDispatch::charge_total)
        .def("discharge_total", &SlotDispatch::discharge_total)
        .def("signed_ess_energy", &SlotDispatch::signed_ess_energy);

    py::class_<OptimalDispatch>(m, "OptimalDispatch")
        .def_readonly("slots", &OptimalDispatch::slots)
        .def_readonly("levels", &OptimalDispatch::levels)
        .def_readonly("objective", &OptimalDispatch::objective);

    py::class_<RealizedDayResult>(m, "RealizedDayResult")
        .def_readonly("cost", &RealizedDayResult::cost)
        .def_readonly("baseline", &RealizedDayResult::baseline)
        .def_readonly("res_waste", &RealizedDayResult::res_waste)
        .def_readonly("terminal_residual", &RealizedDayResult::terminal_residual)
        .def_readonly("dispatches", &RealizedDayResult::dispatches)
        .def_readonly("levels", &RealizedDayResult::levels)
        .def_readonly("slot_seconds", &RealizedDayResult::slot_seconds);

    py::class_<DayContext>(m, "DayContext")
        .def(py::init<>())
        .def(py::init(&make_context), py::arg("consumption"), py::arg("irradiation"),
             py::arg("price"))
        .def_readwrite("consumption", &DayContext::consumption)
        .def_readwrite("irradiation", &DayContext::irradiation)
        .def_readwrite("price", &DayContext::price);

    py::class_<HourlySeries>(m, "HourlySeries")
        .def(py::init<>())
        .def_readwrite("start_hour", &HourlySeries::start_hour)
        .def_readwrite("values", &HourlySeries::values)
        .def("validate", &HourlySeries::validate);

    py::class_<ForecastOptions>(m, "ForecastOptions")
        .def(py::init<>())
        .def_readwrite("horizon", &ForecastOptions::horizon)
        .def_readwrite("window", &ForecastOptions::window)
        .def_readwrite("layers", &ForecastOptions::layers)
        .def_readwrite("hidden", &ForecastOptions::hidden)
        .def_readwrite("epochs", &ForecastOptions::epochs)
        .def_readwrite("batch", &ForecastOptions::batch)
        .def_readwrite("lr", &ForecastOptions::lr)
        .def_readwrite("seed", &ForecastOptions::seed)
        .def_readwrite("max_samples", &ForecastOptions::max_samples);

    py::class_<Forecaster>(m, "Forecaster")
        .def_readonly("horizon", &Forecaster::horizon)
        .def_readonly("window", &Forecaster::window)
        .def("predict", [](const Forecaster& f, const std::vector<double>& recent) {
            return f.predict(recent);
        });

    py::class_<ImitationTrainOptions>(m, "ImitationTrainOptions")
        .def(py::init<>())
        .def_readwrite("hidden", &ImitationTrainOptions::hidden)
        .def_readwrite("epochs", &ImitationTrainOptions::epochs)
        .def_readwrite("batch", &ImitationTrainOptions::batch)
        .def_readwrite("lr", &ImitationTrainOptions::lr)
        .def_readwrite("seed", &ImitationTrainOptions::seed);

    py::class_<ImitationDataset>(m, "ImitationDataset")
        .def_readonly("inputs", &ImitationDataset::inputs)
        .def_readonly("res_load", &ImitationDataset::res_load)
        .def_readonly("grid_charge", &ImitationDataset::grid_charge)
        .def_readonly("ess_load", &ImitationDataset::ess_load)
        .def_readonly("ess_sell", &ImitationDataset::ess_sell)
        .def("__len__", &ImitationDataset::size);

    py::class_<ImitationController>(m, "ImitationController");

    py::class_<MaddpgConfig>(m, "MaddpgConfig")
        .def(py::init<>())
        .def_readwrite("episodes", &MaddpgConfig::episodes)
        .def_readwrite("gamma", &MaddpgConfig::gamma)
        .def_readwrite("tau", &MaddpgConfig::tau)
        .def_readwrite("lr_actor", &MaddpgConfig::lr_actor)
        .def_readwrite("lr_critic", &MaddpgConfig::lr_critic)
        .def_readwrite("actor_res_hidden", &MaddpgConfig::actor_res_hidden)
        .def_readwrite("critic_res_hidden", &MaddpgConfig::critic_res_hidden)
        .def_readwrite("actor_ess_hidden", &MaddpgConfig::actor_ess_hidden)
        .def_readwrite("critic_ess_hidden", &MaddpgConfig::critic_ess_hidden)
        .def_readwrite("replay_capacity", &MaddpgConfig::replay_capacity)
        .def_readwrite("batch", &MaddpgConfig::batch)
        .def_readwrite("noise_start", &MaddpgConfig::noise_start)
        .def_readwrite("noise_end", &MaddpgConfig::noise_end)
        .def_readwrite("penalty_lambda", &MaddpgConfig::penalty_lambda)
        .def_readwrite("seed", &MaddpgConfig::seed)
        .def_readwrite("stop_return", &MaddpgConfig::stop_return)
        .def_readwrite("stop_window", &MaddpgConfig::stop_window)
        .def_readwrite("max_seconds", &MaddpgConfig::max_seconds);

    py::class_<MaddpgAgents>(m, "MaddpgAgents")
        .def_readonly("episode_returns", &MaddpgAgents::episode_returns);

    // Core domain math.
    m.def("res_energy", &res_energy, py::arg("ghi"), py::arg("params"));
    m.def("slot_cost", &slot_cost, py::arg("dispatch"), py::arg("e_ec"),
          py::arg("price"), py::arg("params"));
    m.def(
        "slot_cost_signed",
        [](double e_cd, double e_res_load, double e_ec, double e_res, double price,
           const SystemParams& p) {
            return slot_cost_signed(SignedEssAction{e_cd}, e_res_load, e_ec, e_res,
                                    price, p);
        },
        py::arg("e_cd"), py::arg("e_res_load"), py::arg("e_ec"), py::arg("e_res"),
        py::arg("price"), py::arg("params"));
    m.def("ess_level_update", &ess_level_update, py::arg("level"), py::arg("dispatch"),
          py::arg("params"));
    m.def("baseline_cost", &baseline_cost, py::arg("day"), py::arg("params"));

    // MILP.
    m.def("solve_day", &solve_day, py::arg("day"), py::arg("params"),
          py::arg("node_limit") = 200000,
          "Exact branch-and-bound dispatch for one day");
    m.def("simulate_idle", &simulate_idle, py::arg("day"), py::arg("params"));
    m.def("simulate_dispatch", &simulate_dispatch, py::arg("plan"), py::arg("day"),
          py::arg("params"), "Replays a fixed dispatch through the simulator");

    // Data synthesis and splitting.
    m.def(
        "synth_consumption",
        [](const std::string& home_class, int months, std::uint64_t seed) {
            return synth_home(HomeClass::preset(behavior_from_name(home_class)),
                              months, seed);
        },
        py::arg("home_class"), py::arg("months"), py::arg("seed"));
    m.def("synth_irradiance", &synth_irradiance, py::arg("months"), py::arg("seed"));
    m.def("synth_price", &synth_price, py::arg("months"), py::arg("seed"));
    m.def(
        "split",
        [](const HourlySeries& s, int test_months) {
            const auto sp = split(s, test_months);
            return py::make_tuple(sp.train, sp.test);
        },
        py::arg("series"), py::arg("test_months") = 1);
    m.def("make_day_profile", &make_day_profile, py::arg("consumption"),
          py::arg("irradiation"), py::arg("price"), py::arg("day_start_index"));

    // Forecasting.
    m.def("fit_forecaster", &fit_forecaster, py::arg("history"), py::arg("options"));
    m.def("evaluate_mape", &evaluate_mape, py::arg("forecaster"), py::arg("context"),
          py::arg("test"), py::arg("floor") = 0.01);

    // Imitation learning.
    m.def("generate_dataset",
          [](const std::vector<DayProfile>& days, const SystemParams& params,
             long node_limit) { return generate_dataset(days, params, nullptr, node_limit); },
          py::arg("days"), py::arg("params"), py::arg("node_limit") = 200000);
    m.def(
        "train_controller",
        [](const ImitationDataset& data, const HourlySeries& history,
           const ImitationTrainOptions& opts, const ForecastOptions& fopts,
           const SystemParams& params) {
            auto c = train_controller(data, history, opts, fopts);
            c.params = params;
            return c;
        },
        py::arg("dataset"), py::arg("forecaster_history"), py::arg("options"),
        py::arg("forecast_options"), py::arg("params"));
    m.def("simulate_imitation", &simulate_imitation, py::arg("controller"),
          py::arg("day"), py::arg("context"));

    // MADDPG.
    m.def("train_agents", &train_agents, py::arg("history"), py::arg("params"),
          py::arg("config"));
    m.def("simulate_maddpg", &simulate_maddpg, py::arg("agents"), py::arg("ec_h1"),
          py::arg("day"), py::arg("context"));
    m.def("greedy_day_return", &greedy_day_return, py::arg("agents"), py::arg("day"),
          py::arg("penalty_lambda") = 1.0);

    // Forecast-based day-ahead planning.
    m.def("simulate_forecast_milp", &simulate_forecast_milp, py::arg("f_ec"),
          py::arg("f_ghi"), py::arg("f_price"), py::arg("day"), py::arg("context"),
          py::arg("params"));

    // Metrics and persistence.
    m.def("effectiveness", &effectiveness, py::arg("costs_strategy"),
          py::arg("costs_milp"), py::arg("costs_base"));
    m.def("load_series_csv",
          [](const std::string& path) { return load_csv(path, SeriesKind::Consumption); },
          py::arg("path"));
    m.def("save_series_csv", &save_csv, py::arg("series"), py::arg("path"));
    m.def("save_forecaster", &save_forecaster, py::arg("forecaster"), py::arg("path"));
    m.def("load_forecaster",
          [](const std::string& path) {
              return load_forecaster(path, SeriesKind::Consumption);
          },
          py::arg("path"));
    m.def("save_controller", &save_controller, py::arg("controller"), py::arg("dir"));
    m.def("load_controller", &load_controller, py::arg("dir"));
    m.def("save_agents", &save_agents, py::arg("agents"), py::arg("dir"));
    m.def("load_agents", &load_agents, py::arg("dir"));
}
