#include "hems/imitation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"

namespace hems {

Dataset ImitationDataset::head(const std::vector<double>& labels) const {
    Dataset d;
    d.inputs = inputs;
    d.targets.reserve(labels.size());
    for (const double v : labels) d.targets.push_back({v});
    return d;
}

ImitationDataset generate_dataset(const std::vector<DayProfile>& days,
                                  const SystemParams& params, std::ostream* warnings,
                                  long node_limit) {
    params.validate();
    std::ostream& warn = warnings ? *warnings : std::clog;
    ImitationDataset data;
    for (std::size_t d = 0; d < days.size(); ++d) {
        OptimalDispatch optimal;
        try {
            optimal = solve_milp(build_day_model(days[d], params), 1e-9, node_limit);
        } catch (const SolverError& e) {
            warn << "warning: skipping day " << d << ": " << e.what() << "\n";
            continue;
        }
        for (int t = 0; t < params.slots_per_day; ++t) {
            const auto ts = static_cast<std::size_t>(t);
            const double level_prev =
                t == 0 ? params.level_initial : optimal.levels[ts - 1];
            data.inputs.push_back({days[d].consumption[ts], days[d].irradiation[ts],
                                   level_prev, days[d].price[ts],
                                   static_cast<double>(t)});
            const SlotDispatch& s = optimal.slots[ts];
            data.res_load.push_back(s.res_to_load);
            data.grid_charge.push_back(s.grid_to_ess);
            data.ess_load.push_back(s.ess_to_load);
            data.ess_sell.push_back(s.ess_to_sell);
        }
    }
    return data;
}

void dump_dataset_csv(const ImitationDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "e_ec,ghi,level,price,t,res_load,grid_charge,ess_load,ess_sell\n";
    char buf[320];
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& x = data.inputs[i];
        std::snprintf(buf, sizeof(buf),
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", x[0],
                      x[1], x[2], x[3], x[4], data.res_load[i], data.grid_charge[i],
                      data.ess_load[i], data.ess_sell[i]);
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path);
}

ImitationDataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file: " + path);
    if (line.ends_with("\r")) line.pop_back();
    if (line != "e_ec,ghi,level,price,t,res_load,grid_charge,ess_load,ess_sell")
        throw DataError(path + ": unexpected dataset header");
    ImitationDataset data;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.ends_with("\r")) line.pop_back();
        if (line.empty()) continue;
        double v[9];
        if (std::sscanf(line.c_str(), "%lg,%lg,%lg,%lg,%lg,%lg,%lg,%lg,%lg", &v[0],
                        &v[1], &v[2], &v[3], &v[4], &v[5], &v[6], &v[7], &v[8]) != 9)
            throw DataError(path + " row " + std::to_string(row) + ": bad record");
        data.inputs.push_back({v[0], v[1], v[2], v[3], v[4]});
        data.res_load.push_back(v[5]);
        data.grid_charge.push_back(v[6]);
        data.ess_load.push_back(v[7]);
        data.ess_sell.push_back(v[8]);
    }
    return data;
}

namespace {

Network train_head(const char* name, const ImitationDataset& data,
                   const std::vector<double>& labels,
                   const ImitationTrainOptions& opts, std::uint64_t seed) {
    std::vector<Mlp::LayerSpec> layers;
    for (const int width : opts.hidden) layers.push_back({width, Activation::Relu});
    layers.push_back({1, Activation::Identity});
    Network net;
    net.seed = seed;
    net.model = std::make_unique<Mlp>(5, layers, seed);
    try {
        train(net, data.head(labels),
              {.epochs = opts.epochs, .batch = opts.batch, .lr = opts.lr, .seed = seed});
    } catch (const TrainingError& e) {
        throw TrainingError(std::string("head ") + name + " diverged: " + e.what());
    }
    return net;
}

}  // namespace

ImitationController train_controller(const ImitationDataset& data,
                                     const HourlySeries& forecaster_history,
                                     const ImitationTrainOptions& opts,
                                     const ForecastOptions& forecast_opts) {
    if (data.size() == 0) throw DataError("imitation dataset is empty");
    ImitationController c;
    c.res_load = train_head("res_load", data, data.res_load, opts, opts.seed);
    c.grid_charge = train_head("grid_charge", data, data.grid_charge, opts, opts.seed + 1);
    c.ess_load = train_head("ess_load", data, data.ess_load, opts, opts.seed + 2);
    c.ess_sell = train_head("ess_sell", data, data.ess_sell, opts, opts.seed + 3);
    c.forecaster = fit_forecaster(forecaster_history, forecast_opts);
    return c;
}

SlotDispatch ImitationController::control_step(std::span<const double> window_ec,
                                               double ghi_now, double level,
                                               double price_now, int t) const {
    if (level < params.level_min - kEnergyTol || level > params.level_max + kEnergyTol)
        throw DomainError("control_step level outside battery bounds");
    const double ec_hat = forecaster.predict(window_ec)[0];
    const std::vector<double> x = {ec_hat, ghi_now, level, price_now,
                                   static_cast<double>(t)};
    const double e_res = res_energy(ghi_now, params);
    const double ch_cap = params.max_charge_energy();
    const double dh_cap = params.max_discharge_energy();

    double rl = std::clamp(res_load.predict(x)[0], 0.0, std::min(e_res, ec_hat));
    double gc = std::clamp(grid_charge.predict(x)[0], 0.0, ch_cap);
    double dl = std::clamp(ess_load.predict(x)[0], 0.0, dh_cap);
    double ds = std::clamp(ess_sell.predict(x)[0], 0.0, dh_cap);
    double rc = std::max(e_res - rl, 0.0);  // remaining RES offered to the battery

    SlotDispatch d;
    if (rc + gc >= dl + ds) {
        d.charging = true;
        d.res_to_load = rl;
        // Rate cap: surplus RES beyond the charge rate becomes waste; the
        // grid yields before RES does.
        rc = std::min(rc, ch_cap);
        gc = std::min(gc, ch_cap - rc);
        // Level headroom: scale both charge sources proportionally.
        const double room =
            std::max(params.level_max - level, 0.0) / params.ess_efficiency;
        const double total = rc + gc;
        if (total > room) {
            const double s = total > 0.0 ? room / total : 0.0;
            rc *= s;
            gc *= s;
        }
        d.res_to_ess = rc;
        d.grid_to_ess = gc;
    } else {
        d.charging = false;
        d.res_to_load = std::min(e_res, ec_hat);  // all RES serves the load
        double total = dl + ds;
        if (total > dh_cap) {
            const double s = dh_cap / total;
            dl *= s;
            ds *= s;
        }
        const double available =
            std::max(level - params.level_min, 0.0) * params.ess_efficiency;
        total = dl + ds;
        if (total > available) {
            const double s = total > 0.0 ? available / total : 0.0;
            dl *= s;
            ds *= s;
        }
        // Discharge serves the (forecast) load first; the surplus is sold.
        total = dl + ds;
        d.ess_to_load = std::min(total, std::max(ec_hat - d.res_to_load, 0.0));
        d.ess_to_sell = total - d.ess_to_load;
    }
    return d;
}

Strategy imitation_strategy(const ImitationController& controller) {
    return [&controller](const SlotObservation& obs) {
        const auto w = static_cast<std::size_t>(controller.forecaster.window);
        if (obs.cons_history.size() < w)
            throw DataError("not enough consumption history for the forecaster window");
        const std::span<const double> window =
            obs.cons_history.subspan(obs.cons_history.size() - w);
        SlotDispatch d =
            controller.control_step(window, obs.ghi, obs.level, obs.price, obs.t);
        // Re-project the load split against the realized consumption.
        d.res_to_load = std::min(d.res_to_load, obs.e_ec);
        if (!d.charging) {
            const double total = d.ess_to_load + d.ess_to_sell;
            d.ess_to_load = std::min(total, std::max(obs.e_ec - d.res_to_load, 0.0));
            d.ess_to_sell = total - d.ess_to_load;
        }
        return d;
    };
}

namespace {

nlohmann::json params_json(const SystemParams& p) {
    return {{"ess_efficiency", p.ess_efficiency},
            {"charge_rate", p.charge_rate},
            {"discharge_rate", p.discharge_rate},
            {"level_min", p.level_min},
            {"level_max", p.level_max},
            {"level_initial", p.level_initial},
            {"panel_area", p.panel_area},
            {"res_efficiency", p.res_efficiency},
            {"sell_ratio", p.sell_ratio},
            {"slot_duration", p.slot_duration},
            {"slots_per_day", p.slots_per_day}};
}

SystemParams params_from(const nlohmann::json& j) {
    SystemParams p;
    p.ess_efficiency = j.at("ess_efficiency").get<double>();
    p.charge_rate = j.at("charge_rate").get<double>();
    p.discharge_rate = j.at("discharge_rate").get<double>();
    p.level_min = j.at("level_min").get<double>();
    p.level_max = j.at("level_max").get<double>();
    p.level_initial = j.at("level_initial").get<double>();
    p.panel_area = j.at("panel_area").get<double>();
    p.res_efficiency = j.at("res_efficiency").get<double>();
    p.sell_ratio = j.at("sell_ratio").get<double>();
    p.slot_duration = j.at("slot_duration").get<double>();
    p.slots_per_day = j.at("slots_per_day").get<int>();
    return p;
}

}  // namespace

void save_controller(const ImitationController& c, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    save_network(c.res_load, (base / "res_load.bin").string());
    save_network(c.grid_charge, (base / "grid_charge.bin").string());
    save_network(c.ess_load, (base / "ess_load.bin").string());
    save_network(c.ess_sell, (base / "ess_sell.bin").string());
    save_forecaster(c.forecaster, (base / "forecaster.bin").string());
    nlohmann::json manifest;
    manifest["kind"] = "imitation-controller";
    manifest["params"] = params_json(c.params);
    manifest["forecaster_target"] = series_kind_name(c.forecaster.target);
    std::ofstream out(base / "manifest.json");
    if (!out) throw DataError("cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

ImitationController load_controller(const std::string& dir) {
    const std::filesystem::path base(dir);
    std::ifstream in(base / "manifest.json");
    if (!in) throw IoError("cannot open manifest in " + dir);
    nlohmann::json manifest;
    in >> manifest;
    if (manifest.value("kind", "") != "imitation-controller")
        throw DataError(dir + ": not an imitation controller bundle");
    ImitationController c;
    c.params = params_from(manifest.at("params"));
    c.res_load = load_network((base / "res_load.bin").string());
    c.grid_charge = load_network((base / "grid_charge.bin").string());
    c.ess_load = load_network((base / "ess_load.bin").string());
    c.ess_sell = load_network((base / "ess_sell.bin").string());
    c.forecaster = load_forecaster(
        (base / "forecaster.bin").string(),
        series_kind_from_name(manifest.at("forecaster_target").get<std::string>()));
    return c;
}

}  // namespace hems
