#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hems/forecast.hpp"
#include "hems/milp.hpp"
#include "hems/nn.hpp"
#include "hems/sim.hpp"

namespace hems {

/// MILP-labeled supervision for the four dispatch heads. All heads share the
/// same 5-feature inputs [E_EC, GHI, optimal level(t-1), price, t].
struct ImitationDataset {
    std::vector<std::vector<double>> inputs;
    std::vector<double> res_load;     // Ẽ_RES^load labels
    std::vector<double> grid_charge;  // Ẽ_EP^charge labels
    std::vector<double> ess_load;     // Ẽ_ESS^load labels
    std::vector<double> ess_sell;     // Ẽ_ESS^sell labels

    std::size_t size() const { return inputs.size(); }
    /// Extracts one head's (inputs, targets) view for training.
    Dataset head(const std::vector<double>& labels) const;
};

/// Labels every slot of every solvable day with its MILP-optimal dispatch.
/// Days the solver cannot close are skipped with a warning on `warnings`
/// (defaults to std::clog) rather than imputed.
ImitationDataset generate_dataset(const std::vector<DayProfile>& days,
                                  const SystemParams& params,
                                  std::ostream* warnings = nullptr,
                                  long node_limit = 200000);

void dump_dataset_csv(const ImitationDataset& data, const std::string& path);
ImitationDataset load_dataset_csv(const std::string& path);

struct ImitationTrainOptions {
    std::vector<int> hidden = {128, 128};
    int epochs = 200;
    int batch = 32;
    double lr = 1e-3;
    std::uint64_t seed = 0;
};

/// Algorithm-1 controller: four dispatch heads plus a 1-step consumption
/// forecaster, arbitrating between charge and discharge each slot.
struct ImitationController {
    Network res_load, grid_charge, ess_load, ess_sell;
    Forecaster forecaster;
    SystemParams params;

    /// Hour-ahead decision from the information available at slot t. The
    /// output is projected into rate and level bounds; the RES-vs-load split
    /// is later re-projected against the realized consumption by the
    /// simulation adapter.
    SlotDispatch control_step(std::span<const double> window_ec, double ghi_now,
                              double level, double price_now, int t) const;
};

ImitationController train_controller(const ImitationDataset& data,
                                     const HourlySeries& forecaster_history,
                                     const ImitationTrainOptions& opts,
                                     const ForecastOptions& forecast_opts);

/// Adapter for the simulation harness; clamps the dispatch against realized
/// consumption so over-forecast loads never over-serve the actual one.
Strategy imitation_strategy(const ImitationController& controller);

void save_controller(const ImitationController& c, const std::string& dir);
ImitationController load_controller(const std::string& dir);

}  // namespace hems
