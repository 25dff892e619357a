#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hems {

// Absolute tolerance for energy feasibility comparisons (kWh).
inline constexpr double kEnergyTol = 1e-9;

class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File-system failures (open/write). Derives from DataError so callers that
// only care about "the input is unusable" can catch the base class.
class IoError : public DataError {
public:
    using DataError::DataError;
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ESS level left [EL_min, EL_max]; carries how far outside it landed.
class InfeasibilityError : public DomainError {
public:
    InfeasibilityError(const std::string& what, double overshoot_kwh)
        : DomainError(what), overshoot(overshoot_kwh) {}
    double overshoot;
};

/// Physical and economic constants of the home (battery, PV panel, tariff).
struct SystemParams {
    double ess_efficiency = 0.9;   // round-trip split: applied on charge and discharge
    double charge_rate = 1.0;      // kW
    double discharge_rate = 1.0;   // kW
    double level_min = 0.5;        // kWh
    double level_max = 10.0;       // kWh
    double level_initial = 0.5;    // kWh
    double panel_area = 1.0;       // m^2
    double res_efficiency = 0.9;
    double sell_ratio = 1.0;       // sell price = sell_ratio * buy price
    double slot_duration = 1.0;    // hours
    int slots_per_day = 24;

    void validate() const;
    double max_charge_energy() const { return charge_rate * slot_duration; }
    double max_discharge_energy() const { return discharge_rate * slot_duration; }
};

/// One day of aligned hourly observations.
struct DayProfile {
    std::vector<double> consumption;  // kWh per slot
    std::vector<double> irradiation;  // kW/m^2 per slot
    std::vector<double> price;        // currency per kWh

    void validate(int slots_per_day) const;
};

/// The five controllable energy flows of one slot plus the charge/discharge mode.
struct SlotDispatch {
    double res_to_load = 0.0;   // kWh
    double res_to_ess = 0.0;    // kWh
    double grid_to_ess = 0.0;   // kWh
    double ess_to_load = 0.0;   // kWh
    double ess_to_sell = 0.0;   // kWh
    bool charging = true;       // mode_ESS: true = charge slot, false = discharge slot

    double charge_total() const { return res_to_ess + grid_to_ess; }
    double discharge_total() const { return ess_to_load + ess_to_sell; }
    // Signed charge/discharge quantity; >= 0 while charging.
    double signed_ess_energy() const {
        return charging ? charge_total() : -discharge_total();
    }
    void validate(const SystemParams& p) const;
};

struct EssState {
    double level = 0.0;  // kWh
};

struct SignedEssAction {
    double e_cd = 0.0;  // kWh; >= 0 charge, < 0 discharge
};

/// PV output energy for one slot.
double res_energy(double ghi, const SystemParams& p);

/// Battery level after applying one slot's dispatch. Throws InfeasibilityError
/// when the new level leaves [level_min, level_max].
double ess_level_update(double level, const SlotDispatch& d, const SystemParams& p);

/// Slot cost of a full dispatch: grid purchases minus sale revenue. The grid
/// share of the load is implied by the balance equation and must be >= 0.
double slot_cost(const SlotDispatch& d, double e_ec, double price, const SystemParams& p);

/// Slot cost in the reduced two-variable encoding (signed ESS energy plus the
/// RES share routed to the load).
double slot_cost_signed(const SignedEssAction& a, double e_res_load, double e_ec,
                        double e_res, double price, const SystemParams& p);

/// Expands a reduced action into the canonical full dispatch: RES charges the
/// battery before the grid does, and discharge serves the load before selling.
SlotDispatch dispatch_from_signed(const SignedEssAction& a, double e_res_load,
                                  double e_ec, double e_res, const SystemParams& p);

}  // namespace hems
