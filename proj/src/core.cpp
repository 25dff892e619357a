#include "hems/core.hpp"

#include <algorithm>
#include <cmath>

namespace hems {

namespace {

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void SystemParams::validate() const {
    if (!(ess_efficiency > 0.0 && ess_efficiency <= 1.0))
        throw DomainError("ess_efficiency must be in (0, 1]");
    if (!(res_efficiency > 0.0 && res_efficiency <= 1.0))
        throw DomainError("res_efficiency must be in (0, 1]");
    if (!(sell_ratio > 0.0 && sell_ratio <= 1.0))
        throw DomainError("sell_ratio must be in (0, 1]");
    if (!(charge_rate > 0.0) || !(discharge_rate > 0.0))
        throw DomainError("charge and discharge rates must be positive");
    if (!(level_min <= level_initial && level_initial <= level_max))
        throw DomainError("level_initial must lie within [level_min, level_max]");
    if (slots_per_day < 1) throw DomainError("slots_per_day must be >= 1");
    if (!(slot_duration > 0.0)) throw DomainError("slot_duration must be positive");
}

void DayProfile::validate(int slots_per_day) const {
    const auto t = static_cast<std::size_t>(slots_per_day);
    if (consumption.size() != t || irradiation.size() != t || price.size() != t)
        throw DomainError("day profile series must all have length slots_per_day");
    for (std::size_t i = 0; i < t; ++i) {
        if (!finite(consumption[i]) || !finite(irradiation[i]) || !finite(price[i]))
            throw DomainError("day profile contains a non-finite value");
        if (consumption[i] < 0.0 || irradiation[i] < 0.0 || price[i] < 0.0)
            throw DomainError("day profile contains a negative value");
    }
}

void SlotDispatch::validate(const SystemParams& p) const {
    const double tol = kEnergyTol;
    for (double v : {res_to_load, res_to_ess, grid_to_ess, ess_to_load, ess_to_sell}) {
        if (!finite(v)) throw DomainError("dispatch contains a non-finite energy");
        if (v < -tol) throw DomainError("dispatch contains a negative energy");
    }
    if (charging) {
        if (ess_to_load > tol || ess_to_sell > tol)
            throw DomainError("charge-mode slot must not discharge");
    } else {
        if (res_to_ess > tol || grid_to_ess > tol)
            throw DomainError("discharge-mode slot must not charge");
    }
    if (charge_total() > p.max_charge_energy() + tol)
        throw DomainError("charge total exceeds the charge-rate cap");
    if (discharge_total() > p.max_discharge_energy() + tol)
        throw DomainError("discharge total exceeds the discharge-rate cap");
}

double res_energy(double ghi, const SystemParams& p) {
    if (!finite(ghi) || ghi < 0.0) throw DomainError("ghi must be finite and >= 0");
    return ghi * p.panel_area * p.res_efficiency * p.slot_duration;
}

double ess_level_update(double level, const SlotDispatch& d, const SystemParams& p) {
    const double next = level + d.charge_total() * p.ess_efficiency -
                        d.discharge_total() / p.ess_efficiency;
    if (next < p.level_min - kEnergyTol)
        throw InfeasibilityError("ESS level fell below level_min", p.level_min - next);
    if (next > p.level_max + kEnergyTol)
        throw InfeasibilityError("ESS level rose above level_max", next - p.level_max);
    return std::clamp(next, p.level_min, p.level_max);
}

double slot_cost(const SlotDispatch& d, double e_ec, double price, const SystemParams& p) {
    const double grid_load = e_ec - d.ess_to_load - d.res_to_load;
    if (grid_load < -kEnergyTol)
        throw InfeasibilityError("load supply exceeds demand without sale", -grid_load);
    return (std::max(grid_load, 0.0) + d.grid_to_ess) * price -
           d.ess_to_sell * p.sell_ratio * price;
}

double slot_cost_signed(const SignedEssAction& a, double e_res_load, double e_ec,
                        double e_res, double price, const SystemParams& p) {
    if (!finite(a.e_cd) || !finite(e_res_load) || !finite(e_ec) || !finite(e_res) ||
        !finite(price))
        throw DomainError("slot_cost_signed inputs must be finite");
    if (a.e_cd >= 0.0) {
        const double rc = std::min(e_res - e_res_load, a.e_cd);
        return (e_ec - e_res_load + a.e_cd - rc) * price;
    }
    // Discharge: RES goes entirely to appliances; the residual load is what
    // the battery and grid still have to cover.
    const double rl = std::max(e_ec - e_res, 0.0);
    if (rl >= -a.e_cd) return (rl + a.e_cd) * price;
    return (rl + a.e_cd) * p.sell_ratio * price;
}

SlotDispatch dispatch_from_signed(const SignedEssAction& a, double e_res_load,
                                  double e_ec, double e_res, const SystemParams& p) {
    SlotDispatch d;
    if (a.e_cd >= 0.0) {
        d.charging = true;
        d.res_to_load = e_res_load;
        d.res_to_ess = std::clamp(a.e_cd, 0.0, std::max(e_res - e_res_load, 0.0));
        d.grid_to_ess = a.e_cd - d.res_to_ess;
    } else {
        d.charging = false;
        d.res_to_load = std::min(e_res, e_ec);
        const double discharge = -a.e_cd;
        const double residual = std::max(e_ec - d.res_to_load, 0.0);
        d.ess_to_load = std::min(discharge, residual);
        d.ess_to_sell = discharge - d.ess_to_load;
    }
    return d;
}

}  // namespace hems
