#pragma once

// Physical and economic models for the distributed energy resources of a
// hybrid community microgrid: PV array, wind turbine, diesel generator,
// battery storage, power converter and the grid tie. All operations are pure
// functions of their arguments.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mgrid {

namespace detail {
inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}
}  // namespace detail

struct PvParams {
    double rated_kw = 250.0;      // nameplate capacity
    double derating = 0.9;        // soiling/wiring/aging factor
    double stc_irradiance = 1.0;  // irradiance at standard test conditions, kW/m^2

    void validate() const {
        detail::require(rated_kw > 0.0, "pv.rated_kw must be > 0");
        detail::require(derating > 0.0 && derating <= 1.0, "pv.derating must be in (0, 1]");
        detail::require(stc_irradiance > 0.0, "pv.stc_irradiance must be > 0");
    }
};

struct WindParams {
    double air_density = 1.225;  // kg/m^3
    double swept_area = 200.0;   // m^2
    double power_coeff = 0.35;   // aerodynamic efficiency, Betz-limited
    double rated_kw = 50.0;      // electrical output cap
    double cut_in_ms = 3.0;      // m/s
    double cut_out_ms = 25.0;    // m/s

    void validate() const {
        detail::require(air_density > 0.0, "wind.air_density must be > 0");
        detail::require(swept_area > 0.0, "wind.swept_area must be > 0");
        detail::require(power_coeff > 0.0 && power_coeff <= 0.593, "wind.power_coeff must be in (0, 0.593]");
        detail::require(rated_kw > 0.0, "wind.rated_kw must be > 0");
        detail::require(cut_in_ms > 0.0 && cut_out_ms > 0.0, "wind cut-in/cut-out speeds must be > 0");
        detail::require(cut_in_ms < cut_out_ms, "wind.cut_in_ms must be < wind.cut_out_ms");
    }
};

struct DieselParams {
    double rated_kw = 50.0;
    double slope_l_per_kwh = 0.246;      // fuel curve slope
    double intercept_l_per_h_kw = 0.08415;  // fuel intercept per kW of rated capacity
    double fuel_price = 1.60;            // currency per litre
    double max_kw = 50.0;                // dispatch ceiling

    void validate() const {
        detail::require(rated_kw > 0.0, "diesel.rated_kw must be > 0");
        detail::require(slope_l_per_kwh > 0.0, "diesel.slope_l_per_kwh must be > 0");
        detail::require(intercept_l_per_h_kw >= 0.0, "diesel.intercept_l_per_h_kw must be >= 0");
        detail::require(fuel_price >= 0.0, "diesel.fuel_price must be >= 0");
        detail::require(max_kw > 0.0 && max_kw <= rated_kw, "diesel.max_kw must be in (0, rated_kw]");
    }
};

struct BatteryParams {
    double capacity_kwh = 200.0;
    double dod = 0.8;           // usable depth of discharge
    double soc_min = 0.1;
    double soc_max = 0.9;
    double p_max_kw = 50.0;     // symmetric charge/discharge terminal power limit
    double eta_ch = 0.95;
    double eta_dis = 0.95;
    double deg_cost_per_kwh = 0.28;  // degradation cost per kWh of terminal throughput

    void validate() const {
        detail::require(capacity_kwh > 0.0, "battery.capacity_kwh must be > 0");
        detail::require(dod > 0.0 && dod <= 1.0, "battery.dod must be in (0, 1]");
        detail::require(soc_min >= 0.0 && soc_min < soc_max && soc_max <= 1.0,
                        "battery SOC bounds must satisfy 0 <= soc_min < soc_max <= 1");
        detail::require(soc_max - soc_min <= dod + 1e-12, "battery SOC window must not exceed dod");
        detail::require(p_max_kw > 0.0, "battery.p_max_kw must be > 0");
        detail::require(eta_ch > 0.0 && eta_ch <= 1.0, "battery.eta_ch must be in (0, 1]");
        detail::require(eta_dis > 0.0 && eta_dis <= 1.0, "battery.eta_dis must be in (0, 1]");
        detail::require(deg_cost_per_kwh >= 0.0, "battery.deg_cost_per_kwh must be >= 0");
    }
};

struct ConverterParams {
    double efficiency = 0.95;
    double rated_kw = 300.0;

    void validate() const {
        detail::require(efficiency > 0.0 && efficiency <= 1.0, "converter.efficiency must be in (0, 1]");
        detail::require(rated_kw > 0.0, "converter.rated_kw must be > 0");
    }
};

struct GridParams {
    double import_max_kw = 250.0;
    double export_max_kw = 250.0;
    double outage_prob = 0.01;  // per-step probability the tie line is down

    void validate() const {
        detail::require(import_max_kw >= 0.0, "grid.import_max_kw must be >= 0");
        detail::require(export_max_kw >= 0.0, "grid.export_max_kw must be >= 0");
        detail::require(outage_prob >= 0.0 && outage_prob <= 1.0, "grid.outage_prob must be in [0, 1]");
    }
};

struct DeviceFleet {
    PvParams pv;
    WindParams wind;
    DieselParams diesel;
    BatteryParams battery;
    ConverterParams converter;
    GridParams grid;

    void validate() const {
        pv.validate();
        wind.validate();
        diesel.validate();
        battery.validate();
        converter.validate();
        grid.validate();
    }
};

// Outcome of applying one battery power request over one step. Charge and
// discharge are mutually exclusive; realized powers are at the terminals.
struct BatteryTransition {
    double soc_before = 0.0;
    double soc_after = 0.0;
    double p_ch_kw = 0.0;
    double p_dis_kw = 0.0;
    double throughput_kwh = 0.0;
    double deg_cost = 0.0;

    double signed_power_kw() const { return p_dis_kw - p_ch_kw; }
};

// PV output from normalized irradiance; temperature effects are neglected.
inline double pv_power(const PvParams& p, double irradiance_kwm2) {
    if (irradiance_kwm2 < 0.0) throw std::invalid_argument("pv_power: irradiance must be >= 0");
    return std::max(0.0, p.rated_kw * (irradiance_kwm2 / p.stc_irradiance) * p.derating);
}

// Cubic power curve with cut-in/cut-out shutdown and a rated-output cap.
inline double wind_power(const WindParams& p, double wind_speed_ms) {
    if (wind_speed_ms < 0.0) throw std::invalid_argument("wind_power: wind speed must be >= 0");
    if (wind_speed_ms < p.cut_in_ms || wind_speed_ms >= p.cut_out_ms) return 0.0;
    const double watts = 0.5 * p.air_density * p.swept_area * p.power_coeff * std::pow(wind_speed_ms, 3);
    return std::min(watts / 1000.0, p.rated_kw);
}

struct DieselResult {
    double fuel_l = 0.0;
    double cost = 0.0;
};

// Affine fuel curve while running; an idle generator burns nothing.
inline DieselResult diesel_fuel_and_cost(const DieselParams& p, double output_kw, double dt_h) {
    if (output_kw < 0.0) throw std::invalid_argument("diesel_fuel_and_cost: output must be >= 0");
    if (output_kw > p.max_kw * (1.0 + 1e-12)) throw std::invalid_argument("diesel_fuel_and_cost: output exceeds max_kw");
    if (dt_h < 0.0) throw std::invalid_argument("diesel_fuel_and_cost: dt must be >= 0");
    if (output_kw == 0.0) return {};
    const double rate_l_per_h = p.slope_l_per_kwh * output_kw + p.intercept_l_per_h_kw * p.rated_kw;
    DieselResult r;
    r.fuel_l = rate_l_per_h * dt_h;
    r.cost = r.fuel_l * p.fuel_price;
    return r;
}

// Applies a signed power request (positive = discharge) for dt hours.
// The request is clipped first to the terminal power limit, then so that the
// state of charge stays inside [soc_min, soc_max] under
//   SOC' = SOC + (eta_ch * P_ch - P_dis / eta_dis) * dt / C.
inline BatteryTransition battery_apply(const BatteryParams& p, double soc, double p_request_kw, double dt_h) {
    if (soc < p.soc_min - 1e-9 || soc > p.soc_max + 1e-9)
        throw std::logic_error("battery_apply: SOC outside configured bounds");
    if (dt_h <= 0.0) throw std::invalid_argument("battery_apply: dt must be > 0");

    BatteryTransition tr;
    tr.soc_before = soc;
    if (p_request_kw == 0.0) p_request_kw = 0.0;  // normalize signed zero
    const double p_clipped = std::clamp(p_request_kw, -p.p_max_kw, p.p_max_kw);
    if (p_clipped >= 0.0) {
        const double max_dis_kw = std::max(0.0, (soc - p.soc_min) * p.capacity_kwh * p.eta_dis / dt_h);
        tr.p_dis_kw = std::min(p_clipped, max_dis_kw);
        tr.soc_after = soc - tr.p_dis_kw / p.eta_dis * dt_h / p.capacity_kwh;
    } else {
        const double max_ch_kw = std::max(0.0, (p.soc_max - soc) * p.capacity_kwh / (p.eta_ch * dt_h));
        tr.p_ch_kw = std::min(-p_clipped, max_ch_kw);
        tr.soc_after = soc + p.eta_ch * tr.p_ch_kw * dt_h / p.capacity_kwh;
    }
    tr.soc_after = std::clamp(tr.soc_after, p.soc_min, p.soc_max);
    tr.throughput_kwh = (tr.p_ch_kw + tr.p_dis_kw) * dt_h;
    tr.deg_cost = tr.throughput_kwh * p.deg_cost_per_kwh;
    return tr;
}

// Usable stored energy implied by the depth of discharge.
inline double stored_energy(const BatteryParams& p) { return p.dod * p.capacity_kwh; }

inline double converter_limit(const ConverterParams& p, double p_in_kw) {
    if (p_in_kw < 0.0) throw std::invalid_argument("converter_limit: input must be >= 0");
    return std::min(p.efficiency * p_in_kw, p.rated_kw);
}

}  // namespace mgrid
