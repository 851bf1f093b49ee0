#pragma once

// Rule-based dispatch. Three operating regimes, resolved in this order:
// grid-connected surplus (charge, export remainder), grid-connected deficit
// (discharge above the SOC floor, import remainder), and islanded operation
// (battery first, diesel only when the deficit exceeds the discharge limit).
// The diesel generator is never dispatched while the grid is available.

#include "mgrid/devices.hpp"
#include "mgrid/environment.hpp"

namespace mgrid {

struct RbcParams {
    double p_max_ch_kw = 0.0;
    double p_max_dis_kw = 0.0;
    double dg_max_kw = 0.0;
    double soc_floor = 0.0;

    static RbcParams from_fleet(const DeviceFleet& fleet) {
        RbcParams p;
        p.p_max_ch_kw = fleet.battery.p_max_kw;
        p.p_max_dis_kw = fleet.battery.p_max_kw;
        p.dg_max_kw = fleet.diesel.max_kw;
        p.soc_floor = fleet.battery.soc_min;
        return p;
    }
};

inline MgAction rbc_action(const MgState& state, const RbcParams& params) {
    const double renewables = state.p_pv_avail_kw + state.p_w_avail_kw;
    MgAction a;
    if (state.grid_up) {
        if (state.p_load_kw < renewables) {
            const double surplus = renewables - state.p_load_kw;
            a.p_bat_kw = -std::min(surplus, params.p_max_ch_kw);  // export handled downstream
        } else {
            const double deficit = state.p_load_kw - renewables;
            if (state.soc > params.soc_floor) a.p_bat_kw = std::min(deficit, params.p_max_dis_kw);
            // remainder imported by the environment
        }
    } else {
        const double deficit = std::max(0.0, state.p_load_kw - renewables);
        if (deficit > params.p_max_dis_kw) {
            a.p_bat_kw = params.p_max_dis_kw;
            a.p_dg_kw = std::min(deficit - params.p_max_dis_kw, params.dg_max_kw);
        } else {
            a.p_bat_kw = deficit;  // battery alone covers the load
        }
    }
    return a;
}

inline std::vector<StepRecord> rbc_episode(const EnvConfig& cfg) {
    const RbcParams params = RbcParams::from_fleet(cfg.fleet);
    return run_episode(cfg, [params](const MgState& s) { return rbc_action(s, params); });
}

}  // namespace mgrid
