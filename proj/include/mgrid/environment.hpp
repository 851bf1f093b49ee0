#pragma once

// Finite-horizon dispatch MDP. Each step clips the requested action to device
// limits, settles the bus power balance against the grid tie, models Bernoulli
// grid outages, and records a full audit trail with the cost breakdown and
// reward. Outage draws depend only on the seed, never on actions, so two
// controllers replayed on the same config face identical outages.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mgrid/devices.hpp"
#include "mgrid/rng.hpp"
#include "mgrid/scenario.hpp"

namespace mgrid {

struct MgState {
    double soc = 0.0;
    int hour = 0;  // hour of day, 0-23
    double p_pv_avail_kw = 0.0;
    double p_w_avail_kw = 0.0;
    double p_load_kw = 0.0;
    bool grid_up = true;
    std::size_t t = 0;
};

// Requested dispatch: battery power is signed, positive = discharge.
struct MgAction {
    double p_bat_kw = 0.0;
    double p_dg_kw = 0.0;
};

struct StepRecord {
    std::size_t t = 0;
    double p_load_kw = 0.0;
    double p_pv_avail_kw = 0.0;
    double p_w_avail_kw = 0.0;
    double p_pv_used_kw = 0.0;
    double p_w_used_kw = 0.0;
    double p_bat_kw = 0.0;  // realized, signed (positive = discharge)
    double p_dg_kw = 0.0;
    double p_grid_import_kw = 0.0;
    double p_grid_export_kw = 0.0;
    double curtailed_kw = 0.0;
    double unmet_kw = 0.0;
    double c_grid = 0.0;
    double c_deg = 0.0;
    double c_dg = 0.0;
    double reward = 0.0;
    bool grid_up = true;
    double soc_after = 0.0;

    double balance_residual_kw() const {
        return p_pv_used_kw + p_w_used_kw + p_bat_kw + p_dg_kw + p_grid_import_kw - p_grid_export_kw -
               (p_load_kw - unmet_kw);
    }
};

struct EnvConfig {
    DeviceFleet fleet;
    std::shared_ptr<const Scenario> scenario;
    std::size_t horizon = 0;          // number of steps, T
    std::size_t scenario_offset = 0;  // first scenario row of the episode
    std::optional<double> initial_soc;  // default: midpoint of the SOC window
    double unmet_penalty = 5.0;       // currency per kWh of unserved load
    bool export_blocked_islanded = true;
    std::uint64_t seed = 1;
    // Replay hook: when set, these flags replace the sampled outage process.
    std::optional<std::vector<bool>> grid_up_override;

    void validate() const {
        fleet.validate();
        if (!scenario) throw std::invalid_argument("env: scenario is required");
        scenario->validate();
        if (horizon < 1) throw std::invalid_argument("env: horizon must be >= 1");
        if (scenario_offset + horizon > scenario->size())
            throw std::invalid_argument("env: scenario_offset + horizon exceeds scenario length");
        if (unmet_penalty < 0.0) throw std::invalid_argument("env: unmet_penalty must be >= 0");
        if (initial_soc) {
            const auto& b = fleet.battery;
            if (*initial_soc < b.soc_min || *initial_soc > b.soc_max)
                throw std::invalid_argument("env: initial_soc outside battery SOC bounds");
        }
        if (grid_up_override && grid_up_override->size() != horizon)
            throw std::invalid_argument("env: grid_up_override length must equal the horizon");
    }
};

inline bool sample_outage_up(Rng& rng, double outage_prob) { return !rng.bernoulli(outage_prob); }

class Environment {
public:
    explicit Environment(EnvConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

    const EnvConfig& config() const { return cfg_; }
    const MgState& state() const { return state_; }
    bool done() const { return state_.t >= cfg_.horizon; }

    MgState reset() {
        soc_ = cfg_.initial_soc.value_or(0.5 * (cfg_.fleet.battery.soc_min + cfg_.fleet.battery.soc_max));
        if (cfg_.grid_up_override) {
            grid_up_ = *cfg_.grid_up_override;
        } else {
            grid_up_.assign(cfg_.horizon, true);
            Rng outage_rng = Rng::derive(cfg_.seed, 0x6f757461);  // outage stream
            for (std::size_t t = 0; t < cfg_.horizon; ++t)
                grid_up_[t] = sample_outage_up(outage_rng, cfg_.fleet.grid.outage_prob);
        }
        state_ = observe(0);
        return state_;
    }

    // Applies one action, returning the successor state and the audit record.
    // Requested values are clipped to device limits; infeasible surpluses are
    // resolved by turning down diesel, then battery discharge, then renewables;
    // infeasible deficits reduce battery charging before shedding load.
    std::pair<MgState, StepRecord> step(const MgAction& action) {
        if (done()) throw std::logic_error("env: step called past the episode horizon");
        if (!std::isfinite(action.p_bat_kw) || !std::isfinite(action.p_dg_kw))
            throw std::invalid_argument("env: action contains non-finite values");

        const std::size_t t = state_.t;
        const std::size_t row = cfg_.scenario_offset + t;
        const Scenario& sc = *cfg_.scenario;
        const double dt = sc.dt_h;
        const DeviceFleet& fleet = cfg_.fleet;
        const bool grid_up = grid_up_[t];

        const double r_avail = state_.p_pv_avail_kw + state_.p_w_avail_kw;
        const double load = state_.p_load_kw;

        double p_dg = std::clamp(action.p_dg_kw, 0.0, fleet.diesel.max_kw);
        BatteryTransition tr = battery_apply(fleet.battery, soc_, action.p_bat_kw, dt);

        double imported = 0.0, exported = 0.0, curtailed = 0.0, unmet = 0.0;
        double net = r_avail + tr.signed_power_kw() + p_dg - load;

        if (net >= 0.0) {
            const double export_cap = (grid_up || !cfg_.export_blocked_islanded) ? fleet.grid.export_max_kw : 0.0;
            exported = std::min(net, export_cap);
            double over = net - exported;
            if (over > 0.0) {
                const double cut_dg = std::min(over, p_dg);
                p_dg -= cut_dg;
                over -= cut_dg;
            }
            if (over > 0.0 && tr.p_dis_kw > 0.0) {
                const double cut_dis = std::min(over, tr.p_dis_kw);
                tr = battery_apply(fleet.battery, soc_, std::max(0.0, tr.p_dis_kw - cut_dis), dt);
                over -= cut_dis;
            }
            curtailed = std::clamp(over, 0.0, r_avail);
        } else {
            const double import_cap = grid_up ? fleet.grid.import_max_kw : 0.0;
            double deficit = -net;
            imported = std::min(deficit, import_cap);
            double shortfall = deficit - imported;
            if (shortfall > 0.0 && tr.p_ch_kw > 0.0) {
                const double cut_ch = std::min(shortfall, tr.p_ch_kw);
                tr = battery_apply(fleet.battery, soc_, -std::max(0.0, tr.p_ch_kw - cut_ch), dt);
                deficit = std::max(0.0, -(r_avail + tr.signed_power_kw() + p_dg - load));
                imported = std::min(deficit, import_cap);
                shortfall = deficit - imported;
            }
            unmet = std::max(0.0, shortfall);
        }

        const double r_used = r_avail - curtailed;
        const double share = r_avail > 0.0 ? r_used / r_avail : 0.0;

        StepRecord rec;
        rec.t = t;
        rec.p_load_kw = load;
        rec.p_pv_avail_kw = state_.p_pv_avail_kw;
        rec.p_w_avail_kw = state_.p_w_avail_kw;
        rec.p_pv_used_kw = state_.p_pv_avail_kw * share;
        rec.p_w_used_kw = state_.p_w_avail_kw * share;
        rec.p_bat_kw = tr.signed_power_kw();
        rec.p_dg_kw = p_dg;
        rec.p_grid_import_kw = imported;
        rec.p_grid_export_kw = exported;
        rec.curtailed_kw = curtailed;
        rec.unmet_kw = unmet;
        rec.grid_up = grid_up;
        rec.soc_after = tr.soc_after;
        rec.c_grid = imported * dt * sc.price_buy[row] - exported * dt * sc.price_sell[row];
        rec.c_deg = tr.deg_cost;
        rec.c_dg = diesel_fuel_and_cost(fleet.diesel, p_dg, dt).cost;
        rec.reward = -(rec.c_grid + rec.c_deg + rec.c_dg) - cfg_.unmet_penalty * unmet * dt;

        soc_ = tr.soc_after;
        state_ = observe(t + 1);
        return {state_, rec};
    }

private:
    MgState observe(std::size_t t) const {
        MgState s;
        s.t = t;
        s.soc = soc_;
        if (t < cfg_.horizon) {
            const std::size_t row = cfg_.scenario_offset + t;
            const Scenario& sc = *cfg_.scenario;
            s.hour = static_cast<int>(row % 24);
            s.p_pv_avail_kw = pv_power(cfg_.fleet.pv, sc.irradiance[row]);
            s.p_w_avail_kw = wind_power(cfg_.fleet.wind, sc.wind_ms[row]);
            s.p_load_kw = sc.load_kw[row];
            s.grid_up = grid_up_[t];
        }
        return s;
    }

    EnvConfig cfg_;
    MgState state_;
    double soc_ = 0.0;
    std::vector<bool> grid_up_;
};

using Controller = std::function<MgAction(const MgState&)>;

inline std::vector<StepRecord> run_episode(const EnvConfig& cfg, const Controller& controller) {
    Environment env(cfg);
    MgState s = env.reset();
    std::vector<StepRecord> records;
    records.reserve(cfg.horizon);
    while (!env.done()) {
        auto [next, rec] = env.step(controller(s));
        records.push_back(rec);
        s = next;
    }
    return records;
}

}  // namespace mgrid
