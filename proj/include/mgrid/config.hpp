#pragma once

// Run configuration: one JSON file describing the fleet, the scenario source
// (CSV path or synthesis settings), environment settings and training
// settings. Parsing is strict: unknown keys are rejected with their location,
// and every run can emit a fully-resolved copy of its configuration for
// provenance.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "mgrid/devices.hpp"
#include "mgrid/environment.hpp"
#include "mgrid/ppo.hpp"
#include "mgrid/scenario.hpp"

namespace mgrid {

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& context) {
    if (!j.is_object()) throw std::invalid_argument("config: '" + context + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw std::invalid_argument("config: unknown key '" + key + "' in '" + context + "'");
    }
}

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace detail

inline PvParams parse_pv(const nlohmann::json& j) {
    detail::check_keys(j, {"rated_kw", "derating", "stc_irradiance"}, "fleet.pv");
    PvParams p;
    detail::get_if_present(j, "rated_kw", p.rated_kw);
    detail::get_if_present(j, "derating", p.derating);
    detail::get_if_present(j, "stc_irradiance", p.stc_irradiance);
    return p;
}

inline WindParams parse_wind(const nlohmann::json& j) {
    detail::check_keys(j, {"air_density", "swept_area", "power_coeff", "rated_kw", "cut_in_ms", "cut_out_ms"},
                       "fleet.wind");
    WindParams p;
    detail::get_if_present(j, "air_density", p.air_density);
    detail::get_if_present(j, "swept_area", p.swept_area);
    detail::get_if_present(j, "power_coeff", p.power_coeff);
    detail::get_if_present(j, "rated_kw", p.rated_kw);
    detail::get_if_present(j, "cut_in_ms", p.cut_in_ms);
    detail::get_if_present(j, "cut_out_ms", p.cut_out_ms);
    return p;
}

inline DieselParams parse_diesel(const nlohmann::json& j) {
    detail::check_keys(j, {"rated_kw", "slope_l_per_kwh", "intercept_l_per_h_kw", "fuel_price", "max_kw"},
                       "fleet.diesel");
    DieselParams p;
    detail::get_if_present(j, "rated_kw", p.rated_kw);
    detail::get_if_present(j, "slope_l_per_kwh", p.slope_l_per_kwh);
    detail::get_if_present(j, "intercept_l_per_h_kw", p.intercept_l_per_h_kw);
    detail::get_if_present(j, "fuel_price", p.fuel_price);
    detail::get_if_present(j, "max_kw", p.max_kw);
    return p;
}

inline BatteryParams parse_battery(const nlohmann::json& j) {
    detail::check_keys(
        j, {"capacity_kwh", "dod", "soc_min", "soc_max", "p_max_kw", "eta_ch", "eta_dis", "deg_cost_per_kwh"},
        "fleet.battery");
    BatteryParams p;
    detail::get_if_present(j, "capacity_kwh", p.capacity_kwh);
    detail::get_if_present(j, "dod", p.dod);
    detail::get_if_present(j, "soc_min", p.soc_min);
    detail::get_if_present(j, "soc_max", p.soc_max);
    detail::get_if_present(j, "p_max_kw", p.p_max_kw);
    detail::get_if_present(j, "eta_ch", p.eta_ch);
    detail::get_if_present(j, "eta_dis", p.eta_dis);
    detail::get_if_present(j, "deg_cost_per_kwh", p.deg_cost_per_kwh);
    return p;
}

inline ConverterParams parse_converter(const nlohmann::json& j) {
    detail::check_keys(j, {"efficiency", "rated_kw"}, "fleet.converter");
    ConverterParams p;
    detail::get_if_present(j, "efficiency", p.efficiency);
    detail::get_if_present(j, "rated_kw", p.rated_kw);
    return p;
}

inline GridParams parse_grid(const nlohmann::json& j) {
    detail::check_keys(j, {"import_max_kw", "export_max_kw", "outage_prob"}, "fleet.grid");
    GridParams p;
    detail::get_if_present(j, "import_max_kw", p.import_max_kw);
    detail::get_if_present(j, "export_max_kw", p.export_max_kw);
    detail::get_if_present(j, "outage_prob", p.outage_prob);
    return p;
}

inline DeviceFleet parse_fleet(const nlohmann::json& j) {
    detail::check_keys(j, {"pv", "wind", "diesel", "battery", "converter", "grid"}, "fleet");
    DeviceFleet f;
    if (j.contains("pv")) f.pv = parse_pv(j.at("pv"));
    if (j.contains("wind")) f.wind = parse_wind(j.at("wind"));
    if (j.contains("diesel")) f.diesel = parse_diesel(j.at("diesel"));
    if (j.contains("battery")) f.battery = parse_battery(j.at("battery"));
    if (j.contains("converter")) f.converter = parse_converter(j.at("converter"));
    if (j.contains("grid")) f.grid = parse_grid(j.at("grid"));
    return f;
}

inline nlohmann::json fleet_to_json(const DeviceFleet& f) {
    return nlohmann::json{
        {"pv", {{"rated_kw", f.pv.rated_kw}, {"derating", f.pv.derating}, {"stc_irradiance", f.pv.stc_irradiance}}},
        {"wind",
         {{"air_density", f.wind.air_density},
          {"swept_area", f.wind.swept_area},
          {"power_coeff", f.wind.power_coeff},
          {"rated_kw", f.wind.rated_kw},
          {"cut_in_ms", f.wind.cut_in_ms},
          {"cut_out_ms", f.wind.cut_out_ms}}},
        {"diesel",
         {{"rated_kw", f.diesel.rated_kw},
          {"slope_l_per_kwh", f.diesel.slope_l_per_kwh},
          {"intercept_l_per_h_kw", f.diesel.intercept_l_per_h_kw},
          {"fuel_price", f.diesel.fuel_price},
          {"max_kw", f.diesel.max_kw}}},
        {"battery",
         {{"capacity_kwh", f.battery.capacity_kwh},
          {"dod", f.battery.dod},
          {"soc_min", f.battery.soc_min},
          {"soc_max", f.battery.soc_max},
          {"p_max_kw", f.battery.p_max_kw},
          {"eta_ch", f.battery.eta_ch},
          {"eta_dis", f.battery.eta_dis},
          {"deg_cost_per_kwh", f.battery.deg_cost_per_kwh}}},
        {"converter", {{"efficiency", f.converter.efficiency}, {"rated_kw", f.converter.rated_kw}}},
        {"grid",
         {{"import_max_kw", f.grid.import_max_kw},
          {"export_max_kw", f.grid.export_max_kw},
          {"outage_prob", f.grid.outage_prob}}}};
}

inline SynthConfig parse_synth(const nlohmann::json& j) {
    detail::check_keys(j,
                       {"days", "peak_load_kw", "solar_clearness_mean", "solar_clearness_std", "weibull_shape",
                        "weibull_scale", "tariff", "price_buy", "price_sell", "peak_price_buy", "peak_start_hour",
                        "peak_end_hour", "seed"},
                       "scenario.synth");
    SynthConfig c;
    detail::get_if_present(j, "days", c.days);
    detail::get_if_present(j, "peak_load_kw", c.peak_load_kw);
    detail::get_if_present(j, "solar_clearness_mean", c.solar_clearness_mean);
    detail::get_if_present(j, "solar_clearness_std", c.solar_clearness_std);
    detail::get_if_present(j, "weibull_shape", c.weibull_shape);
    detail::get_if_present(j, "weibull_scale", c.weibull_scale);
    if (j.contains("tariff")) {
        const std::string t = j.at("tariff").get<std::string>();
        if (t == "flat") c.tariff = TariffKind::Flat;
        else if (t == "tou") c.tariff = TariffKind::TimeOfUse;
        else throw std::invalid_argument("config: scenario.synth.tariff must be 'flat' or 'tou'");
    }
    detail::get_if_present(j, "price_buy", c.price_buy);
    detail::get_if_present(j, "price_sell", c.price_sell);
    detail::get_if_present(j, "peak_price_buy", c.peak_price_buy);
    detail::get_if_present(j, "peak_start_hour", c.peak_start_hour);
    detail::get_if_present(j, "peak_end_hour", c.peak_end_hour);
    detail::get_if_present(j, "seed", c.seed);
    return c;
}

inline nlohmann::json synth_to_json(const SynthConfig& c) {
    return nlohmann::json{{"days", c.days},
                          {"peak_load_kw", c.peak_load_kw},
                          {"solar_clearness_mean", c.solar_clearness_mean},
                          {"solar_clearness_std", c.solar_clearness_std},
                          {"weibull_shape", c.weibull_shape},
                          {"weibull_scale", c.weibull_scale},
                          {"tariff", c.tariff == TariffKind::Flat ? "flat" : "tou"},
                          {"price_buy", c.price_buy},
                          {"price_sell", c.price_sell},
                          {"peak_price_buy", c.peak_price_buy},
                          {"peak_start_hour", c.peak_start_hour},
                          {"peak_end_hour", c.peak_end_hour},
                          {"seed", c.seed}};
}

inline TrainConfig parse_train_config(const nlohmann::json& j) {
    detail::check_keys(j,
                       {"gamma", "gae_lambda", "clip_eps", "learning_rate", "epochs_per_update", "minibatch_size",
                        "rollout_length", "total_steps", "entropy_coef", "value_coef", "max_grad_norm",
                        "hidden_width", "num_envs", "window_steps", "log_std_init", "checkpoint_every", "workers",
                        "seed"},
                       "training");
    TrainConfig c;
    detail::get_if_present(j, "gamma", c.gamma);
    detail::get_if_present(j, "gae_lambda", c.gae_lambda);
    detail::get_if_present(j, "clip_eps", c.clip_eps);
    detail::get_if_present(j, "learning_rate", c.learning_rate);
    detail::get_if_present(j, "epochs_per_update", c.epochs_per_update);
    detail::get_if_present(j, "minibatch_size", c.minibatch_size);
    detail::get_if_present(j, "rollout_length", c.rollout_length);
    detail::get_if_present(j, "total_steps", c.total_steps);
    detail::get_if_present(j, "entropy_coef", c.entropy_coef);
    detail::get_if_present(j, "value_coef", c.value_coef);
    detail::get_if_present(j, "max_grad_norm", c.max_grad_norm);
    detail::get_if_present(j, "hidden_width", c.hidden_width);
    detail::get_if_present(j, "num_envs", c.num_envs);
    detail::get_if_present(j, "window_steps", c.window_steps);
    detail::get_if_present(j, "log_std_init", c.log_std_init);
    detail::get_if_present(j, "checkpoint_every", c.checkpoint_every);
    detail::get_if_present(j, "workers", c.workers);
    detail::get_if_present(j, "seed", c.seed);
    return c;
}

struct EnvSettings {
    std::optional<std::size_t> horizon;  // default: full scenario length
    std::optional<double> initial_soc;
    double unmet_penalty = 5.0;
    bool export_blocked_islanded = true;
    std::uint64_t seed = 1;
};

inline EnvSettings parse_env_settings(const nlohmann::json& j) {
    detail::check_keys(j, {"horizon", "initial_soc", "unmet_penalty", "export_blocked_islanded", "seed"},
                       "environment");
    EnvSettings s;
    if (j.contains("horizon") && !j.at("horizon").is_null()) s.horizon = j.at("horizon").get<std::size_t>();
    if (j.contains("initial_soc") && !j.at("initial_soc").is_null()) s.initial_soc = j.at("initial_soc").get<double>();
    detail::get_if_present(j, "unmet_penalty", s.unmet_penalty);
    detail::get_if_present(j, "export_blocked_islanded", s.export_blocked_islanded);
    detail::get_if_present(j, "seed", s.seed);
    return s;
}

struct RunConfig {
    DeviceFleet fleet;
    std::optional<std::string> scenario_path;  // exactly one source is set
    std::optional<SynthConfig> synth;
    EnvSettings env;
    TrainConfig training;
    std::string output_dir = "mgrid-run";

    // Loads (or synthesizes) the scenario and assembles the environment config.
    EnvConfig make_env_config() const {
        EnvConfig cfg;
        cfg.fleet = fleet;
        if (scenario_path) {
            if (!std::filesystem::exists(*scenario_path))
                throw std::invalid_argument("scenario file not found: " + *scenario_path);
            try {
                cfg.scenario = std::make_shared<Scenario>(load_scenario(*scenario_path));
            } catch (const std::runtime_error& e) {
                throw std::invalid_argument(e.what());  // bad input data is a validation failure
            }
        } else {
            SynthConfig sc = synth.value_or(SynthConfig{});
            cfg.scenario = std::make_shared<Scenario>(synth_scenario(sc));
        }
        cfg.horizon = env.horizon.value_or(cfg.scenario->size());
        cfg.initial_soc = env.initial_soc;
        cfg.unmet_penalty = env.unmet_penalty;
        cfg.export_blocked_islanded = env.export_blocked_islanded;
        cfg.seed = env.seed;
        cfg.validate();
        return cfg;
    }
};

inline RunConfig parse_run_config(const nlohmann::json& j) {
    detail::check_keys(j, {"fleet", "scenario", "environment", "training", "output_dir"}, "config");
    RunConfig rc;
    if (j.contains("fleet")) rc.fleet = parse_fleet(j.at("fleet"));
    if (j.contains("scenario")) {
        const auto& s = j.at("scenario");
        detail::check_keys(s, {"path", "synth"}, "scenario");
        if (s.contains("path") == s.contains("synth"))
            throw std::invalid_argument("config: scenario needs exactly one of 'path' or 'synth'");
        if (s.contains("path")) rc.scenario_path = s.at("path").get<std::string>();
        else rc.synth = parse_synth(s.at("synth"));
    } else {
        rc.synth = SynthConfig{};
    }
    if (j.contains("environment")) rc.env = parse_env_settings(j.at("environment"));
    if (j.contains("training")) rc.training = parse_train_config(j.at("training"));
    if (j.contains("output_dir")) rc.output_dir = j.at("output_dir").get<std::string>();
    return rc;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config: " + path + ": " + e.what());
    }
    return parse_run_config(j);
}

// The fully-resolved configuration written next to every run's artifacts.
inline nlohmann::json resolved_config_json(const RunConfig& rc, const EnvConfig& env_cfg) {
    nlohmann::json scenario;
    if (rc.scenario_path) scenario = {{"path", *rc.scenario_path}};
    else scenario = {{"synth", synth_to_json(rc.synth.value_or(SynthConfig{}))}};
    nlohmann::json env{{"horizon", env_cfg.horizon},
                       {"unmet_penalty", env_cfg.unmet_penalty},
                       {"export_blocked_islanded", env_cfg.export_blocked_islanded},
                       {"seed", env_cfg.seed}};
    env["initial_soc"] = env_cfg.initial_soc ? nlohmann::json(*env_cfg.initial_soc) : nlohmann::json(nullptr);
    return nlohmann::json{{"fleet", fleet_to_json(rc.fleet)},
                          {"scenario", scenario},
                          {"scenario_hash", detail::hash_hex(scenario_hash(*env_cfg.scenario))},
                          {"environment", env},
                          {"training", rc.training},
                          {"output_dir", rc.output_dir}};
}

inline nlohmann::json stats_to_json(const ScenarioStats& st) {
    auto series = [](const SeriesStats& s) {
        return nlohmann::json{{"min", s.min}, {"mean", s.mean}, {"max", s.max}, {"total", s.total}};
    };
    return nlohmann::json{{"steps", st.steps},
                          {"dt_h", st.dt_h},
                          {"load_kw", series(st.load_kw)},
                          {"irradiance_kwm2", series(st.irradiance)},
                          {"wind_ms", series(st.wind_ms)},
                          {"price_buy", series(st.price_buy)},
                          {"price_sell", series(st.price_sell)}};
}

}  // namespace mgrid
