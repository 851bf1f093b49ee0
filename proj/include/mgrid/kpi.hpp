#pragma once

// The five performance indicators computed from a dispatch trajectory, their
// cross-strategy normalization, and the side-by-side comparison report.
//
// Definitions (the literature leaves the exact ratios open; these are the
// versioned choices of this project, isolated here so alternates can be
// swapped):
//   reliability          = served energy / demanded energy * 100
//   battery cycles       = terminal throughput / (2 * capacity)   [equivalent full cycles]
//   self-sufficiency     = (1 - import energy / load energy) * 100
//   renewable utilization= (available - curtailed) / available * 100
//   operational cost     = sum of grid, degradation and fuel costs
// The unmet-load shaping penalty is excluded from operational cost.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgrid/devices.hpp"
#include "mgrid/trajectory.hpp"

namespace mgrid {

struct KpiReport {
    double reliability_pct = 0.0;
    double battery_cycles = 0.0;
    double self_sufficiency_pct = 0.0;
    double renewable_utilization_pct = 0.0;
    double operational_cost = 0.0;

    double load_kwh = 0.0;
    double served_kwh = 0.0;
    double unmet_kwh = 0.0;
    double import_kwh = 0.0;
    double export_kwh = 0.0;
    double renewable_avail_kwh = 0.0;
    double renewable_used_kwh = 0.0;
    double curtailed_kwh = 0.0;
    double dg_kwh = 0.0;
    double battery_throughput_kwh = 0.0;

    std::uint64_t scenario_hash = 0;
    std::uint64_t seed = 0;
    std::string strategy;
};

inline KpiReport compute_kpis(const Trajectory& traj, double battery_capacity_kwh) {
    if (traj.steps.empty()) throw std::invalid_argument("kpi: empty trajectory");
    if (battery_capacity_kwh <= 0.0) throw std::invalid_argument("kpi: battery capacity must be > 0");
    const double dt = traj.meta.dt_h;

    KpiReport r;
    r.scenario_hash = traj.meta.scenario_hash;
    r.seed = traj.meta.seed;
    r.strategy = traj.meta.strategy;
    for (const auto& s : traj.steps) {
        r.load_kwh += s.p_load_kw * dt;
        r.unmet_kwh += s.unmet_kw * dt;
        r.import_kwh += s.p_grid_import_kw * dt;
        r.export_kwh += s.p_grid_export_kw * dt;
        r.renewable_avail_kwh += (s.p_pv_avail_kw + s.p_w_avail_kw) * dt;
        r.curtailed_kwh += s.curtailed_kw * dt;
        r.dg_kwh += s.p_dg_kw * dt;
        r.battery_throughput_kwh += std::fabs(s.p_bat_kw) * dt;
        r.operational_cost += s.c_grid + s.c_deg + s.c_dg;
    }
    r.served_kwh = r.load_kwh - r.unmet_kwh;
    r.renewable_used_kwh = r.renewable_avail_kwh - r.curtailed_kwh;
    r.battery_cycles = r.battery_throughput_kwh / (2.0 * battery_capacity_kwh);
    r.reliability_pct = r.load_kwh > 0.0 ? r.served_kwh / r.load_kwh * 100.0 : 100.0;
    r.self_sufficiency_pct =
        r.load_kwh > 0.0 ? std::clamp((1.0 - r.import_kwh / r.load_kwh) * 100.0, 0.0, 100.0) : 100.0;
    r.renewable_utilization_pct =
        r.renewable_avail_kwh > 0.0 ? r.renewable_used_kwh / r.renewable_avail_kwh * 100.0 : 100.0;
    return r;
}

inline KpiReport compute_kpis(const Trajectory& traj, const DeviceFleet& fleet) {
    return compute_kpis(traj, fleet.battery.capacity_kwh);
}

// KPI identifiers in report order.
enum class Kpi { Reliability = 0, BatteryCycles, SelfSufficiency, RenewableUtilization, OperationalCost };

inline constexpr std::array<const char*, 5> kKpiLabels = {
    "System Reliability (%)", "Battery Cycles", "Self-Sufficiency Ratio (%)", "Renewable Utilization (%)",
    "Operational Cost"};

inline constexpr std::array<bool, 5> kKpiHigherIsBetter = {true, false, true, true, false};

// Wording for the comparison table's improvement column, per KPI direction.
inline constexpr std::array<const char*, 5> kKpiImprovementWord = {"improvement", "reduction", "improvement",
                                                                   "increase", "reduction"};

inline double kpi_value(const KpiReport& r, Kpi k) {
    switch (k) {
        case Kpi::Reliability: return r.reliability_pct;
        case Kpi::BatteryCycles: return r.battery_cycles;
        case Kpi::SelfSufficiency: return r.self_sufficiency_pct;
        case Kpi::RenewableUtilization: return r.renewable_utilization_pct;
        case Kpi::OperationalCost: return r.operational_cost;
    }
    throw std::logic_error("kpi_value: unknown kpi");
}

// Scales each KPI into [0, 1] across strategies: higher-is-better KPIs by
// value/max, lower-is-better KPIs by min/value so the best strategy scores 1.
inline std::vector<std::array<double, 5>> normalize_kpis(const std::vector<KpiReport>& reports) {
    if (reports.size() < 2) throw std::invalid_argument("normalize_kpis: need at least two reports");
    std::vector<std::array<double, 5>> scores(reports.size());
    for (int k = 0; k < 5; ++k) {
        double mn = kpi_value(reports[0], static_cast<Kpi>(k));
        double mx = mn;
        for (const auto& r : reports) {
            const double v = kpi_value(r, static_cast<Kpi>(k));
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        for (std::size_t i = 0; i < reports.size(); ++i) {
            const double v = kpi_value(reports[i], static_cast<Kpi>(k));
            if (kKpiHigherIsBetter[k]) {
                if (mx == 0.0) throw std::domain_error("normalize_kpis: undefined score, all values zero for " +
                                                       std::string(kKpiLabels[k]));
                scores[i][k] = v / mx;
            } else {
                if (mn < 0.0) throw std::domain_error("normalize_kpis: undefined score, negative values for " +
                                                      std::string(kKpiLabels[k]));
                scores[i][k] = v == 0.0 ? 1.0 : mn / v;
            }
        }
    }
    return scores;
}

struct ComparisonReport {
    KpiReport rbc;
    KpiReport ppo;
    std::array<double, 5> improvement_pct{};  // signed; positive means PPO is better
    std::array<double, 5> rbc_score{};
    std::array<double, 5> ppo_score{};
};

// Improvement of `better` over `base` in percent, oriented by KPI direction.
inline double kpi_improvement_pct(double base, double candidate, bool higher_is_better) {
    if (base == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (higher_is_better ? (candidate - base) : (base - candidate)) / base * 100.0;
}

inline ComparisonReport comparison_report(const KpiReport& rbc, const KpiReport& ppo) {
    if (rbc.scenario_hash != ppo.scenario_hash)
        throw std::invalid_argument("comparison_report: scenario hash mismatch, trajectories come from different series");
    ComparisonReport cmp;
    cmp.rbc = rbc;
    cmp.ppo = ppo;
    for (int k = 0; k < 5; ++k) {
        cmp.improvement_pct[k] = kpi_improvement_pct(kpi_value(rbc, static_cast<Kpi>(k)),
                                                     kpi_value(ppo, static_cast<Kpi>(k)), kKpiHigherIsBetter[k]);
    }
    const auto scores = normalize_kpis({rbc, ppo});
    cmp.rbc_score = scores[0];
    cmp.ppo_score = scores[1];
    return cmp;
}

inline nlohmann::json kpi_to_json(const KpiReport& r) {
    return nlohmann::json{
        {"strategy", r.strategy},
        {"kpis",
         {{"reliability_pct", r.reliability_pct},
          {"battery_cycles", r.battery_cycles},
          {"self_sufficiency_pct", r.self_sufficiency_pct},
          {"renewable_utilization_pct", r.renewable_utilization_pct},
          {"operational_cost", r.operational_cost}}},
        {"energy_kwh",
         {{"load", r.load_kwh},
          {"served", r.served_kwh},
          {"unmet", r.unmet_kwh},
          {"import", r.import_kwh},
          {"export", r.export_kwh},
          {"renewable_available", r.renewable_avail_kwh},
          {"renewable_used", r.renewable_used_kwh},
          {"curtailed", r.curtailed_kwh},
          {"diesel", r.dg_kwh},
          {"battery_throughput", r.battery_throughput_kwh}}},
        {"scenario_hash", detail::hash_hex(r.scenario_hash)},
        {"seed", r.seed}};
}

inline nlohmann::json comparison_to_json(const ComparisonReport& cmp) {
    nlohmann::json per_kpi = nlohmann::json::array();
    for (int k = 0; k < 5; ++k) {
        per_kpi.push_back({{"kpi", kKpiLabels[k]},
                           {"rbc", kpi_value(cmp.rbc, static_cast<Kpi>(k))},
                           {"ppo", kpi_value(cmp.ppo, static_cast<Kpi>(k))},
                           {"improvement_pct", cmp.improvement_pct[k]},
                           {"direction", kKpiHigherIsBetter[k] ? "higher_is_better" : "lower_is_better"},
                           {"rbc_normalized", cmp.rbc_score[k]},
                           {"ppo_normalized", cmp.ppo_score[k]}});
    }
    return nlohmann::json{{"comparison", per_kpi}, {"rbc", kpi_to_json(cmp.rbc)}, {"ppo", kpi_to_json(cmp.ppo)}};
}

namespace detail {
inline std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
}
}  // namespace detail

inline std::string render_comparison_table(const ComparisonReport& cmp) {
    std::string out;
    out += "Performance Category          |      RBC |  DRL-PPO | Key Improvement\n";
    out += "------------------------------+----------+----------+----------------------\n";
    for (int k = 0; k < 5; ++k) {
        char line[160];
        const double imp = cmp.improvement_pct[k];
        std::string imp_text = std::isnan(imp) ? "n/a" : detail::fixed2(imp) + "% " + kKpiImprovementWord[k];
        std::snprintf(line, sizeof(line), "%-30s|%9s |%9s | %s\n", kKpiLabels[k],
                      detail::fixed2(kpi_value(cmp.rbc, static_cast<Kpi>(k))).c_str(),
                      detail::fixed2(kpi_value(cmp.ppo, static_cast<Kpi>(k))).c_str(), imp_text.c_str());
        out += line;
    }
    return out;
}

}  // namespace mgrid
