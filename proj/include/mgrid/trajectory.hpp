#pragma once

// Trajectory persistence: one StepRecord per CSV row plus '#' metadata lines
// (scenario hash, seed, step length, battery capacity, strategy name). The
// scenario hash travels with the file so downstream comparisons can refuse
// trajectories produced on different series.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mgrid/environment.hpp"
#include "mgrid/scenario.hpp"

namespace mgrid {

struct TrajectoryMeta {
    std::uint64_t scenario_hash = 0;
    std::uint64_t seed = 0;
    double dt_h = 1.0;
    double battery_capacity_kwh = 0.0;
    std::string strategy;
};

struct Trajectory {
    TrajectoryMeta meta;
    std::vector<StepRecord> steps;
};

inline constexpr std::string_view kTrajectoryCsvHeader =
    "t,grid_up,load_kw,pv_avail_kw,wind_avail_kw,pv_used_kw,wind_used_kw,bat_kw,dg_kw,"
    "import_kw,export_kw,curtailed_kw,unmet_kw,soc_after,c_grid,c_deg,c_dg,reward";

inline Trajectory make_trajectory(std::vector<StepRecord> steps, const EnvConfig& cfg, std::string strategy) {
    Trajectory traj;
    traj.meta.scenario_hash = scenario_hash(*cfg.scenario);
    traj.meta.seed = cfg.seed;
    traj.meta.dt_h = cfg.scenario->dt_h;
    traj.meta.battery_capacity_kwh = cfg.fleet.battery.capacity_kwh;
    traj.meta.strategy = std::move(strategy);
    traj.steps = std::move(steps);
    return traj;
}

inline std::string trajectory_to_csv(const Trajectory& traj) {
    std::string out;
    out += "# mgrid-trajectory v1\n";
    out += "# scenario_hash=" + detail::hash_hex(traj.meta.scenario_hash) + "\n";
    out += "# seed=" + std::to_string(traj.meta.seed) + "\n";
    out += "# dt_h=" + detail::format_double(traj.meta.dt_h) + "\n";
    out += "# battery_capacity_kwh=" + detail::format_double(traj.meta.battery_capacity_kwh) + "\n";
    out += "# strategy=" + traj.meta.strategy + "\n";
    out += std::string(kTrajectoryCsvHeader) + "\n";
    for (const auto& r : traj.steps) {
        out += std::to_string(r.t);
        out += r.grid_up ? ",1" : ",0";
        for (const double v : {r.p_load_kw, r.p_pv_avail_kw, r.p_w_avail_kw, r.p_pv_used_kw, r.p_w_used_kw,
                               r.p_bat_kw, r.p_dg_kw, r.p_grid_import_kw, r.p_grid_export_kw, r.curtailed_kw,
                               r.unmet_kw, r.soc_after, r.c_grid, r.c_deg, r.c_dg, r.reward}) {
            out.push_back(',');
            out += detail::format_double(v);
        }
        out.push_back('\n');
    }
    return out;
}

inline void save_trajectory(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("trajectory: cannot open for writing: " + path);
    out << trajectory_to_csv(traj);
    if (!out) throw std::runtime_error("trajectory: write failed: " + path);
}

inline Trajectory parse_trajectory_csv(std::string_view text) {
    Trajectory traj;
    std::size_t pos = 0;
    std::size_t row = 0;
    bool header_seen = false;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        if (line.front() == '#') {
            const std::string meta(line.substr(1));
            const auto eq = meta.find('=');
            if (eq == std::string::npos) continue;
            std::string key = meta.substr(0, eq);
            key.erase(0, key.find_first_not_of(' '));
            const std::string value = meta.substr(eq + 1);
            if (key == "scenario_hash") traj.meta.scenario_hash = detail::parse_hash_hex(value);
            else if (key == "seed") traj.meta.seed = std::stoull(value);
            else if (key == "dt_h") traj.meta.dt_h = std::stod(value);
            else if (key == "battery_capacity_kwh") traj.meta.battery_capacity_kwh = std::stod(value);
            else if (key == "strategy") traj.meta.strategy = value;
            continue;
        }
        if (!header_seen) {
            if (line != kTrajectoryCsvHeader)
                throw std::runtime_error("trajectory csv: header mismatch");
            header_seen = true;
            continue;
        }

        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 18)
            throw std::runtime_error("trajectory csv: expected 18 columns at data row " + std::to_string(row));
        StepRecord r;
        r.t = static_cast<std::size_t>(detail::parse_double(cells[0], row, 0));
        r.grid_up = detail::parse_double(cells[1], row, 1) != 0.0;
        r.p_load_kw = detail::parse_double(cells[2], row, 2);
        r.p_pv_avail_kw = detail::parse_double(cells[3], row, 3);
        r.p_w_avail_kw = detail::parse_double(cells[4], row, 4);
        r.p_pv_used_kw = detail::parse_double(cells[5], row, 5);
        r.p_w_used_kw = detail::parse_double(cells[6], row, 6);
        r.p_bat_kw = detail::parse_double(cells[7], row, 7);
        r.p_dg_kw = detail::parse_double(cells[8], row, 8);
        r.p_grid_import_kw = detail::parse_double(cells[9], row, 9);
        r.p_grid_export_kw = detail::parse_double(cells[10], row, 10);
        r.curtailed_kw = detail::parse_double(cells[11], row, 11);
        r.unmet_kw = detail::parse_double(cells[12], row, 12);
        r.soc_after = detail::parse_double(cells[13], row, 13);
        r.c_grid = detail::parse_double(cells[14], row, 14);
        r.c_deg = detail::parse_double(cells[15], row, 15);
        r.c_dg = detail::parse_double(cells[16], row, 16);
        r.reward = detail::parse_double(cells[17], row, 17);
        traj.steps.push_back(r);
        ++row;
    }
    if (!header_seen) throw std::runtime_error("trajectory csv: empty or header-less file");
    return traj;
}

inline Trajectory load_trajectory(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("trajectory: cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_trajectory_csv(buf.str());
}

}  // namespace mgrid
