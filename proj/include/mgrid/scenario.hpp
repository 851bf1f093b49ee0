#pragma once

// Hourly time-series scenarios: CSV ingestion, a seeded synthetic generator
// (clear-sky solar, AR(1)-smoothed Weibull wind, double-peak residential
// load, flat or two-band tariffs), and summary statistics.
//
// CSV schema (one row per step, UTF-8, '.' decimal separator):
//   hour,load_kw,irradiance_kwm2,wind_ms,price_buy,price_sell
// 'hour' is the step index starting at 0; hour-of-day is hour mod 24.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mgrid/rng.hpp"

namespace mgrid {

struct ScenarioMeta {
    std::string name;
    std::string origin;  // "ingested" or "synthetic"
    std::uint64_t seed = 0;
};

struct Scenario {
    double dt_h = 1.0;
    std::vector<double> load_kw;
    std::vector<double> irradiance;  // kW/m^2
    std::vector<double> wind_ms;
    std::vector<double> price_buy;   // currency/kWh
    std::vector<double> price_sell;  // currency/kWh
    ScenarioMeta meta;

    std::size_t size() const { return load_kw.size(); }

    void validate() const {
        const std::size_t n = load_kw.size();
        if (n < 1) throw std::invalid_argument("scenario: series must have at least one step");
        if (irradiance.size() != n || wind_ms.size() != n || price_buy.size() != n || price_sell.size() != n)
            throw std::invalid_argument("scenario: all series must have the same length");
        if (dt_h <= 0.0) throw std::invalid_argument("scenario: dt_h must be > 0");
        for (std::size_t i = 0; i < n; ++i) {
            if (!(load_kw[i] >= 0.0)) throw std::invalid_argument("scenario: load_kw must be >= 0 at row " + std::to_string(i));
            if (!(irradiance[i] >= 0.0)) throw std::invalid_argument("scenario: irradiance must be >= 0 at row " + std::to_string(i));
            if (!(wind_ms[i] >= 0.0)) throw std::invalid_argument("scenario: wind_ms must be >= 0 at row " + std::to_string(i));
            if (!(price_buy[i] >= 0.0)) throw std::invalid_argument("scenario: price_buy must be >= 0 at row " + std::to_string(i));
            if (!(price_sell[i] >= 0.0)) throw std::invalid_argument("scenario: price_sell must be >= 0 at row " + std::to_string(i));
        }
    }
};

namespace detail {

// Shortest representation that round-trips exactly.
inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view cell, std::size_t row, std::size_t col) {
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
        throw std::runtime_error("scenario csv: non-numeric cell at row " + std::to_string(row) + ", column " +
                                 std::to_string(col) + " ('" + std::string(cell) + "')");
    return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

inline std::uint64_t parse_hash_hex(const std::string& s) { return std::stoull(s, nullptr, 16); }

}  // namespace detail

inline constexpr std::string_view kScenarioCsvHeader = "hour,load_kw,irradiance_kwm2,wind_ms,price_buy,price_sell";

inline std::string scenario_to_csv(const Scenario& s) {
    std::string out(kScenarioCsvHeader);
    out.push_back('\n');
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += std::to_string(i);
        out.push_back(',');
        out += detail::format_double(s.load_kw[i]);
        out.push_back(',');
        out += detail::format_double(s.irradiance[i]);
        out.push_back(',');
        out += detail::format_double(s.wind_ms[i]);
        out.push_back(',');
        out += detail::format_double(s.price_buy[i]);
        out.push_back(',');
        out += detail::format_double(s.price_sell[i]);
        out.push_back('\n');
    }
    return out;
}

// Content hash used to guard that compared trajectories were produced on the
// same series; covers dt and every sample, not the metadata.
inline std::uint64_t scenario_hash(const Scenario& s) {
    std::string prefix = "dt=" + detail::format_double(s.dt_h) + "\n";
    return detail::fnv1a64(scenario_to_csv(s), detail::fnv1a64(prefix));
}

inline void save_scenario(const Scenario& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("scenario: cannot open for writing: " + path);
    out << scenario_to_csv(s);
    if (!out) throw std::runtime_error("scenario: write failed: " + path);
}

inline Scenario parse_scenario_csv(std::string_view text, double dt_h = 1.0, const std::string& name = "") {
    Scenario s;
    s.dt_h = dt_h;
    s.meta.name = name;
    s.meta.origin = "ingested";

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

        if (!header_seen) {
            if (line != kScenarioCsvHeader)
                throw std::runtime_error("scenario csv: header mismatch, expected '" + std::string(kScenarioCsvHeader) +
                                         "' got '" + std::string(line) + "'");
            header_seen = true;
            continue;
        }

        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 6)
            throw std::runtime_error("scenario csv: expected 6 columns at row " + std::to_string(row) + ", got " +
                                     std::to_string(cells.size()));
        const double hour = detail::parse_double(cells[0], row, 0);
        if (hour != static_cast<double>(row))
            throw std::runtime_error("scenario csv: hour column must equal the row index at row " + std::to_string(row));
        s.load_kw.push_back(detail::parse_double(cells[1], row, 1));
        s.irradiance.push_back(detail::parse_double(cells[2], row, 2));
        s.wind_ms.push_back(detail::parse_double(cells[3], row, 3));
        s.price_buy.push_back(detail::parse_double(cells[4], row, 4));
        s.price_sell.push_back(detail::parse_double(cells[5], row, 5));
        ++row;
    }
    if (!header_seen) throw std::runtime_error("scenario csv: empty file");
    s.validate();
    return s;
}

inline Scenario load_scenario(const std::string& path, double dt_h = 1.0) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("scenario: cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_csv(buf.str(), dt_h, path);
}

enum class TariffKind { Flat, TimeOfUse };

struct SynthConfig {
    int days = 365;
    double peak_load_kw = 150.0;
    double solar_clearness_mean = 0.75;
    double solar_clearness_std = 0.15;
    double weibull_shape = 2.0;
    double weibull_scale = 7.0;
    TariffKind tariff = TariffKind::Flat;
    double price_buy = 0.30;
    double price_sell = 0.08;
    double peak_price_buy = 0.45;  // time-of-use band only
    int peak_start_hour = 17;
    int peak_end_hour = 21;
    std::uint64_t seed = 42;

    void validate() const {
        if (days < 1) throw std::invalid_argument("synth: days must be >= 1");
        if (peak_load_kw <= 0.0) throw std::invalid_argument("synth: peak_load_kw must be > 0");
        if (solar_clearness_std < 0.0) throw std::invalid_argument("synth: solar_clearness_std must be >= 0");
        if (weibull_shape <= 0.0 || weibull_scale <= 0.0)
            throw std::invalid_argument("synth: weibull shape and scale must be > 0");
        if (price_buy < 0.0 || price_sell < 0.0 || peak_price_buy < 0.0)
            throw std::invalid_argument("synth: prices must be >= 0");
        if (peak_start_hour < 0 || peak_end_hour > 24 || peak_start_hour >= peak_end_hour)
            throw std::invalid_argument("synth: peak band must satisfy 0 <= start < end <= 24");
    }
};

namespace detail {

// Normalized diurnal residential shape: base + morning and evening peaks.
inline double load_shape(int hour_of_day) {
    auto bump = [](double h, double center, double width) {
        double d = std::fabs(h - center);
        d = std::min(d, 24.0 - d);  // circular distance across midnight
        return std::exp(-(d * d) / (2.0 * width * width));
    };
    return 0.40 + 0.25 * bump(hour_of_day, 8.0, 2.2) + 0.60 * bump(hour_of_day, 19.0, 2.5);
}

inline double load_shape_max() {
    double m = 0.0;
    for (int h = 0; h < 24; ++h) m = std::max(m, load_shape(h));
    return m;
}

// Clear-sky half-sine between 06:00 and 18:00.
inline double clear_sky(int hour_of_day) {
    if (hour_of_day <= 6 || hour_of_day >= 18) return 0.0;
    return std::sin(M_PI * (hour_of_day - 6) / 12.0);
}

}  // namespace detail

inline Scenario synth_scenario(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t n = static_cast<std::size_t>(cfg.days) * 24;

    // Independent substreams so tweaking one model leaves the others' draws alone.
    Rng solar_rng = Rng::derive(cfg.seed, 1);
    Rng wind_rng = Rng::derive(cfg.seed, 2);
    Rng load_rng = Rng::derive(cfg.seed, 3);

    Scenario s;
    s.dt_h = 1.0;
    s.meta.origin = "synthetic";
    s.meta.seed = cfg.seed;
    s.meta.name = "synthetic-" + std::to_string(cfg.days) + "d-seed" + std::to_string(cfg.seed);
    s.load_kw.reserve(n);
    s.irradiance.reserve(n);
    s.wind_ms.reserve(n);
    s.price_buy.reserve(n);
    s.price_sell.reserve(n);

    const double shape_max = detail::load_shape_max();
    double wind_prev = wind_rng.weibull(cfg.weibull_shape, cfg.weibull_scale);
    double clearness = 0.0;

    for (std::size_t t = 0; t < n; ++t) {
        const int hod = static_cast<int>(t % 24);
        if (hod == 0)
            clearness = std::clamp(solar_rng.normal(cfg.solar_clearness_mean, cfg.solar_clearness_std), 0.05, 1.0);

        s.irradiance.push_back(std::clamp(detail::clear_sky(hod) * clearness, 0.0, 1.0));

        if (t > 0) {
            const double draw = wind_rng.weibull(cfg.weibull_shape, cfg.weibull_scale);
            wind_prev = 0.8 * wind_prev + 0.2 * draw;
        }
        s.wind_ms.push_back(wind_prev);

        const double noise = load_rng.lognormal(0.0, 0.1);
        s.load_kw.push_back(cfg.peak_load_kw * detail::load_shape(hod) / shape_max * noise);

        const bool peak_band = hod >= cfg.peak_start_hour && hod < cfg.peak_end_hour;
        s.price_buy.push_back(cfg.tariff == TariffKind::TimeOfUse && peak_band ? cfg.peak_price_buy : cfg.price_buy);
        s.price_sell.push_back(cfg.price_sell);
    }
    s.validate();
    return s;
}

struct SeriesStats {
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
    double total = 0.0;  // integral over time in unit-hours (kWh for power series)
};

struct ScenarioStats {
    std::size_t steps = 0;
    double dt_h = 1.0;
    SeriesStats load_kw;
    SeriesStats irradiance;
    SeriesStats wind_ms;
    SeriesStats price_buy;
    SeriesStats price_sell;
};

namespace detail {
inline SeriesStats series_stats(const std::vector<double>& v, double dt_h) {
    SeriesStats st;
    st.min = v.front();
    st.max = v.front();
    double sum = 0.0;
    for (const double x : v) {
        st.min = std::min(st.min, x);
        st.max = std::max(st.max, x);
        sum += x;
    }
    st.mean = sum / static_cast<double>(v.size());
    st.total = sum * dt_h;
    return st;
}
}  // namespace detail

inline ScenarioStats scenario_stats(const Scenario& s) {
    s.validate();
    ScenarioStats st;
    st.steps = s.size();
    st.dt_h = s.dt_h;
    st.load_kw = detail::series_stats(s.load_kw, s.dt_h);
    st.irradiance = detail::series_stats(s.irradiance, s.dt_h);
    st.wind_ms = detail::series_stats(s.wind_ms, s.dt_h);
    st.price_buy = detail::series_stats(s.price_buy, s.dt_h);
    st.price_sell = detail::series_stats(s.price_sell, s.dt_h);
    return st;
}

}  // namespace mgrid
