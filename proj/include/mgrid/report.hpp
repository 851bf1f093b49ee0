#pragma once

// Static SVG rendering of the normalized KPI comparison: five KPI groups,
// one bar per strategy, scores in [0, 1].

#include <string>

#include "mgrid/kpi.hpp"

namespace mgrid {

inline std::string render_comparison_svg(const ComparisonReport& cmp) {
    constexpr int width = 760;
    constexpr int height = 420;
    constexpr int margin_left = 60;
    constexpr int margin_bottom = 70;
    constexpr int margin_top = 40;
    constexpr double plot_h = height - margin_bottom - margin_top;
    constexpr int group_w = 130;
    constexpr int bar_w = 42;

    auto fmt = [](double v) { return detail::fixed2(v); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
           std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + std::to_string(width / 2) +
           "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
           "Normalized Performance Metrics</text>\n";

    // y axis with quarter gridlines
    for (int i = 0; i <= 4; ++i) {
        const double frac = i / 4.0;
        const double y = margin_top + plot_h * (1.0 - frac);
        svg += "<line x1=\"" + std::to_string(margin_left) + "\" y1=\"" + fmt(y) + "\" x2=\"" +
               std::to_string(width - 20) + "\" y2=\"" + fmt(y) + "\" stroke=\"#ddd\"/>\n";
        svg += "<text x=\"" + std::to_string(margin_left - 8) + "\" y=\"" + fmt(y + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(frac) + "</text>\n";
    }

    for (int k = 0; k < 5; ++k) {
        const int gx = margin_left + 20 + k * group_w;
        const double rbc_h = plot_h * cmp.rbc_score[k];
        const double ppo_h = plot_h * cmp.ppo_score[k];
        svg += "<rect x=\"" + std::to_string(gx) + "\" y=\"" + fmt(margin_top + plot_h - rbc_h) + "\" width=\"" +
               std::to_string(bar_w) + "\" height=\"" + fmt(rbc_h) + "\" fill=\"#4878a8\"/>\n";
        svg += "<rect x=\"" + std::to_string(gx + bar_w + 6) + "\" y=\"" + fmt(margin_top + plot_h - ppo_h) +
               "\" width=\"" + std::to_string(bar_w) + "\" height=\"" + fmt(ppo_h) + "\" fill=\"#e8923c\"/>\n";
        svg += "<text x=\"" + std::to_string(gx + bar_w + 3) + "\" y=\"" + fmt(height - margin_bottom + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">";
        // first word only, to keep labels inside the group width
        const std::string label = kKpiLabels[k];
        svg += label.substr(0, label.find(' '));
        svg += "</text>\n";
        svg += "<text x=\"" + std::to_string(gx + bar_w / 2) + "\" y=\"" + fmt(margin_top + plot_h - rbc_h - 4) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + fmt(cmp.rbc_score[k]) +
               "</text>\n";
        svg += "<text x=\"" + std::to_string(gx + bar_w + 6 + bar_w / 2) + "\" y=\"" +
               fmt(margin_top + plot_h - ppo_h - 4) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + fmt(cmp.ppo_score[k]) +
               "</text>\n";
    }

    // legend
    svg += "<rect x=\"" + std::to_string(width - 180) + "\" y=\"" + std::to_string(margin_top) +
           "\" width=\"14\" height=\"14\" fill=\"#4878a8\"/>\n";
    svg += "<text x=\"" + std::to_string(width - 160) + "\" y=\"" + std::to_string(margin_top + 12) +
           "\" font-family=\"sans-serif\" font-size=\"12\">RBC</text>\n";
    svg += "<rect x=\"" + std::to_string(width - 110) + "\" y=\"" + std::to_string(margin_top) +
           "\" width=\"14\" height=\"14\" fill=\"#e8923c\"/>\n";
    svg += "<text x=\"" + std::to_string(width - 90) + "\" y=\"" + std::to_string(margin_top + 12) +
           "\" font-family=\"sans-serif\" font-size=\"12\">DRL-PPO</text>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace mgrid
