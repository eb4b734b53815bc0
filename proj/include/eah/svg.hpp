#pragma once

#include <string>
#include <vector>

namespace eah {

struct SvgSeries {
    std::string label;
    std::vector<double> values;
    std::string color = "#000000";
    bool dashed = false;
};

// Standalone 800x400 line chart; series share the x axis. Observed data is
// conventionally drawn solid black and predictions dashed red.
std::string svg_line_chart(const std::string& title, const std::vector<double>& x,
                           const std::vector<SvgSeries>& series,
                           const std::string& x_label = "",
                           const std::string& y_label = "");

}  // namespace eah
