#include "eah/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "eah/errors.hpp"

namespace eah {

namespace {

constexpr double kWidth = 800.0, kHeight = 400.0;
constexpr double kLeft = 60.0, kRight = 20.0, kTop = 36.0, kBottom = 44.0;

std::string num(double v, int digits = 2) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string tick_label(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char ch : text) {
        if (ch == '&')
            out += "&amp;";
        else if (ch == '<')
            out += "&lt;";
        else if (ch == '>')
            out += "&gt;";
        else
            out.push_back(ch);
    }
    return out;
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::vector<double>& x,
                           const std::vector<SvgSeries>& series, const std::string& x_label,
                           const std::string& y_label) {
    if (x.empty()) throw ArgumentError("svg_line_chart: empty x axis");
    for (const SvgSeries& s : series)
        if (s.values.size() != x.size())
            throw ArgumentError("svg_line_chart: series '" + s.label +
                                "' does not match the x axis length");

    double x_min = x.front(), x_max = x.back();
    if (x_max <= x_min) x_max = x_min + 1.0;
    double y_min = 0.0, y_max = 1e-12;
    for (const SvgSeries& s : series)
        for (double v : s.values) {
            y_min = std::min(y_min, v);
            y_max = std::max(y_max, v);
        }
    y_max += 0.05 * (y_max - y_min);

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    const auto sx = [&](double v) { return kLeft + (v - x_min) / (x_max - x_min) * plot_w; };
    const auto sy = [&](double v) {
        return kTop + plot_h - (v - y_min) / (y_max - y_min) * plot_h;
    };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 400\" "
           "width=\"800\" height=\"400\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"400\" fill=\"#ffffff\"/>\n";
    out += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\" fill=\"#000000\">" +
           escape(title) + "</text>\n";

    // Axes and ticks.
    out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
           "\" y2=\"" + num(kTop + plot_h) + "\" stroke=\"#333333\"/>\n";
    out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + plot_h) + "\" x2=\"" +
           num(kLeft + plot_w) + "\" y2=\"" + num(kTop + plot_h) + "\" stroke=\"#333333\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double frac = static_cast<double>(k) / 5.0;
        const double yv = y_min + frac * (y_max - y_min);
        const double yy = sy(yv);
        out += "<line x1=\"" + num(kLeft - 4) + "\" y1=\"" + num(yy) + "\" x2=\"" +
               num(kLeft + plot_w) + "\" y2=\"" + num(yy) +
               "\" stroke=\"#dddddd\" stroke-width=\"0.7\"/>\n";
        out += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(yy + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
               "fill=\"#333333\">" +
               tick_label(yv) + "</text>\n";
        const double xv = x_min + frac * (x_max - x_min);
        const double xx = sx(xv);
        out += "<text x=\"" + num(xx) + "\" y=\"" + num(kTop + plot_h + 16) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
               "fill=\"#333333\">" +
               tick_label(xv) + "</text>\n";
    }
    if (!x_label.empty())
        out += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kHeight - 8) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
               "fill=\"#000000\">" +
               escape(x_label) + "</text>\n";
    if (!y_label.empty())
        out += "<text x=\"14\" y=\"" + num(kTop + plot_h / 2) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
               "fill=\"#000000\" transform=\"rotate(-90 14 " +
               num(kTop + plot_h / 2) + ")\">" + escape(y_label) + "</text>\n";

    for (const SvgSeries& s : series) {
        std::string points;
        for (std::size_t k = 0; k < x.size(); ++k) {
            points += (k == 0 ? "" : " ");
            points += num(sx(x[k])) + "," + num(sy(s.values[k]));
        }
        out += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.8\"";
        if (s.dashed) out += " stroke-dasharray=\"6 4\"";
        out += " points=\"" + points + "\"/>\n";
    }

    // Legend in the top-right corner of the plot area.
    double ly = kTop + 14.0;
    for (const SvgSeries& s : series) {
        const double lx = kLeft + plot_w - 150.0;
        out += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" +
               num(lx + 26) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + s.color +
               "\" stroke-width=\"1.8\"" + (s.dashed ? " stroke-dasharray=\"6 4\"" : "") +
               "/>\n";
        out += "<text x=\"" + num(lx + 32) + "\" y=\"" + num(ly) +
               "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#000000\">" +
               escape(s.label) + "</text>\n";
        ly += 16.0;
    }

    out += "</svg>\n";
    return out;
}

}  // namespace eah
