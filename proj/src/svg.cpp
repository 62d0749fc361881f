#include "ucmoa/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

#include "ucmoa/errors.hpp"

namespace ucmoa {

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

const char* series_color(std::size_t i) {
    static const char* palette[] = {"#4363d8", "#e6194b", "#3cb44b", "#f58231",
                                    "#911eb4", "#46f0f0", "#808000", "#000075"};
    return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

} // namespace

std::string render_line_chart(const std::vector<SvgSeries>& series,
                              const std::string& x_label, const std::string& y_label,
                              int width, int height) {
    if (series.empty()) throw ConfigError("svg: no series to plot");

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (const auto& p : s.points) {
            xmin = std::min(xmin, p[0]);
            xmax = std::max(xmax, p[0]);
            ymin = std::min(ymin, p[1]);
            ymax = std::max(ymax, p[1]);
        }
    }
    if (!(xmin <= xmax)) throw ConfigError("svg: series contain no points");
    if (xmax == xmin) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax == ymin) {
        ymin -= 0.5;
        ymax += 0.5;
    }

    const double ml = 70, mr = 20, mt = 20, mb = 55; // margins
    const double pw = width - ml - mr;
    const double ph = height - mt - mb;
    auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Axes.
    svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" + num(ml + pw) +
           "\" y2=\"" + num(mt + ph) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt) + "\" x2=\"" + num(ml) +
           "\" y2=\"" + num(mt + ph) + "\" stroke=\"black\"/>\n";

    // Axis extent ticks.
    svg += "<text x=\"" + num(ml) + "\" y=\"" + num(mt + ph + 18) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + num(xmin) + "</text>\n";
    svg += "<text x=\"" + num(ml + pw) + "\" y=\"" + num(mt + ph + 18) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + num(xmax) + "</text>\n";
    svg += "<text x=\"" + num(ml - 8) + "\" y=\"" + num(mt + ph) +
           "\" font-size=\"11\" text-anchor=\"end\">" + num(ymin) + "</text>\n";
    svg += "<text x=\"" + num(ml - 8) + "\" y=\"" + num(mt + 10) +
           "\" font-size=\"11\" text-anchor=\"end\">" + num(ymax) + "</text>\n";

    // Axis labels.
    svg += "<text x=\"" + num(ml + pw / 2) + "\" y=\"" + num(mt + ph + 40) +
           "\" font-size=\"13\" text-anchor=\"middle\">" + x_label + "</text>\n";
    svg += "<text x=\"18\" y=\"" + num(mt + ph / 2) +
           "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
           num(mt + ph / 2) + ")\">" + y_label + "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        if (s.points.empty()) continue;
        std::string pts;
        for (const auto& p : s.points) {
            pts += num(sx(p[0])) + "," + num(sy(p[1])) + " ";
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(series_color(si)) +
               "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        for (const auto& p : s.points) {
            svg += "<circle cx=\"" + num(sx(p[0])) + "\" cy=\"" + num(sy(p[1])) +
                   "\" r=\"2.5\" fill=\"" + series_color(si) + "\"/>\n";
        }
        // Legend entry.
        const double ly = mt + 14 + 16 * static_cast<double>(si);
        svg += "<line x1=\"" + num(ml + pw - 130) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" +
               num(ml + pw - 110) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" +
               series_color(si) + "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + num(ml + pw - 104) + "\" y=\"" + num(ly) +
               "\" font-size=\"11\">" + s.label + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace ucmoa
