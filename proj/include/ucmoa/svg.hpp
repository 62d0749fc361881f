#ifndef UCMOA_SVG_HPP
#define UCMOA_SVG_HPP

#include <array>
#include <string>
#include <vector>

namespace ucmoa {

struct SvgSeries {
    std::string label;
    std::vector<std::array<double, 2>> points;
};

/// Self-contained SVG line chart: one polyline per series, axis labels and
/// a small legend. Deterministic output for identical input.
std::string render_line_chart(const std::vector<SvgSeries>& series,
                              const std::string& x_label, const std::string& y_label,
                              int width = 640, int height = 480);

} // namespace ucmoa

#endif
