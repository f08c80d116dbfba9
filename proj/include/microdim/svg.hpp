#pragma once

#include <string>
#include <vector>

// Bare-bones SVG charts: axes, ticks, polylines, dots and bars.

namespace microdim::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct Axes {
    std::string title;
    std::string x_label;
    std::string y_label;
};

std::string line_plot(const std::vector<Series>& series, const Axes& axes);

/// Scatter; when `color` is non-empty each dot is shaded by its value.
std::string scatter(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& color,
                    const Axes& axes);

/// Bars over consecutive bins given by `edges` (counts.size() + 1 entries).
std::string histogram(const std::vector<double>& edges, const std::vector<double>& counts, const Axes& axes);

} // namespace microdim::svg
