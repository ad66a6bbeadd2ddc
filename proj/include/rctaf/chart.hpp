#pragma once

#include "rctaf/sweep.hpp"

#include <string>
#include <utility>
#include <vector>

namespace rctaf {

struct ChartSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;  // sorted by x
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<ChartSeries> series;
    bool log_x = false;
    std::string output_path;

    /// Throws ConfigError if there are no series, a series is empty, points
    /// are unsorted, or log_x is requested with non-positive x.
    void validate() const;
};

enum class PlotKind { robustness_vs_curvature, norm_vs_curvature, clean_vs_curvature };

PlotKind parse_plot_kind(const std::string& name);

/// One series per beta: x = curvature, y = mean over seeds of the metric,
/// skipping cells whose metric is NaN.
ChartSpec build_chart(const std::vector<SweepResult>& results, PlotKind kind, bool log_x);

/// Standalone SVG. Byte-identical output for identical input. Every data
/// point is a <circle> carrying data-series / data-x / data-y attributes.
std::string render_svg(const ChartSpec& chart);

}  // namespace rctaf
