#include "rctaf/chart.hpp"

#include "rctaf/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

namespace rctaf {

void ChartSpec::validate() const {
    if (series.empty()) {
        throw ConfigError("chart has no series");
    }
    for (const auto& s : series) {
        if (s.points.empty()) {
            throw ConfigError(fmt::format("chart series \"{}\" is empty", s.name));
        }
        for (std::size_t i = 1; i < s.points.size(); ++i) {
            if (s.points[i].first < s.points[i - 1].first) {
                throw ConfigError(fmt::format("chart series \"{}\" is not sorted by x", s.name));
            }
        }
        if (log_x && s.points.front().first <= 0.0) {
            throw ConfigError("log-scale x axis needs positive x values");
        }
    }
}

PlotKind parse_plot_kind(const std::string& name) {
    if (name == "robustness_vs_curvature") {
        return PlotKind::robustness_vs_curvature;
    }
    if (name == "norm_vs_curvature") {
        return PlotKind::norm_vs_curvature;
    }
    if (name == "clean_vs_curvature") {
        return PlotKind::clean_vs_curvature;
    }
    throw ConfigError(fmt::format("unknown plot kind \"{}\"", name));
}

ChartSpec build_chart(const std::vector<SweepResult>& results, PlotKind kind, bool log_x) {
    ChartSpec chart;
    chart.log_x = log_x;
    chart.x_label = "max |sigma''|";
    double SweepResult::*metric = nullptr;
    switch (kind) {
        case PlotKind::robustness_vs_curvature:
            metric = &SweepResult::robust_accuracy;
            chart.title = "Robust accuracy vs. maximum curvature";
            chart.y_label = "robust accuracy (PGD)";
            break;
        case PlotKind::norm_vs_curvature:
            metric = &SweepResult::diag_norm;
            chart.title = "Normalized Hessian diagonal norm vs. maximum curvature";
            chart.y_label = "normalized Hessian diagonal norm";
            break;
        case PlotKind::clean_vs_curvature:
            metric = &SweepResult::std_clean_accuracy;
            chart.title = "Clean accuracy (standard training) vs. maximum curvature";
            chart.y_label = "clean accuracy";
            break;
    }

    std::map<int, std::map<double, std::pair<double, int>>> acc;
    for (const auto& r : results) {
        const double v = r.*metric;
        if (std::isnan(v)) {
            continue;
        }
        auto& slot = acc[r.key.beta][r.key.curvature];
        slot.first += v;
        slot.second += 1;
    }
    for (const auto& [beta, by_curv] : acc) {
        ChartSeries s{fmt::format("beta={}", beta), {}};
        for (const auto& [c, sum] : by_curv) {
            s.points.emplace_back(c, sum.first / sum.second);
        }
        chart.series.push_back(std::move(s));
    }
    if (chart.series.empty()) {
        throw FormatError("no finite values to plot");
    }
    return chart;
}

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 460.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 150.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 60.0;

constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&':
                out += "&amp;";
                break;
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            case '"':
                out += "&quot;";
                break;
            default:
                out += c;
        }
    }
    return out;
}

struct Axis {
    double lo;
    double hi;
    double pix_lo;
    double pix_hi;
    bool log;

    double map(double v) const {
        const double t = log ? std::log10(v) : v;
        const double a = log ? std::log10(lo) : lo;
        const double b = log ? std::log10(hi) : hi;
        if (b == a) {
            return 0.5 * (pix_lo + pix_hi);
        }
        return pix_lo + (t - a) / (b - a) * (pix_hi - pix_lo);
    }
};

}  // namespace

std::string render_svg(const ChartSpec& chart) {
    chart.validate();
    double x_lo = chart.series.front().points.front().first;
    double x_hi = x_lo;
    double y_lo = chart.series.front().points.front().second;
    double y_hi = y_lo;
    for (const auto& s : chart.series) {
        for (const auto& [x, y] : s.points) {
            x_lo = std::min(x_lo, x);
            x_hi = std::max(x_hi, x);
            y_lo = std::min(y_lo, y);
            y_hi = std::max(y_hi, y);
        }
    }
    const double pad = y_hi > y_lo ? 0.05 * (y_hi - y_lo) : std::max(1e-3, std::abs(y_hi) * 0.05);
    y_lo -= pad;
    y_hi += pad;

    const Axis ax{x_lo, x_hi, kLeft, kWidth - kRight, chart.log_x};
    const Axis ay{y_lo, y_hi, kHeight - kBottom, kTop, false};

    std::string out;
    out += fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\">\n",
        kWidth, kHeight, kWidth, kHeight);
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += fmt::format("<text x=\"{:.2f}\" y=\"28\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
                       0.5 * (kLeft + kWidth - kRight), escape(chart.title));
    // Axes.
    out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n", kLeft,
                       kHeight - kBottom, kWidth - kRight);
    out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", kLeft,
                       kHeight - kBottom, kTop);

    // x ticks at the distinct data abscissae of the first series.
    for (const auto& [x, y] : chart.series.front().points) {
        const double px = ax.map(x);
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", px,
                           kHeight - kBottom, kHeight - kBottom + 5);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                           px, kHeight - kBottom + 18, x);
    }
    for (int k = 0; k <= 4; ++k) {
        const double v = y_lo + (y_hi - y_lo) * k / 4.0;
        const double py = ay.map(v);
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n",
                           kLeft - 5, py, kLeft);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{:.4g}</text>\n",
                           kLeft - 8, py + 4, v);
    }
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}{}</text>\n",
                       0.5 * (kLeft + kWidth - kRight), kHeight - 18, escape(chart.x_label),
                       chart.log_x ? " (log scale)" : "");
    out += fmt::format("<text x=\"20\" y=\"{0:.2f}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {0:.2f})\">{1}</text>\n",
                       0.5 * (kTop + kHeight - kBottom), escape(chart.y_label));

    for (std::size_t si = 0; si < chart.series.size(); ++si) {
        const auto& s = chart.series[si];
        const char* color = kColors[si % kColors.size()];
        std::string pts;
        for (const auto& [x, y] : s.points) {
            if (!pts.empty()) {
                pts += ' ';
            }
            pts += fmt::format("{:.2f},{:.2f}", ax.map(x), ay.map(y));
        }
        out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", color, pts);
        for (const auto& [x, y] : s.points) {
            out += fmt::format(
                "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3.5\" fill=\"{}\" data-series=\"{}\" data-x=\"{}\" data-y=\"{}\"/>\n",
                ax.map(x), ay.map(y), color, escape(s.name), x, y);
        }
        const double ly = kTop + 20.0 * static_cast<double>(si);
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                           kWidth - kRight + 15, ly, kWidth - kRight + 40, color);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
                           kWidth - kRight + 46, ly + 4, escape(s.name));
    }
    out += "</svg>\n";
    return out;
}

}  // namespace rctaf
