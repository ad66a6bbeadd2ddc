#include "rctaf/commands.hpp"

#include "rctaf/errors.hpp"
#include "rctaf/hessian.hpp"
#include "rctaf/json_io.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <random>

namespace rctaf {

OutputFormat parse_output_format(const std::string& name) {
    if (name == "csv") {
        return OutputFormat::csv;
    }
    if (name == "json") {
        return OutputFormat::json;
    }
    throw UsageError(fmt::format("unknown format \"{}\" (expected csv or json)", name));
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

double to_number(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw UsageError(fmt::format("\"{}\" is not a number", s));
}

}  // namespace

ActivationSpec parse_activation_arg(const std::string& text) {
    try {
        if (!text.empty() && text.front() == '{') {
            return activation_from_json(nlohmann::json::parse(text));
        }
        const auto parts = split(text, ':');
        const std::string& kind = parts.front();
        if (kind == "rct_af") {
            if (parts.size() != 3) {
                throw UsageError("rct_af takes the form rct_af:ALPHA:BETA");
            }
            const double beta = to_number(parts[2]);
            if (beta != std::floor(beta)) {
                throw UsageError("beta must be an integer");
            }
            return RctAf{to_number(parts[1]), static_cast<int>(beta)};
        }
        if (kind == "leaky_relu") {
            return LeakyRelu{parts.size() > 1 ? to_number(parts[1]) : 0.01};
        }
        if (parts.size() == 1) {
            return activation_from_json({{"kind", kind}});
        }
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(fmt::format("bad activation \"{}\": {}", text, e.what()));
    } catch (const FormatError& e) {
        throw UsageError(fmt::format("bad activation \"{}\": {}", text, e.what()));
    } catch (const DomainError& e) {
        throw UsageError(fmt::format("bad activation \"{}\": {}", text, e.what()));
    }
    throw UsageError(fmt::format("bad activation \"{}\"", text));
}

int cmd_act_table(const ActivationSpec& spec, double x_min, double x_max, int n_points, OutputFormat format,
                  std::ostream& out) {
    if (n_points < 2) {
        throw UsageError("act-table needs at least 2 points");
    }
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_min < x_max)) {
        throw UsageError(fmt::format("bad range [{}, {}]", x_min, x_max));
    }
    const bool smooth = spec.twice_differentiable();
    nlohmann::json rows = nlohmann::json::array();
    if (format == OutputFormat::csv) {
        out << "x,value,d1,d2\n";
    }
    for (int i = 0; i < n_points; ++i) {
        // Endpoints are hit exactly.
        const double t = static_cast<double>(i) / (n_points - 1);
        const double x = i == n_points - 1 ? x_max : x_min + t * (x_max - x_min);
        const double v = eval(spec, x);
        const double g = d1(spec, x);
        if (format == OutputFormat::csv) {
            if (smooth) {
                fmt::print(out, "{},{},{},{}\n", x, v, g, d2(spec, x));
            } else {
                fmt::print(out, "{},{},{},\n", x, v, g);
            }
        } else {
            nlohmann::json row = {{"x", x}, {"value", v}, {"d1", g}};
            row["d2"] = smooth ? nlohmann::json(d2(spec, x)) : nlohmann::json(nullptr);
            rows.push_back(std::move(row));
        }
    }
    if (format == OutputFormat::json) {
        out << nlohmann::json{{"activation", to_json(spec)}, {"rows", rows}}.dump(2) << '\n';
    }
    return kExitOk;
}

int cmd_curvature(const std::vector<ActivationSpec>& specs, OutputFormat format, std::ostream& out) {
    if (specs.empty()) {
        throw UsageError("curvature needs at least one activation");
    }
    nlohmann::json rows = nlohmann::json::array();
    if (format == OutputFormat::csv) {
        out << "activation,argmax_x,max_abs_d2,max_abs_d2_3dp\n";
    }
    for (const auto& spec : specs) {
        const CurvatureProfile p = max_abs_d2(spec);
        if (format == OutputFormat::csv) {
            if (p.infinite) {
                fmt::print(out, "{},,inf,inf\n", spec.name());
            } else {
                fmt::print(out, "{},{},{},{:.3f}\n", spec.name(), p.argmax_x, p.max_abs_d2, p.max_abs_d2);
            }
        } else {
            nlohmann::json row = {{"activation", to_json(spec)}, {"name", spec.name()}};
            row["max_abs_d2"] = p.infinite ? nlohmann::json("inf") : nlohmann::json(p.max_abs_d2);
            row["argmax_x"] = p.infinite ? nlohmann::json(nullptr) : nlohmann::json(p.argmax_x);
            rows.push_back(std::move(row));
        }
    }
    if (format == OutputFormat::json) {
        out << rows.dump(2) << '\n';
    }
    return kExitOk;
}

namespace {

double scaled_error(double value, double reference) {
    return std::abs(value - reference) / std::max(std::abs(reference), 1e-2);
}

double max_scaled_error(const Vector& value, const Vector& reference) {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < value.size(); ++k) {
        worst = std::max(worst, scaled_error(value(k), reference(k)));
    }
    return worst;
}

double max_relative_error(const Vector& value, const Vector& reference) {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < value.size(); ++k) {
        const double scale = std::max({std::abs(value(k)), std::abs(reference(k)), 1e-12});
        worst = std::max(worst, std::abs(value(k) - reference(k)) / scale);
    }
    return worst;
}

bool paths_allowed(const Network& net) {
    std::size_t hidden = 0;
    for (std::size_t l = 1; l + 1 < net.widths().size(); ++l) {
        hidden += net.widths()[l];
    }
    return hidden <= kMaxPathHiddenNeurons && net.layer_count() <= kMaxPathLayers;
}

struct CheckCase {
    Network net;
    Vector x;
    double y;
};

CheckCase random_case(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    constexpr std::array<double, 4> alphas = {1.0, 4.0, 14.0, 28.0};
    std::uniform_int_distribution<int> depth(2, 4);
    std::uniform_int_distribution<std::size_t> width(1, 8);
    std::uniform_int_distribution<std::size_t> in_dim(1, 4);
    std::uniform_int_distribution<std::size_t> pick_alpha(0, alphas.size() - 1);
    std::uniform_int_distribution<int> pick_beta(0, 2);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    const int layers = depth(rng);
    std::vector<std::size_t> widths{in_dim(rng)};
    for (int l = 1; l < layers; ++l) {
        widths.push_back(width(rng));
    }
    widths.push_back(1);
    const ActivationSpec act = RctAf{alphas[pick_alpha(rng)], pick_beta(rng)};
    Network net = init_network(widths, act, rng());
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        for (Eigen::Index i = 0; i < net.biases(l).size(); ++i) {
            net.biases(l)(i) = 0.5 * unit(rng);
        }
    }
    Vector x(static_cast<Eigen::Index>(widths.front()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x(i) = unit(rng);
    }
    return {std::move(net), std::move(x), unit(rng)};
}

std::string describe(const Network& net) {
    std::string w;
    for (std::size_t v : net.widths()) {
        w += (w.empty() ? "" : "-") + std::to_string(v);
    }
    return fmt::format("{} {}", w, net.activation().name());
}

// Closed forms for one hidden layer, written out directly.
Vector single_layer_closed_form(const Network& net, const Vector& x, double y) {
    const ActivationSpec& act = net.activation();
    const Matrix& w1 = net.weights(0);
    const Vector& b1 = net.biases(0);
    const Matrix& w2 = net.weights(1);
    const Vector z = w1 * x + b1;
    const Vector h = z.unaryExpr([&act](double v) { return eval(act, v); });
    const double f = (w2 * h)(0) + net.biases(1)(0);
    const double r = f - y;
    Vector out(static_cast<Eigen::Index>(net.parameter_count()));
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < w1.rows(); ++i) {
        for (Eigen::Index j = 0; j < w1.cols(); ++j) {
            const double g = w2(0, i) * d1(act, z(i)) * x(j);
            out(k++) = g * g + r * w2(0, i) * d2(act, z(i)) * x(j) * x(j);
        }
    }
    for (Eigen::Index i = 0; i < w1.rows(); ++i) {
        const double g = w2(0, i) * d1(act, z(i));
        out(k++) = g * g + r * w2(0, i) * d2(act, z(i));
    }
    for (Eigen::Index i = 0; i < h.size(); ++i) {
        out(k++) = h(i) * h(i);
    }
    out(k) = 1.0;
    return out;
}

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

int cmd_hessian_check(const HessianCheckOptions& opts, std::ostream& out) {
    if (opts.trials < 1 && !opts.net_file) {
        throw UsageError("hessian-check needs trials >= 1");
    }
    if (!(opts.tolerance >= 0.0)) {
        throw UsageError("tolerance must be >= 0");
    }

    std::vector<CheckCase> cases;
    if (opts.net_file) {
        Network net = network_from_json(read_json_file(*opts.net_file));
        Vector x = Vector::Constant(static_cast<Eigen::Index>(net.input_dim()), 0.5);
        if (opts.input) {
            if (opts.input->size() != net.input_dim()) {
                throw UsageError(fmt::format("--x has {} entries, network expects {}", opts.input->size(),
                                             net.input_dim()));
            }
            x = Eigen::Map<const Vector>(opts.input->data(), static_cast<Eigen::Index>(opts.input->size()));
        }
        cases.push_back({std::move(net), std::move(x), opts.target});
    } else {
        for (int t = 0; t < opts.trials; ++t) {
            cases.push_back(random_case(opts.seed + static_cast<std::uint64_t>(t)));
        }
    }

    double worst_fd = 0.0;
    double worst_paths = 0.0;
    double worst_closed = 0.0;
    fmt::print(out, "trial,network,max_err_fd,max_rel_err_paths\n");
    for (std::size_t t = 0; t < cases.size(); ++t) {
        const auto& [net, x, y] = cases[t];
        const HessianDiagReport exact = hessian_diag_exact(net, as_span(x), y);
        const Vector fd = hessian_diag_fd(net, as_span(x), y);
        const double err_fd = max_scaled_error(exact.diag, fd);
        worst_fd = std::max(worst_fd, err_fd);
        std::string paths_col = "n/a";
        if (paths_allowed(net)) {
            const double err = max_relative_error(exact.diag, hessian_diag_paths(net, as_span(x), y).diag);
            worst_paths = std::max(worst_paths, err);
            paths_col = fmt::format("{:.3e}", err);
        }
        fmt::print(out, "{},{},{:.3e},{}\n", t, describe(net), err_fd, paths_col);
        if (net.layer_count() == 2) {
            const double err = max_relative_error(exact.diag, single_layer_closed_form(net, x, y));
            worst_closed = std::max(worst_closed, err);
            fmt::print(out, "closed-form single-layer check (trial {}): max relative error {:.3e}\n", t, err);
        }
    }

    // The path expansion and the closed forms are exact up to rounding.
    constexpr double kExactTolerance = 1e-10;
    const bool pass = worst_fd < opts.tolerance && worst_paths <= kExactTolerance && worst_closed <= kExactTolerance;
    fmt::print(out, "max relative error vs finite differences: {:.3e} (tolerance {:.3e})\n", worst_fd, opts.tolerance);
    fmt::print(out, "max relative error vs path expansion: {:.3e}\n", worst_paths);
    fmt::print(out, "{}\n", pass ? "PASS" : "FAIL");
    return pass ? kExitOk : kExitCheckFailed;
}

int cmd_sweep(const SweepCommandOptions& opts, std::ostream& out) {
    const SweepConfig cfg =
        opts.config_file ? sweep_config_from_json(read_json_file(*opts.config_file)) : default_sweep_config();
    if (!opts.resume && std::filesystem::exists(opts.output)) {
        std::filesystem::remove(opts.output);
    }
    const std::size_t total = sweep_cells(cfg).size();
    std::size_t finished = 0;
    const SweepOutcome outcome = run_sweep(cfg, opts.output, opts.jobs, [&](const SweepResult& r) {
        ++finished;
        fmt::print(out, "[{}/{}] beta={} curvature={} seed={} robust={:.4f} diag_norm={:.5f} {}\n", finished,
                   total, r.key.beta, r.key.curvature, r.key.seed, r.robust_accuracy, r.diag_norm, r.status);
        out.flush();
    });
    fmt::print(out, "{} cells run\n", outcome.cells_run);

    std::map<std::pair<int, double>, std::array<double, 4>> sums;
    std::map<std::pair<int, double>, int> counts;
    for (const auto& r : outcome.results) {
        if (r.status != "ok") {
            continue;
        }
        auto& s = sums[{r.key.beta, r.key.curvature}];
        s[0] += r.clean_accuracy;
        s[1] += r.robust_accuracy;
        s[2] += r.diag_norm;
        s[3] += r.std_clean_accuracy;
        ++counts[{r.key.beta, r.key.curvature}];
    }
    fmt::print(out, "beta,curvature,n,clean_acc,robust_acc,diag_norm,std_clean_acc\n");
    for (const auto& [key, s] : sums) {
        const double n = counts[key];
        fmt::print(out, "{},{},{},{:.4f},{:.4f},{:.5f},{:.4f}\n", key.first, key.second, counts[key], s[0] / n,
                   s[1] / n, s[2] / n, s[3] / n);
    }
    fmt::print(out, "results: {}\n", opts.output.string());
    return kExitOk;
}

int cmd_plot(const std::filesystem::path& results_csv, PlotKind kind, bool log_x,
             const std::filesystem::path& out_svg, std::ostream& out) {
    ChartSpec chart = build_chart(read_sweep_csv(results_csv), kind, log_x);
    chart.output_path = out_svg.string();
    const std::string svg = render_svg(chart);
    std::ofstream file(out_svg, std::ios::binary);
    if (!file) {
        throw IoError(fmt::format("cannot write {}", out_svg.string()));
    }
    file << svg;
    fmt::print(out, "wrote {} ({} series)\n", out_svg.string(), chart.series.size());
    return kExitOk;
}

}  // namespace rctaf
