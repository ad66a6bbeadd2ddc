#include "rctaf/commands.hpp"
#include "rctaf/errors.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace rctaf;

struct Globals {
    std::uint64_t seed = 42;
    std::string output;
    std::string format = "csv";
};

// Runs `body` against stdout, or against --output when one is given.
template <typename Body>
int with_output(const Globals& g, Body&& body) {
    if (g.output.empty()) {
        return body(std::cout);
    }
    std::ofstream file(g.output);
    if (!file) {
        throw IoError(fmt::format("cannot write {}", g.output));
    }
    return body(file);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Curvature-tunable activations: tables, Hessian checks, sweeps and plots"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
    app.add_option("--output,-o", g.output, "Output file (default: stdout; sweep and plot have their own defaults)");
    app.add_option("--format", g.format, "Table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

    std::string act_text = "rct_af:1:0";
    double x_min = -5.0;
    double x_max = 5.0;
    int n_points = 101;
    auto* act_table = app.add_subcommand("act-table", "Value, first and second derivative on a grid");
    act_table->add_option("--activation,-a", act_text, "Activation: JSON object, name, rct_af:ALPHA:BETA")
        ->capture_default_str();
    act_table->add_option("--x-min", x_min)->capture_default_str();
    act_table->add_option("--x-max", x_max)->capture_default_str();
    act_table->add_option("--points,-n", n_points)->capture_default_str();

    std::vector<std::string> curv_specs;
    auto* curvature = app.add_subcommand("curvature", "Maximum |sigma''| of each activation");
    curvature->add_option("activations", curv_specs, "Activations (default: gelu swish mish elu relu leaky_relu)");

    HessianCheckOptions hc;
    std::string net_file;
    std::vector<double> input;
    auto* hessian = app.add_subcommand("hessian-check", "Verify the exact Hessian diagonal against oracles");
    hessian->add_option("--net", net_file, "Network JSON file (default: random networks)");
    hessian->add_option("--x", input, "Input vector for --net (comma separated)")->delimiter(',');
    hessian->add_option("--y", hc.target, "Target for --net")->capture_default_str();
    hessian->add_option("--trials", hc.trials)->capture_default_str();
    hessian->add_option("--tolerance", hc.tolerance)->capture_default_str();

    SweepCommandOptions sw;
    std::string config_file;
    auto* sweep = app.add_subcommand("sweep", "Train the curvature grid and write a results CSV");
    sweep->add_option("--config,-c", config_file, "Sweep config JSON (default: built-in grid)");
    sweep->add_flag("--resume", sw.resume, "Skip cells already in the output CSV");
    sweep->add_option("--jobs,-j", sw.jobs, "Worker threads (0: available parallelism)")->capture_default_str();

    std::string results_csv;
    std::string kind = "robustness_vs_curvature";
    bool log_x = false;
    auto* plot = app.add_subcommand("plot", "Render a sweep CSV as SVG");
    plot->add_option("results", results_csv, "Results CSV from sweep")->required();
    plot->add_option("--kind,-k", kind)
        ->check(CLI::IsMember({"robustness_vs_curvature", "norm_vs_curvature", "clean_vs_curvature"}))
        ->capture_default_str();
    plot->add_flag("--log-x", log_x, "Logarithmic curvature axis");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        const OutputFormat format = parse_output_format(g.format);
        if (*act_table) {
            const ActivationSpec spec = parse_activation_arg(act_text);
            return with_output(g, [&](std::ostream& out) {
                return cmd_act_table(spec, x_min, x_max, n_points, format, out);
            });
        }
        if (*curvature) {
            if (curv_specs.empty()) {
                curv_specs = {"gelu", "swish", "mish", "elu", "relu", "leaky_relu"};
            }
            std::vector<ActivationSpec> specs;
            for (const auto& s : curv_specs) {
                specs.push_back(parse_activation_arg(s));
            }
            return with_output(g, [&](std::ostream& out) { return cmd_curvature(specs, format, out); });
        }
        if (*hessian) {
            hc.seed = g.seed;
            if (!net_file.empty()) {
                hc.net_file = net_file;
            }
            if (!input.empty()) {
                hc.input = input;
            }
            return with_output(g, [&](std::ostream& out) { return cmd_hessian_check(hc, out); });
        }
        if (*sweep) {
            if (!config_file.empty()) {
                sw.config_file = config_file;
            }
            if (!g.output.empty()) {
                sw.output = g.output;
            }
            return cmd_sweep(sw, std::cout);
        }
        if (*plot) {
            const std::string svg = g.output.empty() ? "plot.svg" : g.output;
            return cmd_plot(results_csv, parse_plot_kind(kind), log_x, svg, std::cout);
        }
    } catch (const UsageError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitUsage;
    } catch (const ConfigError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitUsage;
    } catch (const DomainError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitUsage;
    } catch (const IoError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitIo;
    } catch (const FormatError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitIo;
    } catch (const nlohmann::json::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitIo;
    } catch (const Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitCheckFailed;
    }
    return kExitUsage;
}
