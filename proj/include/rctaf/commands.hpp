#pragma once

// Subcommands of the rctaf command-line tool, callable from code. Each writes
// its report to `out` and returns a process exit code.

#include "rctaf/activation.hpp"
#include "rctaf/chart.hpp"
#include "rctaf/sweep.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rctaf {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitCheckFailed = 2, kExitIo = 3 };

enum class OutputFormat { csv, json };

OutputFormat parse_output_format(const std::string& name);

/// Accepts a JSON object ({"kind": "rct_af", ...}), a bare kind name
/// ("gelu", "relu", ...), "leaky_relu:SLOPE" or "rct_af:ALPHA:BETA".
ActivationSpec parse_activation_arg(const std::string& text);

/// Columns x, value, d1, d2 on an evenly spaced grid. d2 is left empty where
/// the activation has no second derivative.
int cmd_act_table(const ActivationSpec& spec, double x_min, double x_max, int n_points, OutputFormat format,
                  std::ostream& out);

/// One row per activation: name, argmax, max|sigma''| ("inf" for kinks) and
/// the value rounded to three decimals.
int cmd_curvature(const std::vector<ActivationSpec>& specs, OutputFormat format, std::ostream& out);

struct HessianCheckOptions {
    std::optional<std::filesystem::path> net_file;
    std::optional<std::vector<double>> input;  // net-file mode; defaults to 0.5 everywhere
    double target = 0.0;
    int trials = 20;
    /// Pass iff every |exact - oracle| / max(|oracle|, 1e-2) is strictly below it.
    double tolerance = 1e-4;
    std::uint64_t seed = 42;
};

/// Compares the D-recursion against the finite-difference oracle and the path
/// expansion (when the net is small enough); exit 2 on failure.
int cmd_hessian_check(const HessianCheckOptions& opts, std::ostream& out);

struct SweepCommandOptions {
    std::optional<std::filesystem::path> config_file;
    std::filesystem::path output = "sweep_results.csv";
    bool resume = false;
    unsigned jobs = 0;
};

int cmd_sweep(const SweepCommandOptions& opts, std::ostream& out);

int cmd_plot(const std::filesystem::path& results_csv, PlotKind kind, bool log_x,
             const std::filesystem::path& out_svg, std::ostream& out);

}  // namespace rctaf
