#pragma once

#include "rctaf/network.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>

namespace rctaf {

/// l-infinity attack budget and schedule.
struct AttackConfig {
    double epsilon = 0.3;
    double step_size = 0.03;
    int steps = 20;
    bool random_start = true;
    std::optional<std::pair<double, double>> input_bounds;

    /// Throws ConfigError on negative epsilon, non-positive step or steps, or
    /// a step larger than 2 * epsilon in a multi-step attack.
    void validate() const;

    bool operator==(const AttackConfig&) const = default;
};

/// Called with (iteration, iterate) after every projection, iteration 0 being
/// the starting point.
using PgdObserver = std::function<void(int, const Vector&)>;

Vector fgsm(const Network& net, const Vector& x, double y, double epsilon,
            std::optional<std::pair<double, double>> input_bounds = std::nullopt);

Vector pgd(const Network& net, const Vector& x, double y, const AttackConfig& cfg, std::uint64_t seed,
           const PgdObserver& observer = {});

/// Projects `candidate` onto the l-inf ball around `centre` and the optional
/// box. |result - centre| <= epsilon holds exactly in floating point.
Vector project_linf(const Vector& candidate, const Vector& centre, double epsilon,
                    const std::optional<std::pair<double, double>>& bounds);

/// +1 when f > 0, -1 when f < 0, 0 otherwise.
int sign_readout(double f);

/// Fraction of (inputs, labels) with correct sign readout. Labels are +-1.
double clean_accuracy(const Network& net, const Matrix& inputs, std::span<const double> labels);

/// Fraction of samples classified correctly both at x and at pgd(x), i.e. the
/// worse of the two inputs decides, so robust accuracy never exceeds clean
/// accuracy. Sample n is attacked with seed ^ n.
double robust_accuracy(const Network& net, const Matrix& inputs, std::span<const double> labels,
                       const AttackConfig& cfg, std::uint64_t seed);

}  // namespace rctaf
