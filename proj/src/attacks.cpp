#include "rctaf/attacks.hpp"

#include "rctaf/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace rctaf {

void AttackConfig::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw ConfigError(fmt::format("attack epsilon must be >= 0, got {}", epsilon));
    }
    if (!(step_size > 0.0)) {
        throw ConfigError(fmt::format("attack step_size must be > 0, got {}", step_size));
    }
    if (steps < 1) {
        throw ConfigError(fmt::format("attack steps must be >= 1, got {}", steps));
    }
    if (steps > 1 && epsilon > 0.0 && step_size > 2.0 * epsilon) {
        throw ConfigError(fmt::format("step_size {} exceeds 2*epsilon {}", step_size, 2.0 * epsilon));
    }
    if (input_bounds && !(input_bounds->first <= input_bounds->second)) {
        throw ConfigError("input_bounds low must not exceed high");
    }
}

namespace {

double signum(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

std::span<const double> as_span(const Vector& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

// One signed-gradient ascent step followed by projection.
Vector ascent_step(const Network& net, const Vector& current, const Vector& centre, double y, double step,
                   double epsilon, const std::optional<std::pair<double, double>>& bounds) {
    const Vector g = grad_input(net, as_span(current), y);
    return project_linf(current + step * g.unaryExpr(&signum), centre, epsilon, bounds);
}

}  // namespace

Vector project_linf(const Vector& candidate, const Vector& centre, double epsilon,
                    const std::optional<std::pair<double, double>>& bounds) {
    Vector out(candidate.size());
    for (Eigen::Index i = 0; i < candidate.size(); ++i) {
        const double c = centre(i);
        double v = std::clamp(candidate(i), c - epsilon, c + epsilon);
        // c +- epsilon is rounded; pull back until the difference is within budget.
        while (v - c > epsilon) {
            v = std::nextafter(v, c);
        }
        while (c - v > epsilon) {
            v = std::nextafter(v, c);
        }
        if (bounds) {
            const double clamped = std::clamp(v, bounds->first, bounds->second);
            // Keep the budget if the box pushes the point away from the centre.
            if (std::abs(clamped - c) <= epsilon) {
                v = clamped;
            }
        }
        out(i) = v;
    }
    return out;
}

Vector fgsm(const Network& net, const Vector& x, double y, double epsilon,
            std::optional<std::pair<double, double>> input_bounds) {
    if (!(epsilon >= 0.0)) {
        throw ConfigError(fmt::format("fgsm epsilon must be >= 0, got {}", epsilon));
    }
    return ascent_step(net, x, x, y, epsilon, epsilon, input_bounds);
}

Vector pgd(const Network& net, const Vector& x, double y, const AttackConfig& cfg, std::uint64_t seed,
           const PgdObserver& observer) {
    cfg.validate();
    Vector current = x;
    if (cfg.random_start && cfg.epsilon > 0.0) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> offset(-cfg.epsilon, cfg.epsilon);
        for (Eigen::Index i = 0; i < current.size(); ++i) {
            current(i) += offset(rng);
        }
        current = project_linf(current, x, cfg.epsilon, cfg.input_bounds);
    }
    if (observer) {
        observer(0, current);
    }
    for (int t = 1; t <= cfg.steps; ++t) {
        current = ascent_step(net, current, x, y, cfg.step_size, cfg.epsilon, cfg.input_bounds);
        if (observer) {
            observer(t, current);
        }
    }
    return current;
}

int sign_readout(double f) { return f > 0.0 ? 1 : (f < 0.0 ? -1 : 0); }

namespace {

void check_labelled(const Network& net, const Matrix& inputs, std::span<const double> labels) {
    if (inputs.rows() == 0) {
        throw DomainError("dataset is empty");
    }
    if (static_cast<std::size_t>(inputs.rows()) != labels.size() ||
        static_cast<std::size_t>(inputs.cols()) != net.input_dim()) {
        throw ShapeError("dataset shape does not match the network");
    }
}

bool correct(double f, double label) { return sign_readout(f) == static_cast<int>(label); }

}  // namespace

double clean_accuracy(const Network& net, const Matrix& inputs, std::span<const double> labels) {
    check_labelled(net, inputs, labels);
    std::size_t hits = 0;
    for (Eigen::Index n = 0; n < inputs.rows(); ++n) {
        const Vector x = inputs.row(n).transpose();
        hits += correct(predict(net, as_span(x)), labels[static_cast<std::size_t>(n)]) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(inputs.rows());
}

double robust_accuracy(const Network& net, const Matrix& inputs, std::span<const double> labels,
                       const AttackConfig& cfg, std::uint64_t seed) {
    check_labelled(net, inputs, labels);
    cfg.validate();
    std::size_t hits = 0;
    for (Eigen::Index n = 0; n < inputs.rows(); ++n) {
        const double y = labels[static_cast<std::size_t>(n)];
        const Vector x = inputs.row(n).transpose();
        const double f_clean = predict(net, as_span(x));
        if (!correct(f_clean, y)) {
            continue;
        }
        const Vector adv = pgd(net, x, y, cfg, seed ^ static_cast<std::uint64_t>(n));
        hits += correct(predict(net, as_span(adv)), y) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(inputs.rows());
}

}  // namespace rctaf
