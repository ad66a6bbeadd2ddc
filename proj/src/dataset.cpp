#include "rctaf/dataset.hpp"

#include "rctaf/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace rctaf {
namespace {

struct Point {
    double x;
    double y;
    double label;
};

// Sample k of n on class `positive`; uniform parameter along each arc.
Point moons_point(const TwoMoons& g, std::size_t k, std::size_t per_class, bool positive,
                  std::mt19937_64& rng) {
    std::normal_distribution<double> jitter(0.0, 1.0);
    const double t = per_class > 1 ? std::numbers::pi * static_cast<double>(k) / static_cast<double>(per_class - 1)
                                   : 0.0;
    double px = positive ? std::cos(t) : 1.0 - std::cos(t);
    double py = positive ? std::sin(t) : 0.5 - std::sin(t);
    if (g.noise > 0.0) {
        px += g.noise * jitter(rng);
        py += g.noise * jitter(rng);
    }
    return {px, py, positive ? 1.0 : -1.0};
}

Point circles_point(const Circles& g, bool positive, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> jitter(0.0, 1.0);
    const double r = positive ? g.ratio : 1.0;
    const double t = angle(rng);
    double px = r * std::cos(t);
    double py = r * std::sin(t);
    if (g.noise > 0.0) {
        px += g.noise * jitter(rng);
        py += g.noise * jitter(rng);
    }
    return {px, py, positive ? 1.0 : -1.0};
}

Point blobs_point(const GaussianBlobs& g, bool positive, std::mt19937_64& rng) {
    std::normal_distribution<double> unit(0.0, 1.0);
    const double cx = (positive ? 0.5 : -0.5) * g.separation;
    const double px = cx + unit(rng);
    const double py = unit(rng);
    return {px, py, positive ? 1.0 : -1.0};
}

void validate(const DatasetGenerator& generator) {
    if (const auto* m = std::get_if<TwoMoons>(&generator); m && !(m->noise >= 0.0)) {
        throw ConfigError("two_moons noise must be >= 0");
    }
    if (const auto* c = std::get_if<Circles>(&generator); c && (!(c->noise >= 0.0) || !(c->ratio > 0.0))) {
        throw ConfigError("circles needs noise >= 0 and ratio > 0");
    }
    if (const auto* b = std::get_if<GaussianBlobs>(&generator); b && !(b->separation >= 0.0)) {
        throw ConfigError("gaussian_blobs separation must be >= 0");
    }
}

Split gather(const std::vector<Point>& points, std::span<const std::size_t> order) {
    Split s;
    s.inputs.resize(static_cast<Eigen::Index>(order.size()), 2);
    s.labels.reserve(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        const Point& p = points[order[r]];
        s.inputs(static_cast<Eigen::Index>(r), 0) = p.x;
        s.inputs(static_cast<Eigen::Index>(r), 1) = p.y;
        s.labels.push_back(p.label);
    }
    return s;
}

}  // namespace

Dataset make_dataset(const DatasetGenerator& generator, std::size_t n, std::uint64_t seed) {
    if (n < 4) {
        throw ConfigError(fmt::format("dataset needs n >= 4, got {}", n));
    }
    validate(generator);
    std::mt19937_64 rng(seed);
    const std::size_t positives = (n + 1) / 2;
    const std::size_t negatives = n / 2;

    std::vector<Point> points;
    points.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const bool positive = k % 2 == 0;
        const std::size_t index = k / 2;
        points.push_back(std::visit(
            [&](const auto& g) -> Point {
                using G = std::decay_t<decltype(g)>;
                if constexpr (std::is_same_v<G, TwoMoons>) {
                    return moons_point(g, index, positive ? positives : negatives, positive, rng);
                } else if constexpr (std::is_same_v<G, Circles>) {
                    return circles_point(g, positive, rng);
                } else {
                    return blobs_point(g, positive, rng);
                }
            },
            generator));
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_train = (n * 4) / 5;

    Dataset ds{generator, seed, {}, {}};
    ds.train = gather(points, std::span(order).first(n_train));
    ds.test = gather(points, std::span(order).subspan(n_train));
    return ds;
}

}  // namespace rctaf
