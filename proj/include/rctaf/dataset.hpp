#pragma once

#include "rctaf/network.hpp"

#include <cstdint>
#include <variant>
#include <vector>

namespace rctaf {

/// Two interleaving half circles: upper arc (cos t, sin t) labelled +1 and
/// lower arc (1 - cos t, 0.5 - sin t) labelled -1, t in [0, pi], plus
/// isotropic Gaussian noise.
struct TwoMoons {
    double noise = 0.1;
    bool operator==(const TwoMoons&) const = default;
};

/// Inner circle (radius `ratio`) against outer unit circle.
struct Circles {
    double noise = 0.05;
    double ratio = 0.5;
    bool operator==(const Circles&) const = default;
};

/// Two isotropic unit-variance Gaussians whose centres are `separation` apart.
struct GaussianBlobs {
    double separation = 6.0;
    bool operator==(const GaussianBlobs&) const = default;
};

using DatasetGenerator = std::variant<TwoMoons, Circles, GaussianBlobs>;

/// Labelled points in rows; labels are +-1.
struct Split {
    Matrix inputs;
    std::vector<double> labels;

    std::size_t size() const noexcept { return labels.size(); }
};

struct Dataset {
    DatasetGenerator generator;
    std::uint64_t seed = 0;
    Split train;
    Split test;
};

/// Deterministic in (generator, n, seed). Classes alternate, so counts differ by
/// at most one; an 80/20 train/test split is taken after a seeded shuffle.
Dataset make_dataset(const DatasetGenerator& generator, std::size_t n, std::uint64_t seed);

}  // namespace rctaf
