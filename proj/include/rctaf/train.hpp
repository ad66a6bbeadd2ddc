#pragma once

#include "rctaf/attacks.hpp"
#include "rctaf/dataset.hpp"
#include "rctaf/network.hpp"

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace rctaf {

struct StandardTraining {
    bool operator==(const StandardTraining&) const = default;
};

/// Every mini-batch is replaced by PGD perturbations against the current
/// network before the gradient step.
struct PgdAdversarialTraining {
    AttackConfig attack;
    bool operator==(const PgdAdversarialTraining&) const = default;
};

using TrainMode = std::variant<StandardTraining, PgdAdversarialTraining>;

struct TrainConfig {
    int epochs = 200;
    std::size_t batch_size = 32;
    double learning_rate = 0.05;
    double momentum = 0.9;
    TrainMode mode = StandardTraining{};
    std::uint64_t seed = 42;
    /// When set, robust test accuracy is recorded every `eval_every` epochs
    /// and at the last epoch; NaN elsewhere.
    std::optional<AttackConfig> eval_attack;
    int eval_every = 1;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double test_clean_accuracy = 0.0;
    double test_robust_accuracy = 0.0;  // NaN when not evaluated

    bool operator==(const EpochRecord&) const = default;
};

struct TrainResult {
    Network network;
    std::vector<EpochRecord> history;
};

/// SGD with momentum on the mean of 1/2 (f - y)^2 over each mini-batch.
/// Throws TrainingDiverged when the loss or the parameters become non-finite.
TrainResult train_network(Network net, const Dataset& data, const TrainConfig& cfg);

/// SplitMix64 finaliser used to derive per-epoch / per-sample seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace rctaf
