#include "rctaf/train.hpp"

#include "rctaf/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace rctaf {

void TrainConfig::validate() const {
    if (epochs < 1) {
        throw ConfigError(fmt::format("epochs must be >= 1, got {}", epochs));
    }
    if (batch_size < 1) {
        throw ConfigError("batch_size must be >= 1");
    }
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError(fmt::format("learning_rate must be finite and >= 0, got {}", learning_rate));
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw ConfigError(fmt::format("momentum must lie in [0, 1), got {}", momentum));
    }
    if (eval_every < 1) {
        throw ConfigError("eval_every must be >= 1");
    }
    if (const auto* adv = std::get_if<PgdAdversarialTraining>(&mode)) {
        adv->attack.validate();
    }
    if (eval_attack) {
        eval_attack->validate();
    }
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

TrainResult train_network(Network net, const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    const Split& train = data.train;
    if (train.size() == 0) {
        throw DomainError("training split is empty");
    }
    if (static_cast<std::size_t>(train.inputs.cols()) != net.input_dim()) {
        throw ShapeError("dataset dimension does not match the network");
    }
    const auto* adversarial = std::get_if<PgdAdversarialTraining>(&cfg.mode);

    std::mt19937_64 shuffle_rng(cfg.seed);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    Vector theta = net.parameters();
    Vector velocity = Vector::Zero(theta.size());
    Vector grad(theta.size());

    TrainResult result{net, {}};
    result.history.reserve(static_cast<std::size_t>(cfg.epochs));

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        const std::uint64_t epoch_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch));
        double loss_sum = 0.0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            grad.setZero();
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t n = order[b];
                const double y = train.labels[n];
                Vector x = train.inputs.row(static_cast<Eigen::Index>(n)).transpose();
                if (adversarial) {
                    x = pgd(net, x, y, adversarial->attack, mix_seed(epoch_seed, n));
                }
                const ForwardTrace trace = forward(net, x);
                const double r = trace.f - y;
                loss_sum += 0.5 * r * r;
                grad += grad_params(net, trace, backprop_deltas(net, trace), y);
            }
            grad /= static_cast<double>(stop - start);
            velocity = cfg.momentum * velocity + grad;
            theta -= cfg.learning_rate * velocity;
            if (!theta.allFinite()) {
                throw TrainingDiverged(epoch, fmt::format("parameters became non-finite in epoch {}", epoch));
            }
            net.set_parameters(theta);
        }

        const double mean_loss_epoch = loss_sum / static_cast<double>(order.size());
        if (!std::isfinite(mean_loss_epoch)) {
            throw TrainingDiverged(epoch, fmt::format("training loss became non-finite in epoch {}", epoch));
        }

        EpochRecord rec{epoch, mean_loss_epoch, std::numeric_limits<double>::quiet_NaN(),
                        std::numeric_limits<double>::quiet_NaN()};
        if (data.test.size() > 0) {
            rec.test_clean_accuracy = clean_accuracy(net, data.test.inputs, data.test.labels);
            if (cfg.eval_attack && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs)) {
                rec.test_robust_accuracy =
                    robust_accuracy(net, data.test.inputs, data.test.labels, *cfg.eval_attack, epoch_seed);
            }
        }
        result.history.push_back(rec);
    }
    result.network = std::move(net);
    return result;
}

}  // namespace rctaf
