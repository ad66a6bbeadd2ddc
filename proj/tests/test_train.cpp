#include "rctaf/dataset.hpp"
#include "rctaf/errors.hpp"
#include "rctaf/train.hpp"

#include <gtest/gtest.h>

#include <Eigen/QR>

#include <cmath>
#include <numbers>

using namespace rctaf;

namespace {

bool same_history(const std::vector<EpochRecord>& a, const std::vector<EpochRecord>& b) {
    auto eq = [](double u, double v) { return u == v || (std::isnan(u) && std::isnan(v)); };
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].epoch != b[i].epoch || !eq(a[i].train_loss, b[i].train_loss) ||
            !eq(a[i].test_clean_accuracy, b[i].test_clean_accuracy) ||
            !eq(a[i].test_robust_accuracy, b[i].test_robust_accuracy)) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST(Dataset, DeterministicAndSplit) {
    const Dataset a = make_dataset(TwoMoons{0.1}, 400, 11);
    const Dataset b = make_dataset(TwoMoons{0.1}, 400, 11);
    EXPECT_EQ(a.train.inputs, b.train.inputs);
    EXPECT_EQ(a.test.labels, b.test.labels);
    EXPECT_EQ(a.train.size(), 320U);
    EXPECT_EQ(a.test.size(), 80U);
    const Dataset c = make_dataset(TwoMoons{0.1}, 400, 12);
    EXPECT_NE(a.train.inputs, c.train.inputs);

    double positives = 0.0;
    for (const Split* s : {&a.train, &a.test}) {
        for (double y : s->labels) {
            EXPECT_TRUE(y == 1.0 || y == -1.0);
            positives += y > 0 ? 1.0 : 0.0;
        }
    }
    EXPECT_EQ(positives, 200.0);
    EXPECT_THROW(make_dataset(Circles{}, 3, 0), ConfigError);
}

TEST(Dataset, NoiselessMoonsLieOnArcs) {
    const Dataset d = make_dataset(TwoMoons{0.0}, 101, 5);
    for (const Split* s : {&d.train, &d.test}) {
        for (Eigen::Index n = 0; n < s->inputs.rows(); ++n) {
            const double x = s->inputs(n, 0);
            const double y = s->inputs(n, 1);
            if (s->labels[static_cast<std::size_t>(n)] > 0) {
                EXPECT_NEAR(std::hypot(x, y), 1.0, 1e-12);
                EXPECT_GE(y, -1e-12);
            } else {
                EXPECT_NEAR(std::hypot(1.0 - x, 0.5 - y), 1.0, 1e-12);
                EXPECT_LE(y, 0.5 + 1e-12);
            }
        }
    }
}

TEST(Dataset, NoiselessCirclesHaveTwoRadii) {
    const Dataset d = make_dataset(Circles{0.0, 0.5}, 60, 5);
    for (Eigen::Index n = 0; n < d.train.inputs.rows(); ++n) {
        const double r = d.train.inputs.row(n).norm();
        EXPECT_NEAR(r, d.train.labels[static_cast<std::size_t>(n)] > 0 ? 0.5 : 1.0, 1e-12);
    }
}

TEST(Dataset, BlobsAreLinearlySeparableByLeastSquaresProbe) {
    const Dataset d = make_dataset(GaussianBlobs{6.0}, 1000, 2);
    auto design = [](const Matrix& x) {
        Eigen::MatrixXd a(x.rows(), x.cols() + 1);
        a << x, Eigen::VectorXd::Ones(x.rows());
        return a;
    };
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(d.train.labels.data(),
                                                                static_cast<Eigen::Index>(d.train.size()));
    const Eigen::VectorXd w = design(d.train.inputs).colPivHouseholderQr().solve(y);
    const Eigen::VectorXd f = design(d.test.inputs) * w;
    std::size_t hits = 0;
    for (Eigen::Index n = 0; n < f.size(); ++n) {
        hits += (f(n) > 0) == (d.test.labels[static_cast<std::size_t>(n)] > 0) ? 1 : 0;
    }
    EXPECT_GE(static_cast<double>(hits) / static_cast<double>(f.size()), 0.99);
}

TEST(TrainConfig, Validation) {
    TrainConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.epochs = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.batch_size = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.momentum = 1.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.learning_rate = -1.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Train, ZeroLearningRateLeavesNetworkUnchanged) {
    const Dataset d = make_dataset(TwoMoons{0.1}, 100, 1);
    const Network init = init_network({2, 8, 1}, RctAf{4, 1}, 1);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.learning_rate = 0.0;
    EXPECT_EQ(train_network(init, d, cfg).network, init);
    cfg.mode = PgdAdversarialTraining{AttackConfig{}};
    EXPECT_EQ(train_network(init, d, cfg).network, init);
}

TEST(Train, BlobsReachHighAccuracy) {
    const Dataset d = make_dataset(GaussianBlobs{6.0}, 400, 4);
    TrainConfig cfg;
    cfg.epochs = 200;
    const TrainResult r = train_network(init_network({2, 16, 1}, RctAf{14, 1}, 4), d, cfg);
    ASSERT_EQ(r.history.size(), 200U);
    EXPECT_GE(r.history.back().test_clean_accuracy, 0.98);
    EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
    EXPECT_EQ(r.history.front().epoch, 1);
    EXPECT_TRUE(std::isnan(r.history.back().test_robust_accuracy));
}

TEST(Train, ZeroBudgetAdversarialEqualsStandard) {
    const Dataset d = make_dataset(TwoMoons{0.1}, 120, 6);
    const Network init = init_network({2, 8, 8, 1}, RctAf{7, 2}, 6);
    TrainConfig standard;
    standard.epochs = 10;
    standard.eval_attack = AttackConfig{0.1, 0.02, 5, true, std::nullopt};
    TrainConfig adversarial = standard;
    adversarial.mode = PgdAdversarialTraining{AttackConfig{0.0, 0.01, 5, true, std::nullopt}};
    const TrainResult a = train_network(init, d, standard);
    const TrainResult b = train_network(init, d, adversarial);
    EXPECT_EQ(a.network, b.network);
    EXPECT_TRUE(same_history(a.history, b.history));
}

TEST(Train, DeterministicGivenSeeds) {
    const Dataset d = make_dataset(TwoMoons{0.1}, 120, 7);
    const Network init = init_network({2, 8, 8, 1}, RctAf{14, 1}, 7);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.mode = PgdAdversarialTraining{AttackConfig{0.3, 0.075, 4, true, std::nullopt}};
    cfg.eval_attack = AttackConfig{};
    cfg.eval_every = 2;
    const TrainResult a = train_network(init, d, cfg);
    const TrainResult b = train_network(init, d, cfg);
    EXPECT_EQ(a.network, b.network);
    EXPECT_TRUE(same_history(a.history, b.history));
    EXPECT_TRUE(std::isnan(a.history[0].test_robust_accuracy));
    EXPECT_FALSE(std::isnan(a.history[1].test_robust_accuracy));
    EXPECT_FALSE(std::isnan(a.history[3].test_robust_accuracy));
    for (const auto& e : a.history) {
        if (!std::isnan(e.test_robust_accuracy)) {
            EXPECT_LE(e.test_robust_accuracy, e.test_clean_accuracy);
        }
    }
    cfg.seed = 8;
    EXPECT_NE(train_network(init, d, cfg).network, a.network);
}

TEST(Train, DivergenceCarriesEpoch) {
    const Dataset d = make_dataset(TwoMoons{0.1}, 100, 1);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.learning_rate = 1e6;
    try {
        train_network(init_network({2, 8, 1}, RctAf{4, 1}, 1), d, cfg);
        FAIL() << "expected divergence";
    } catch (const TrainingDiverged& e) {
        EXPECT_GE(e.epoch(), 1);
        EXPECT_LE(e.epoch(), 50);
    }
}

TEST(MixSeed, DistinctAndStable) {
    EXPECT_EQ(mix_seed(1, 2), mix_seed(1, 2));
    EXPECT_NE(mix_seed(1, 2), mix_seed(2, 1));
    EXPECT_NE(mix_seed(0, 0), mix_seed(0, 1));
}
