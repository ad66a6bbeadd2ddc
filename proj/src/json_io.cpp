#include "rctaf/json_io.hpp"

#include "rctaf/errors.hpp"

#include <fmt/format.h>

#include <fstream>

namespace rctaf {

using nlohmann::json;

namespace {

template <class T>
T field(const json& j, const char* name) {
    if (!j.contains(name)) {
        throw FormatError(fmt::format("missing field \"{}\"", name));
    }
    try {
        return j.at(name).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("field \"{}\": {}", name, e.what()));
    }
}

template <class T>
T field_or(const json& j, const char* name, T fallback) {
    return j.contains(name) ? field<T>(j, name) : fallback;
}

}  // namespace

json to_json(const ActivationSpec& spec) {
    return std::visit(
        [](const auto& k) -> json {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, RctAf>) {
                return {{"kind", "rct_af"}, {"alpha", k.alpha}, {"beta", k.beta}};
            } else if constexpr (std::is_same_v<K, Relu>) {
                return {{"kind", "relu"}};
            } else if constexpr (std::is_same_v<K, LeakyRelu>) {
                return {{"kind", "leaky_relu"}, {"slope", k.slope}};
            } else if constexpr (std::is_same_v<K, Elu>) {
                return {{"kind", "elu"}};
            } else if constexpr (std::is_same_v<K, Gelu>) {
                return {{"kind", "gelu"}};
            } else if constexpr (std::is_same_v<K, Swish>) {
                return {{"kind", "swish"}};
            } else if constexpr (std::is_same_v<K, Mish>) {
                return {{"kind", "mish"}};
            } else {
                return {{"kind", "softplus"}};
            }
        },
        spec.kind());
}

ActivationSpec activation_from_json(const json& j) {
    if (!j.is_object()) {
        throw FormatError("activation must be a JSON object");
    }
    const auto kind = field<std::string>(j, "kind");
    if (kind == "rct_af") {
        return RctAf{field<double>(j, "alpha"), field<int>(j, "beta")};
    }
    if (kind == "relu") {
        return Relu{};
    }
    if (kind == "leaky_relu") {
        return LeakyRelu{field_or<double>(j, "slope", 0.01)};
    }
    if (kind == "elu") {
        return Elu{};
    }
    if (kind == "gelu") {
        return Gelu{};
    }
    if (kind == "swish") {
        return Swish{};
    }
    if (kind == "mish") {
        return Mish{};
    }
    if (kind == "softplus") {
        return Softplus{};
    }
    throw FormatError(fmt::format("unknown activation kind \"{}\"", kind));
}

json to_json(const Network& net) {
    json weights = json::array();
    json biases = json::array();
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const Matrix& w = net.weights(l);
        weights.push_back(std::vector<double>(w.data(), w.data() + w.size()));
        const Vector& b = net.biases(l);
        biases.push_back(std::vector<double>(b.data(), b.data() + b.size()));
    }
    return {{"widths", net.widths()},
            {"activation", to_json(net.activation())},
            {"weights", std::move(weights)},
            {"biases", std::move(biases)}};
}

Network network_from_json(const json& j) {
    const auto widths = field<std::vector<std::size_t>>(j, "widths");
    const ActivationSpec act = activation_from_json(field<json>(j, "activation"));
    const auto weights = field<std::vector<std::vector<double>>>(j, "weights");
    const auto biases = field<std::vector<std::vector<double>>>(j, "biases");
    if (widths.size() < 2 || weights.size() != widths.size() - 1 || biases.size() != widths.size() - 1) {
        throw FormatError("network JSON: weights/biases do not match widths");
    }
    std::vector<Matrix> ws;
    std::vector<Vector> bs;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const auto rows = static_cast<Eigen::Index>(widths[l + 1]);
        const auto cols = static_cast<Eigen::Index>(widths[l]);
        if (weights[l].size() != widths[l + 1] * widths[l] || biases[l].size() != widths[l + 1]) {
            throw FormatError(fmt::format("network JSON: layer {} has the wrong number of entries", l + 1));
        }
        ws.push_back(Eigen::Map<const Matrix>(weights[l].data(), rows, cols));
        bs.push_back(Eigen::Map<const Vector>(biases[l].data(), rows));
    }
    return Network(widths, act, std::move(ws), std::move(bs));
}

json to_json(const AttackConfig& cfg) {
    json j = {{"epsilon", cfg.epsilon},
              {"step_size", cfg.step_size},
              {"steps", cfg.steps},
              {"random_start", cfg.random_start}};
    if (cfg.input_bounds) {
        j["input_bounds"] = {cfg.input_bounds->first, cfg.input_bounds->second};
    }
    return j;
}

AttackConfig attack_config_from_json(const json& j) {
    AttackConfig cfg;
    cfg.epsilon = field_or<double>(j, "epsilon", cfg.epsilon);
    cfg.step_size = field_or<double>(j, "step_size", cfg.step_size);
    cfg.steps = field_or<int>(j, "steps", cfg.steps);
    cfg.random_start = field_or<bool>(j, "random_start", cfg.random_start);
    if (j.contains("input_bounds")) {
        const auto b = field<std::vector<double>>(j, "input_bounds");
        if (b.size() != 2) {
            throw FormatError("input_bounds must be [low, high]");
        }
        cfg.input_bounds = std::pair{b[0], b[1]};
    }
    cfg.validate();
    return cfg;
}

json to_json(const TrainConfig& cfg) {
    json j = {{"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate},
              {"momentum", cfg.momentum},
              {"seed", cfg.seed},
              {"eval_every", cfg.eval_every}};
    if (const auto* adv = std::get_if<PgdAdversarialTraining>(&cfg.mode)) {
        j["mode"] = {{"kind", "pgd_adversarial"}, {"attack", to_json(adv->attack)}};
    } else {
        j["mode"] = {{"kind", "standard"}};
    }
    if (cfg.eval_attack) {
        j["eval_attack"] = to_json(*cfg.eval_attack);
    }
    return j;
}

TrainConfig train_config_from_json(const json& j, TrainConfig base) {
    base.epochs = field_or<int>(j, "epochs", base.epochs);
    base.batch_size = field_or<std::size_t>(j, "batch_size", base.batch_size);
    base.learning_rate = field_or<double>(j, "learning_rate", base.learning_rate);
    base.momentum = field_or<double>(j, "momentum", base.momentum);
    base.seed = field_or<std::uint64_t>(j, "seed", base.seed);
    base.eval_every = field_or<int>(j, "eval_every", base.eval_every);
    if (j.contains("mode")) {
        const json& m = j.at("mode");
        const auto kind = field<std::string>(m, "kind");
        if (kind == "standard") {
            base.mode = StandardTraining{};
        } else if (kind == "pgd_adversarial") {
            base.mode = PgdAdversarialTraining{attack_config_from_json(field<json>(m, "attack"))};
        } else {
            throw FormatError(fmt::format("unknown training mode \"{}\"", kind));
        }
    }
    if (j.contains("eval_attack")) {
        base.eval_attack = attack_config_from_json(j.at("eval_attack"));
    }
    base.validate();
    return base;
}

json to_json(const DatasetGenerator& gen) {
    return std::visit(
        [](const auto& g) -> json {
            using G = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<G, TwoMoons>) {
                return {{"kind", "two_moons"}, {"noise", g.noise}};
            } else if constexpr (std::is_same_v<G, Circles>) {
                return {{"kind", "circles"}, {"noise", g.noise}, {"ratio", g.ratio}};
            } else {
                return {{"kind", "gaussian_blobs"}, {"separation", g.separation}};
            }
        },
        gen);
}

DatasetGenerator dataset_generator_from_json(const json& j) {
    const auto kind = field<std::string>(j, "kind");
    if (kind == "two_moons") {
        return TwoMoons{field_or<double>(j, "noise", TwoMoons{}.noise)};
    }
    if (kind == "circles") {
        return Circles{field_or<double>(j, "noise", Circles{}.noise), field_or<double>(j, "ratio", Circles{}.ratio)};
    }
    if (kind == "gaussian_blobs") {
        return GaussianBlobs{field_or<double>(j, "separation", GaussianBlobs{}.separation)};
    }
    throw FormatError(fmt::format("unknown dataset kind \"{}\"", kind));
}

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

json to_json(const HessianDiagReport& report) {
    return {{"diag", to_std(report.diag)},
            {"gauss_newton_part", to_std(report.gauss_newton_part)},
            {"residual_part", to_std(report.residual_part)},
            {"residual", report.residual},
            {"normalized_norm", report.normalized_norm}};
}

json to_json(const SweepConfig& cfg) {
    return {{"curvature_targets", cfg.curvature_targets},
            {"betas", cfg.betas},
            {"seeds", cfg.seeds},
            {"widths", cfg.widths},
            {"init", cfg.init == InitScheme::he ? "he" : "xavier"},
            {"dataset", to_json(cfg.dataset)},
            {"dataset_size", cfg.dataset_size},
            {"train", to_json(cfg.train)},
            {"train_attack", to_json(cfg.train_attack)},
            {"eval_attack", to_json(cfg.eval_attack)}};
}

SweepConfig sweep_config_from_json(const json& j) {
    if (!j.is_object()) {
        throw FormatError("sweep config must be a JSON object");
    }
    SweepConfig cfg = default_sweep_config();
    cfg.curvature_targets = field_or(j, "curvature_targets", cfg.curvature_targets);
    cfg.betas = field_or(j, "betas", cfg.betas);
    cfg.seeds = field_or(j, "seeds", cfg.seeds);
    cfg.widths = field_or(j, "widths", cfg.widths);
    if (j.contains("init")) {
        const auto init = field<std::string>(j, "init");
        if (init != "he" && init != "xavier") {
            throw FormatError(fmt::format("unknown init scheme \"{}\"", init));
        }
        cfg.init = init == "he" ? InitScheme::he : InitScheme::xavier;
    }
    if (j.contains("dataset")) {
        cfg.dataset = dataset_generator_from_json(j.at("dataset"));
    }
    cfg.dataset_size = field_or(j, "dataset_size", cfg.dataset_size);
    if (j.contains("train")) {
        cfg.train = train_config_from_json(j.at("train"), cfg.train);
    }
    if (j.contains("train_attack")) {
        cfg.train_attack = attack_config_from_json(j.at("train_attack"));
    }
    if (j.contains("eval_attack")) {
        cfg.eval_attack = attack_config_from_json(j.at("eval_attack"));
    }
    cfg.validate();
    return cfg;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError(fmt::format("cannot open {}", path.string()));
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

}  // namespace rctaf
