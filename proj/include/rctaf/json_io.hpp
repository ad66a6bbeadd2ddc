#pragma once

// JSON encodings of the library's value types:
//   ActivationSpec   {"kind": "rct_af", "alpha": 14.0, "beta": 1} | {"kind": "gelu"} | ...
//   Network          {"widths": [...], "activation": {...}, "weights": [[...]...], "biases": [[...]...]}
//                    (each weight matrix flattened row-major)
//   AttackConfig     {"epsilon": 0.3, "step_size": 0.03, "steps": 20, "random_start": true}
//   HessianDiagReport{"diag", "gauss_newton_part", "residual_part", "residual", "normalized_norm"}
//   SweepConfig      see sweep_config_from_json for the accepted fields.

#include "rctaf/activation.hpp"
#include "rctaf/attacks.hpp"
#include "rctaf/hessian.hpp"
#include "rctaf/network.hpp"
#include "rctaf/sweep.hpp"
#include "rctaf/train.hpp"

#include <json.hpp>

#include <filesystem>

namespace rctaf {

nlohmann::json to_json(const ActivationSpec& spec);
ActivationSpec activation_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AttackConfig& cfg);
AttackConfig attack_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& cfg);
/// Fields not present keep their values from `base`.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

nlohmann::json to_json(const DatasetGenerator& gen);
DatasetGenerator dataset_generator_from_json(const nlohmann::json& j);

nlohmann::json to_json(const HessianDiagReport& report);

nlohmann::json to_json(const SweepConfig& cfg);
/// Missing fields fall back to default_sweep_config().
SweepConfig sweep_config_from_json(const nlohmann::json& j);

/// Reads and parses a JSON file; IoError when unreadable, FormatError when malformed.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace rctaf
