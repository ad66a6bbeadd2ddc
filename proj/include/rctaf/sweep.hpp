#pragma once

#include "rctaf/attacks.hpp"
#include "rctaf/dataset.hpp"
#include "rctaf/train.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rctaf {

/// Grid of (beta, curvature, seed) cells. Each cell trains one network
/// adversarially (clean / robust accuracy) and one standard-trained twin from
/// the same initialisation (Hessian-diagonal norm and clean accuracy).
struct SweepConfig {
    std::vector<double> curvature_targets{0.5, 1, 2, 4, 7, 10, 15, 20, 30, 50};
    std::vector<int> betas{0, 1, 2};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::vector<std::size_t> widths{2, 16, 16, 1};
    InitScheme init = InitScheme::he;

    DatasetGenerator dataset = TwoMoons{0.1};
    std::size_t dataset_size = 400;

    /// Optimiser settings shared by both networks of a cell; the mode and the
    /// seed are overwritten per cell.
    TrainConfig train;
    /// Attack used inside adversarial training.
    AttackConfig train_attack{0.3, 0.075, 10, true, std::nullopt};
    /// Attack used to measure robust accuracy on the test split.
    AttackConfig eval_attack{0.3, 0.03, 20, true, std::nullopt};

    void validate() const;
};

/// Defaults used by the CLI and the acceptance suite.
SweepConfig default_sweep_config();

struct CellKey {
    int beta = 0;
    double curvature = 0.0;
    std::uint64_t seed = 0;

    auto operator<=>(const CellKey&) const = default;
};

struct SweepResult {
    CellKey key;
    double alpha = 0.0;
    double clean_accuracy = 0.0;       // adversarially trained network, test split
    double robust_accuracy = 0.0;      // adversarially trained network, test split
    double diag_norm = 0.0;            // standard twin, training split, end of training
    double wall_time_s = 0.0;
    std::string status = "ok";         // ok | diverged
    double std_clean_accuracy = 0.0;   // standard twin, test split
};

/// Header written as the first line of every results CSV.
inline constexpr const char* kSweepCsvHeader =
    "beta,curvature,alpha,seed,clean_acc,robust_acc,diag_norm,wall_time_s,status,std_clean_acc";

/// Every (beta, curvature, seed) triple, betas outermost.
std::vector<CellKey> sweep_cells(const SweepConfig& cfg);

/// Runs a single cell. Divergence of either network is reported through
/// `status` ("diverged") with the affected metrics set to NaN.
SweepResult run_cell(const SweepConfig& cfg, const CellKey& key);

struct SweepOutcome {
    std::vector<SweepResult> results;  // all cells, sorted by key
    std::size_t cells_run = 0;
};

using SweepProgress = std::function<void(const SweepResult&)>;

/// Runs every cell not already present in `csv_path` (when given), appending
/// one row per finished cell. `jobs` worker threads (0 = hardware concurrency).
SweepOutcome run_sweep(const SweepConfig& cfg, const std::optional<std::filesystem::path>& csv_path,
                       unsigned jobs = 1, const SweepProgress& progress = {});

std::string format_csv_row(const SweepResult& r);

/// Parses a results CSV. Throws FormatError naming any missing column.
std::vector<SweepResult> read_sweep_csv(const std::filesystem::path& path);
std::vector<SweepResult> parse_sweep_csv(const std::string& text);

}  // namespace rctaf
