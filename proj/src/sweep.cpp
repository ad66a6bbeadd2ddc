#include "rctaf/sweep.hpp"

#include "rctaf/errors.hpp"
#include "rctaf/hessian.hpp"
#include "rctaf/json_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace rctaf {

void SweepConfig::validate() const {
    if (curvature_targets.empty() || betas.empty() || seeds.empty()) {
        throw ConfigError("sweep needs at least one curvature target, beta and seed");
    }
    for (std::size_t i = 0; i < curvature_targets.size(); ++i) {
        if (!(curvature_targets[i] > 0.0)) {
            throw ConfigError("curvature targets must be positive");
        }
        if (i > 0 && !(curvature_targets[i] > curvature_targets[i - 1])) {
            throw ConfigError("curvature targets must be sorted ascending without repeats");
        }
    }
    for (int b : betas) {
        if (b < 0 || b > 2) {
            throw ConfigError(fmt::format("beta must be 0, 1 or 2, got {}", b));
        }
    }
    if (std::set<int>(betas.begin(), betas.end()).size() != betas.size() ||
        std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
        throw ConfigError("betas and seeds must not repeat");
    }
    if (widths.size() < 2 || widths.back() != 1) {
        throw ConfigError("sweep widths must end in a scalar output");
    }
    if (dataset_size < 4) {
        throw ConfigError("dataset_size must be >= 4");
    }
    train.validate();
    train_attack.validate();
    eval_attack.validate();
}

SweepConfig default_sweep_config() {
    SweepConfig cfg;
    cfg.train.epochs = 50;
    cfg.train.batch_size = 32;
    cfg.train.learning_rate = 0.02;
    cfg.train.momentum = 0.9;
    return cfg;
}

std::vector<CellKey> sweep_cells(const SweepConfig& cfg) {
    std::vector<CellKey> cells;
    for (int beta : cfg.betas) {
        for (double c : cfg.curvature_targets) {
            for (std::uint64_t seed : cfg.seeds) {
                cells.push_back({beta, c, seed});
            }
        }
    }
    return cells;
}

SweepResult run_cell(const SweepConfig& cfg, const CellKey& key) {
    const auto start = std::chrono::steady_clock::now();
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    SweepResult r;
    r.key = key;
    r.alpha = alpha_for_curvature(key.beta, key.curvature);

    const Dataset data = make_dataset(cfg.dataset, cfg.dataset_size, key.seed);
    const Network init = init_network(cfg.widths, RctAf{r.alpha, key.beta}, key.seed, cfg.init);

    TrainConfig adversarial = cfg.train;
    adversarial.mode = PgdAdversarialTraining{cfg.train_attack};
    adversarial.seed = key.seed;
    adversarial.eval_attack.reset();
    TrainConfig standard = cfg.train;
    standard.mode = StandardTraining{};
    standard.seed = key.seed;
    standard.eval_attack.reset();

    try {
        const Network net = train_network(init, data, adversarial).network;
        r.clean_accuracy = clean_accuracy(net, data.test.inputs, data.test.labels);
        r.robust_accuracy = robust_accuracy(net, data.test.inputs, data.test.labels, cfg.eval_attack, key.seed);
    } catch (const TrainingDiverged&) {
        r.clean_accuracy = nan;
        r.robust_accuracy = nan;
        r.status = "diverged";
    }
    try {
        const Network twin = train_network(init, data, standard).network;
        r.diag_norm = dataset_diag_norm(twin, data.train.inputs, data.train.labels);
        r.std_clean_accuracy = clean_accuracy(twin, data.test.inputs, data.test.labels);
        if (!std::isfinite(r.diag_norm)) {
            r.diag_norm = nan;
            r.status = "diverged";
        }
    } catch (const TrainingDiverged&) {
        r.diag_norm = nan;
        r.std_clean_accuracy = nan;
        r.status = "diverged";
    }
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::string format_csv_row(const SweepResult& r) {
    return fmt::format("{},{},{},{},{},{},{},{:.3f},{},{}", r.key.beta, r.key.curvature, r.alpha, r.key.seed,
                       r.clean_accuracy, r.robust_accuracy, r.diag_norm, r.wall_time_s, r.status,
                       r.std_clean_accuracy);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
    if (s == "nan" || s.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw FormatError(fmt::format("line {}: \"{}\" is not a number", line_no, s));
    }
}

std::uint64_t parse_seed(const std::string& s, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw FormatError(fmt::format("line {}: \"{}\" is not a seed", line_no, s));
    }
}

}  // namespace

std::vector<SweepResult> parse_sweep_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("results CSV is empty");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    const auto header = split_line(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        col[header[i]] = i;
    }
    for (const char* required : {"beta", "curvature", "alpha", "seed", "clean_acc", "robust_acc", "diag_norm",
                                 "wall_time_s", "status"}) {
        if (!col.contains(required)) {
            throw FormatError(fmt::format("results CSV is missing column \"{}\"", required));
        }
    }
    const bool has_std = col.contains("std_clean_acc");

    std::vector<SweepResult> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto cells = split_line(line);
        if (cells.size() < header.size()) {
            throw FormatError(fmt::format("line {}: expected {} fields, got {}", line_no, header.size(), cells.size()));
        }
        SweepResult r;
        r.key.beta = static_cast<int>(parse_double(cells[col["beta"]], line_no));
        r.key.curvature = parse_double(cells[col["curvature"]], line_no);
        r.key.seed = parse_seed(cells[col["seed"]], line_no);
        r.alpha = parse_double(cells[col["alpha"]], line_no);
        r.clean_accuracy = parse_double(cells[col["clean_acc"]], line_no);
        r.robust_accuracy = parse_double(cells[col["robust_acc"]], line_no);
        r.diag_norm = parse_double(cells[col["diag_norm"]], line_no);
        r.wall_time_s = parse_double(cells[col["wall_time_s"]], line_no);
        r.status = cells[col["status"]];
        r.std_clean_accuracy =
            has_std ? parse_double(cells[col["std_clean_acc"]], line_no) : std::numeric_limits<double>::quiet_NaN();
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<SweepResult> read_sweep_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError(fmt::format("cannot open {}", path.string()));
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_sweep_csv(text.str());
}

SweepOutcome run_sweep(const SweepConfig& cfg, const std::optional<std::filesystem::path>& csv_path,
                       unsigned jobs, const SweepProgress& progress) {
    cfg.validate();
    const auto cells = sweep_cells(cfg);
    const std::set<CellKey> wanted(cells.begin(), cells.end());

    std::map<CellKey, SweepResult> done;
    std::ofstream sink;
    if (csv_path) {
        const bool exists = std::filesystem::exists(*csv_path) && std::filesystem::file_size(*csv_path) > 0;
        if (exists) {
            for (auto& r : read_sweep_csv(*csv_path)) {
                if (wanted.contains(r.key)) {
                    done.emplace(r.key, std::move(r));
                }
            }
        }
        sink.open(*csv_path, std::ios::app);
        if (!sink) {
            throw IoError(fmt::format("cannot open {} for writing", csv_path->string()));
        }
        if (!exists) {
            sink << kSweepCsvHeader << '\n' << std::flush;
        }
        auto meta = nlohmann::json{{"config", to_json(cfg)},
                                   {"diag_norm_measured_at_epoch", cfg.train.epochs},
                                   {"diag_norm_reduction", "mean_diag_then_norm"},
                                   {"diag_norm_split", "train"}};
        std::ofstream meta_out(csv_path->string() + ".meta.json");
        meta_out << meta.dump(2) << '\n';
    }

    std::vector<CellKey> pending;
    for (const auto& key : cells) {
        if (!done.contains(key)) {
            pending.push_back(key);
        }
    }

    std::mutex mutex;
    std::exception_ptr failure;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < pending.size(); i = next++) {
            SweepResult r;
            try {
                r = run_cell(cfg, pending[i]);
            } catch (...) {
                const std::lock_guard lock(mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next = pending.size();
                return;
            }
            const std::lock_guard lock(mutex);
            if (sink.is_open()) {
                sink << format_csv_row(r) << '\n' << std::flush;
            }
            if (progress) {
                progress(r);
            }
            done.emplace(r.key, std::move(r));
        }
    };

    if (jobs == 0) {
        jobs = std::max(1U, std::thread::hardware_concurrency());
    }
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(pending.size(), 1)));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < jobs; ++t) {
            pool.emplace_back(worker);
        }
    }

    if (failure) {
        std::rethrow_exception(failure);
    }

    SweepOutcome out;
    out.cells_run = pending.size();
    for (auto& [key, r] : done) {
        out.results.push_back(std::move(r));
    }
    return out;
}

}  // namespace rctaf
