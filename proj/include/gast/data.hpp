#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gast/matrix.hpp"
#include "gast/rng.hpp"

namespace gast {

enum class TaskKind { Regression, Classification };

// Immutable sample store. Targets are always held as an N x t matrix; for
// classification tasks the single target column holds integer class ids and
// class_label() validates the conversion. groups records which latent
// subpopulation a synthetic sample came from (empty for loaded data).
struct Dataset {
    Matrix inputs;  // N x d
    Matrix targets; // N x t
    std::vector<int> groups;

    std::size_t size() const { return inputs.rows(); }
    bool empty() const { return inputs.rows() == 0; }
    int class_label(std::size_t row) const;
    std::size_t num_classes() const;
};

// Controllable gradient-conflict generator: samples come from subpopulations
// whose target structure is rotated by conflict_angle_deg across groups, so
// per-sample gradients of a shared model disagree by roughly that angle.
struct SyntheticSpec {
    std::size_t n = 512;
    std::size_t dim = 8;
    std::size_t subpopulations = 2;
    double conflict_angle_deg = 120.0;
    double label_noise = 0.0; // flip rate (classification) / target noise std (regression)
    TaskKind task = TaskKind::Classification;

    void validate() const;
};

Dataset gen_conflict_task(const SyntheticSpec& spec, std::uint64_t seed);

enum class FileFormat { Csv, Jsonl };

// CSV: header row of feature columns plus one "target" column (optional
// trailing "group" column); '.' decimal, '\n' newlines, UTF-8.
// JSONL: one {"x": [...], "y": <scalar or array>} object per line.
Dataset load_dataset(const std::string& path, FileFormat format);
void save_dataset(const Dataset& ds, const std::string& path, FileFormat format);

struct SplitFractions {
    double train = 0.75;
    double support = 0.0;
    double val = 0.25;
};

struct Splits {
    Dataset train;
    Dataset support; // aliases train when the support fraction is 0
    Dataset val;
    bool support_aliases_train = false;
};

// Seeded-shuffle disjoint partition. A support fraction of 0 makes the
// support split a copy of the train split (whole-train support protocol).
Splits split(const Dataset& ds, const SplitFractions& fractions, std::uint64_t seed);

Dataset take_rows(const Dataset& ds, std::span<const std::size_t> rows);

// Epoch-shuffled minibatch order: each index appears exactly once per epoch.
std::vector<std::size_t> epoch_order(std::size_t n, std::size_t epoch, const Rng& run_rng);

// Fresh independent support draw for one step: k distinct uniform indices.
std::vector<std::size_t> support_indices(std::size_t n, std::size_t k, std::size_t step,
                                         const Rng& run_rng);

// Diagnostics for the conflict dial, measured on per-sample mse gradients of
// the zero linear model (see gen_conflict_task).
struct ConflictDiagnostics {
    double mean_pairwise_cosine = 0.0;
    double cancellation_ratio = 0.0; // |mean grad| / mean |per-sample grad|
};

ConflictDiagnostics measure_conflict(const Dataset& ds);

} // namespace gast
