#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gast/data.hpp"
#include "gast/gradients.hpp"
#include "gast/model.hpp"
#include "gast/plan.hpp"
#include "gast/selection.hpp"

namespace gast {

enum class SupportSource { WholeTrain, HeldOut };

SupportSource parse_support_source(const std::string& name);
std::string to_string(SupportSource s);

struct TrainConfig {
    std::size_t steps = 500;
    std::size_t batch_size = 16;
    double lr = 1e-2;
    Strategy strategy;
    std::size_t support_batch_size = 4;
    SupportSource support_source = SupportSource::WholeTrain;
    std::uint64_t seed = 0;
    std::size_t eval_interval = 50;
    GradMode grad_mode = GradMode::StorePerSample;
    bool cosine_scores = false;

    void validate() const;
};

struct MetricsRecord {
    std::size_t step = 0;
    std::string strategy;
    double train_loss = 0.0;
    double support_loss = 0.0;
    double val_loss = 0.0; // latest evaluation (refreshed every eval_interval)
    double val_acc = 0.0;
    bool has_val = false;
    bool has_acc = false;
    bool fresh_eval = false; // true on the steps where the evaluation ran
    std::vector<std::size_t> selected_per_layer;
    double sparsity = 0.0;
};

struct TrainState {
    std::size_t step = 0;
    Model model;
    Rng run_rng;
};

struct StepResult {
    MetricsRecord metrics;
    SelectionPlan plan;
    SelectionProbs probs;
};

// One Algorithm-1 step: support gradient, alignment scores, probabilities,
// plan, per-layer selected-mean update. Layers the plan skips keep their
// adapters untouched. Throws NumericError (naming step and layer) if a loss
// or gradient goes non-finite.
StepResult train_step(TrainState& state, const Matrix& batch_x, const Targets& batch_y,
                      const Matrix& support_x, const Targets& support_y, const TrainConfig& cfg);

struct RunResult {
    Model model;
    std::vector<MetricsRecord> metrics;
    std::vector<SelectionPlan> plans;
    std::vector<SelectionProbs> probs;
    std::vector<std::vector<std::size_t>> batch_rows; // dataset row of each batch slot per step
    EvalResult final_eval;
};

// Runs cfg.steps steps over epoch-shuffled mini-batches with a fresh support
// draw per step; evaluates on val every eval_interval steps (train set when
// val is empty).
RunResult run_training(const TrainConfig& cfg, Model model, const Dataset& train,
                       const Dataset& support, const Dataset& val);

struct StrategyStats {
    std::string strategy;
    std::vector<std::uint64_t> seeds;             // seeds that completed
    std::vector<double> final_val_losses;         // one per completed seed
    std::vector<std::string> failures;            // "seed: message" per failed run
    std::vector<std::size_t> eval_steps;          // shared evaluation grid
    std::vector<double> mean_curve;               // mean val loss per eval step
    std::vector<double> std_curve;                // population std per eval step
    double mean_final = 0.0;
    double std_final = 0.0;
    double mean_final_acc = 0.0;
    bool has_acc = false;
    double mean_sparsity = 0.0;
};

// Per (strategy, seed): an independent run from an identical seed-derived
// initialization. Failed runs are recorded in `failures`, not fatal.
std::vector<StrategyStats> compare_strategies(const TrainConfig& base, const ModelConfig& mcfg,
                                              const std::vector<Strategy>& strategies,
                                              const Dataset& train, const Dataset& support,
                                              const Dataset& val,
                                              const std::vector<std::uint64_t>& seeds);

} // namespace gast
