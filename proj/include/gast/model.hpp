#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gast/data.hpp"
#include "gast/matrix.hpp"
#include "gast/rng.hpp"

namespace gast {

enum class Activation { Tanh, Relu, Identity };
enum class LossKind { Mse, CrossEntropy };

Activation parse_activation(const std::string& name);
LossKind parse_loss(const std::string& name);
std::string to_string(Activation a);
std::string to_string(LossKind l);

struct ModelConfig {
    std::size_t depth = 2;                     // number of layers L
    std::vector<std::size_t> widths = {8, 16, 16}; // L+1 sizes, input first
    std::size_t rank = 2;                      // adapter rank
    Activation activation = Activation::Tanh;
    LossKind loss = LossKind::Mse;

    void validate() const;
};

// Frozen weights; never mutated after init_model.
struct FrozenBackbone {
    std::vector<Matrix> weights; // layer i: widths[i+1] x widths[i]
    std::vector<Vector> biases;  // layer i: widths[i+1]
};

// Trainable low-rank factors. The effective layer weight is W + B*A.
struct AdapterStack {
    std::vector<Matrix> a; // layer i: rank x widths[i]
    std::vector<Matrix> b; // layer i: widths[i+1] x rank

    std::size_t layers() const { return a.size(); }
    Matrix delta(std::size_t layer) const; // B*A
};

// Per-sample intermediates recorded during forward; enough to run exact
// analytic per-sample backprop without a second forward.
struct ForwardTrace {
    // inputs[i] is the batch entering layer i (B x widths[i]); outputs[i] is
    // the post-activation batch leaving it. outputs.back() == logits.
    std::vector<Matrix> inputs;
    std::vector<Matrix> outputs;
};

struct Model {
    ModelConfig cfg;
    FrozenBackbone backbone;
    AdapterStack adapters;
};

// Backbone ~ N(0, 1/fan_in) per layer, A likewise, B exactly zero, biases
// zero, so the initial adapter contribution vanishes.
Model init_model(const ModelConfig& cfg, const Rng& rng);

Matrix effective_weight(const Model& m, std::size_t layer);

// Hidden layers apply cfg.activation; the output layer is linear so logits
// are unbounded (cross-entropy needs the full real line).
Matrix forward(const Model& m, const Matrix& batch, ForwardTrace* trace = nullptr);

// Targets for a batch: a matrix for mse, class ids for cross-entropy.
struct Targets {
    Matrix values;           // B x t (mse)
    std::vector<int> classes; // B (cross-entropy)

    static Targets from_dataset(const Dataset& ds, LossKind loss);
    Targets rows(std::span<const std::size_t> idx) const;
    std::size_t count(LossKind loss) const;
};

// mse: 0.5 * |logit - y|^2 per sample; cross-entropy: -log softmax(logit)[y].
Vector per_sample_loss(const Matrix& logits, const Targets& targets, LossKind loss);

struct EvalResult {
    double mean_loss = 0.0;
    double accuracy = 0.0; // argmax-match fraction; 0 for regression
    bool has_accuracy = false;
};

EvalResult evaluate(const Model& m, const Dataset& ds);

// Versioned binary container ("GASTCKPT"); round trips bit-exactly.
void save_checkpoint(const Model& m, const std::string& path);
Model load_checkpoint(const std::string& path);

} // namespace gast
