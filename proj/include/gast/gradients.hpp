#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gast/matrix.hpp"
#include "gast/model.hpp"
#include "gast/plan.hpp"

namespace gast {

// Gradient of one loss term w.r.t. one layer's adapter factors.
struct LayerGrads {
    Matrix a; // rank x in
    Matrix b; // out x rank
};

// g[layer][sample].
struct PerSampleLayerGrads {
    std::vector<std::vector<LayerGrads>> g;

    std::size_t layers() const { return g.size(); }
    std::size_t batch() const { return g.empty() ? 0 : g[0].size(); }
};

struct SupportGradient {
    std::vector<LayerGrads> layers;
};

// StorePerSample materializes the whole per-sample gradient tensor (fast,
// memory-heavy); TwoPass streams one sample at a time and recomputes the
// selected samples' gradients in a second pass (never more than one live
// per-sample buffer per layer). Both produce bit-identical aggregates.
enum class GradMode { StorePerSample, TwoPass };

GradMode parse_grad_mode(const std::string& name);
std::string to_string(GradMode mode);

struct GradInstrumentation {
    std::size_t peak_live_per_layer = 0; // max concurrently held per-sample buffers, any layer
    std::size_t samples_visited = 0;
};

// Exact reverse-mode per-sample gradients; outer-product form per layer, no
// loop over parameters. Parallel across samples.
PerSampleLayerGrads per_sample_layer_grads(const Model& m, const Matrix& batch,
                                           const Targets& targets);
// Serial reference; bit-identical to the parallel version for all inputs.
PerSampleLayerGrads per_sample_layer_grads_serial(const Model& m, const Matrix& batch,
                                                  const Targets& targets);

// Streams sample j's full gradient stack to fn in ascending j order without
// materializing the batch tensor.
void visit_sample_grads(const Model& m, const Matrix& batch, const Targets& targets,
                        const std::function<void(std::size_t, const std::vector<LayerGrads>&)>& fn);

// Per-layer mean gradient over a batch (pairwise summation / count).
SupportGradient support_gradient(const Model& m, const Matrix& batch, const Targets& targets);

// Mean over the plan's selected samples for one layer, pairwise-summed in
// ascending index order. Empty selection is the caller's fallback to apply.
LayerGrads aggregate_selected(const PerSampleLayerGrads& psg, const SelectionPlan& plan,
                              std::size_t layer);

// Aggregated per-layer gradients under either execution mode; nullopt for
// layers the plan leaves untouched.
std::vector<std::optional<LayerGrads>> grads_via_mode(GradMode mode, const Model& m,
                                                      const Matrix& batch, const Targets& targets,
                                                      const SelectionPlan& plan,
                                                      GradInstrumentation* instr = nullptr);

} // namespace gast
