#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gast {

enum class StrategyKind {
    GastSampling,   // sample K indices per layer from the alignment probs
    GastTopK,       // K best-aligned indices per layer
    GastRandom,     // K uniform indices per layer (alignment ignored)
    LayerSelective, // a fraction of layers trains on the whole batch
    DataSelective,  // one fixed index subset applied to every layer
    Dense,          // everything
    HybridPositive, // all positively aligned indices per layer
};

struct Strategy {
    StrategyKind kind = StrategyKind::GastSampling;
    std::size_t k = 8;       // gast family budget
    double fraction = 0.5;   // layer/data selective

    // Grammar: "dense", "hybrid", "gast[:K]", "topk[:K]", "random[:K]",
    // "layer[:fraction]", "data[:fraction]". Omitted arguments take the
    // defaults above.
    static Strategy parse(const std::string& text);
    std::string str() const;
};

// Per layer: ascending distinct batch indices. An empty entry is the
// layer-selective sentinel: that layer receives no update this step.
struct SelectionPlan {
    std::vector<std::vector<std::size_t>> selected;
    std::size_t batch_size = 0;
    std::size_t step = 0;
    std::string strategy;

    std::size_t layers() const { return selected.size(); }
};

// Fraction of (layer, sample) pairs the plan leaves out of the update.
double plan_sparsity(const SelectionPlan& plan);

} // namespace gast
