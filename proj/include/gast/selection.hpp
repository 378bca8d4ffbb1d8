#pragma once

#include "gast/gradients.hpp"
#include "gast/matrix.hpp"
#include "gast/plan.hpp"
#include "gast/rng.hpp"

namespace gast {

// Raw alignment of each sample's layer gradient with the support gradient:
// s[i][j] = <flatten(g_j at layer i), flatten(g_sup at layer i)>, both
// adapter factors concatenated. The cosine variant divides by the norms.
struct AlignmentScores {
    Matrix values; // layers x batch
    bool cosine = false;
};

// Row-wise simplexes: p[i] = softmax(mean_std_normalize(s[i])).
struct SelectionProbs {
    Matrix values; // layers x batch
};

AlignmentScores alignment_scores(const PerSampleLayerGrads& psg, const SupportGradient& gsup,
                                 bool cosine = false);

// Same scores computed by streaming one sample at a time; the per-sample
// gradients are never materialized together (first pass of the two-pass
// execution mode).
AlignmentScores alignment_scores_two_pass(const Model& m, const Matrix& batch,
                                          const Targets& targets, const SupportGradient& gsup,
                                          bool cosine = false,
                                          GradInstrumentation* instr = nullptr);

SelectionProbs selection_probs(const AlignmentScores& scores);

// Builds the per-layer index sets for any strategy. Randomized strategies
// draw from streams keyed by (step, layer), so the plan is a pure function
// of (scores, strategy, root rng, step).
SelectionPlan select(const Strategy& strategy, const AlignmentScores& scores,
                     const SelectionProbs& probs, std::size_t batch, std::size_t layers,
                     std::size_t step, const Rng& run_rng);

} // namespace gast
