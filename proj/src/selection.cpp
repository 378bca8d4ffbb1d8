#include "gast/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gast/errors.hpp"
#include "gast/numerics.hpp"

namespace gast {

Strategy Strategy::parse(const std::string& text) {
    std::string name = text;
    std::string arg;
    if (auto pos = text.find(':'); pos != std::string::npos) {
        name = text.substr(0, pos);
        arg = text.substr(pos + 1);
    }
    auto parse_count = [&](std::size_t dflt) {
        if (arg.empty()) {
            return dflt;
        }
        try {
            long long v = std::stoll(arg);
            if (v < 1) {
                throw std::out_of_range(arg);
            }
            return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw ConfigError("strategy \"" + text + "\": bad count \"" + arg + "\"");
        }
    };
    auto parse_fraction = [&](double dflt) {
        if (arg.empty()) {
            return dflt;
        }
        try {
            std::size_t pos = 0;
            double v = std::stod(arg, &pos);
            if (pos != arg.size() || !(v > 0.0) || v > 1.0) {
                throw std::out_of_range(arg);
            }
            return v;
        } catch (const std::exception&) {
            throw ConfigError("strategy \"" + text + "\": fraction must be in (0,1]");
        }
    };

    Strategy s;
    if (name == "gast") {
        s.kind = StrategyKind::GastSampling;
        s.k = parse_count(8);
    } else if (name == "topk") {
        s.kind = StrategyKind::GastTopK;
        s.k = parse_count(8);
    } else if (name == "random") {
        s.kind = StrategyKind::GastRandom;
        s.k = parse_count(8);
    } else if (name == "layer") {
        s.kind = StrategyKind::LayerSelective;
        s.fraction = parse_fraction(0.5);
    } else if (name == "data") {
        s.kind = StrategyKind::DataSelective;
        s.fraction = parse_fraction(0.5);
    } else if (name == "dense") {
        s.kind = StrategyKind::Dense;
    } else if (name == "hybrid") {
        s.kind = StrategyKind::HybridPositive;
    } else {
        throw ConfigError("unknown strategy \"" + text +
                          "\"; valid: gast[:K] topk[:K] random[:K] layer[:f] data[:f] dense hybrid");
    }
    if ((s.kind == StrategyKind::Dense || s.kind == StrategyKind::HybridPositive) && !arg.empty()) {
        throw ConfigError("strategy \"" + name + "\" takes no argument");
    }
    return s;
}

std::string Strategy::str() const {
    auto frac = [](double f) {
        std::string s = std::to_string(f);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') {
            s.pop_back();
        }
        return s;
    };
    switch (kind) {
    case StrategyKind::GastSampling: return "gast:" + std::to_string(k);
    case StrategyKind::GastTopK: return "topk:" + std::to_string(k);
    case StrategyKind::GastRandom: return "random:" + std::to_string(k);
    case StrategyKind::LayerSelective: return "layer:" + frac(fraction);
    case StrategyKind::DataSelective: return "data:" + frac(fraction);
    case StrategyKind::Dense: return "dense";
    default: return "hybrid";
    }
}

double plan_sparsity(const SelectionPlan& plan) {
    if (plan.layers() == 0 || plan.batch_size == 0) {
        return 0.0;
    }
    std::size_t used = 0;
    for (const auto& sel : plan.selected) {
        used += sel.size();
    }
    return 1.0 - static_cast<double>(used) /
                     (static_cast<double>(plan.layers()) * static_cast<double>(plan.batch_size));
}

namespace {

double factor_dot(const LayerGrads& x, const LayerGrads& y) {
    return dot_flat(x.a, y.a) + dot_flat(x.b, y.b);
}

double factor_norm(const LayerGrads& x) {
    return std::sqrt(frob_norm_sq(x.a) + frob_norm_sq(x.b));
}

double score_of(const LayerGrads& g, const LayerGrads& sup, double sup_norm, bool cosine) {
    double s = factor_dot(g, sup);
    if (!cosine) {
        return s;
    }
    double gn = factor_norm(g);
    if (gn < 1e-12 || sup_norm < 1e-12) {
        return 0.0;
    }
    return s / (gn * sup_norm);
}

} // namespace

AlignmentScores alignment_scores(const PerSampleLayerGrads& psg, const SupportGradient& gsup,
                                 bool cosine) {
    const std::size_t depth = psg.layers();
    if (gsup.layers.size() != depth) {
        throw DimensionError("support gradient covers " + std::to_string(gsup.layers.size()) +
                             " layers, batch gradients " + std::to_string(depth));
    }
    const std::size_t n = psg.batch();
    AlignmentScores out;
    out.cosine = cosine;
    out.values = Matrix(depth, n);
    for (std::size_t i = 0; i < depth; ++i) {
        if (n > 0 && (!psg.g[i][0].a.same_shape(gsup.layers[i].a) ||
                      !psg.g[i][0].b.same_shape(gsup.layers[i].b))) {
            throw DimensionError("gradient shape mismatch at layer " + std::to_string(i));
        }
        double sup_norm = factor_norm(gsup.layers[i]);
        for (std::size_t j = 0; j < n; ++j) {
            out.values(i, j) = score_of(psg.g[i][j], gsup.layers[i], sup_norm, cosine);
        }
    }
    return out;
}

AlignmentScores alignment_scores_two_pass(const Model& m, const Matrix& batch,
                                          const Targets& targets, const SupportGradient& gsup,
                                          bool cosine, GradInstrumentation* instr) {
    const std::size_t depth = m.cfg.depth;
    if (gsup.layers.size() != depth) {
        throw DimensionError("support gradient covers " + std::to_string(gsup.layers.size()) +
                             " layers, model has " + std::to_string(depth));
    }
    AlignmentScores out;
    out.cosine = cosine;
    out.values = Matrix(depth, batch.rows());
    std::vector<double> sup_norms(depth);
    for (std::size_t i = 0; i < depth; ++i) {
        sup_norms[i] = factor_norm(gsup.layers[i]);
    }
    std::size_t live = 0;
    visit_sample_grads(m, batch, targets, [&](std::size_t j, const std::vector<LayerGrads>& gs) {
        ++live;
        if (instr) {
            instr->peak_live_per_layer = std::max(instr->peak_live_per_layer, live);
            ++instr->samples_visited;
        }
        for (std::size_t i = 0; i < depth; ++i) {
            out.values(i, j) = score_of(gs[i], gsup.layers[i], sup_norms[i], cosine);
        }
        --live;
    });
    return out;
}

SelectionProbs selection_probs(const AlignmentScores& scores) {
    const std::size_t depth = scores.values.rows();
    const std::size_t n = scores.values.cols();
    if (n == 0) {
        throw DomainError("selection_probs: empty batch");
    }
    SelectionProbs out;
    out.values = Matrix(depth, n);
    for (std::size_t i = 0; i < depth; ++i) {
        Vector row(std::vector<double>(scores.values.row(i).begin(), scores.values.row(i).end()));
        Vector p = softmax(mean_std_normalize(row));
        for (std::size_t j = 0; j < n; ++j) {
            out.values(i, j) = p[j];
        }
    }
    return out;
}

namespace {

std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b]; // stable keeps the lower index on ties
    });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

} // namespace

SelectionPlan select(const Strategy& strategy, const AlignmentScores& scores,
                     const SelectionProbs& probs, std::size_t batch, std::size_t layers,
                     std::size_t step, const Rng& run_rng) {
    if (batch < 1 || layers < 1) {
        throw DomainError("select: batch and layer counts must be >= 1");
    }
    if (scores.values.rows() != layers || scores.values.cols() != batch ||
        !probs.values.same_shape(scores.values)) {
        throw DimensionError("select: scores/probs must be " + std::to_string(layers) + "x" +
                             std::to_string(batch));
    }
    SelectionPlan plan;
    plan.batch_size = batch;
    plan.step = step;
    plan.strategy = strategy.str();
    plan.selected.resize(layers);

    const std::size_t k = std::min(strategy.k, batch);
    switch (strategy.kind) {
    case StrategyKind::GastSampling:
        for (std::size_t i = 0; i < layers; ++i) {
            Vector p(std::vector<double>(probs.values.row(i).begin(), probs.values.row(i).end()));
            Rng r = run_rng.stream("select", step, i);
            plan.selected[i] = sample_without_replacement(p, k, r);
        }
        break;
    case StrategyKind::GastTopK:
        for (std::size_t i = 0; i < layers; ++i) {
            plan.selected[i] = top_k_indices(scores.values.row(i), k);
        }
        break;
    case StrategyKind::GastRandom:
        for (std::size_t i = 0; i < layers; ++i) {
            Rng r = run_rng.stream("select", step, i);
            plan.selected[i] = r.distinct_indices(batch, k);
        }
        break;
    case StrategyKind::LayerSelective: {
        auto n_active = static_cast<std::size_t>(
            std::ceil(strategy.fraction * static_cast<double>(layers)));
        n_active = std::clamp<std::size_t>(n_active, 1, layers);
        Rng r = run_rng.stream("layers", step);
        for (std::size_t i : r.distinct_indices(layers, n_active)) {
            plan.selected[i] = all_indices(batch);
        }
        break;
    }
    case StrategyKind::DataSelective: {
        auto n_sel =
            static_cast<std::size_t>(std::ceil(strategy.fraction * static_cast<double>(batch)));
        n_sel = std::clamp<std::size_t>(n_sel, 1, batch);
        Rng r = run_rng.stream("data", step);
        auto idx = r.distinct_indices(batch, n_sel);
        for (std::size_t i = 0; i < layers; ++i) {
            plan.selected[i] = idx;
        }
        break;
    }
    case StrategyKind::Dense:
        for (std::size_t i = 0; i < layers; ++i) {
            plan.selected[i] = all_indices(batch);
        }
        break;
    case StrategyKind::HybridPositive:
        for (std::size_t i = 0; i < layers; ++i) {
            auto row = scores.values.row(i);
            std::vector<std::size_t> pos;
            for (std::size_t j = 0; j < batch; ++j) {
                if (row[j] > 0.0) {
                    pos.push_back(j);
                }
            }
            if (pos.empty()) {
                // Assumption of a nonempty positive set failed; fall back to
                // the single best-aligned sample.
                std::size_t best = 0;
                for (std::size_t j = 1; j < batch; ++j) {
                    if (row[j] > row[best]) {
                        best = j;
                    }
                }
                pos.push_back(best);
            }
            plan.selected[i] = std::move(pos);
        }
        break;
    }
    return plan;
}

} // namespace gast
