#include "gast/gradients.hpp"

#include <algorithm>
#include <cmath>

#include "gast/errors.hpp"
#include "gast/numerics.hpp"

namespace gast {

GradMode parse_grad_mode(const std::string& name) {
    if (name == "store") {
        return GradMode::StorePerSample;
    }
    if (name == "two-pass" || name == "twopass") {
        return GradMode::TwoPass;
    }
    throw ConfigError("unknown grad mode \"" + name + "\"");
}

std::string to_string(GradMode mode) {
    return mode == GradMode::StorePerSample ? "store" : "two-pass";
}

namespace {

// Everything backprop_sample needs, computed once per batch.
struct BatchContext {
    std::vector<Matrix> v; // effective weights, out x in
    ForwardTrace trace;
    Matrix logits;
};

BatchContext make_context(const Model& m, const Matrix& batch) {
    BatchContext ctx;
    ctx.logits = forward(m, batch, &ctx.trace);
    ctx.v.reserve(m.cfg.depth);
    for (std::size_t i = 0; i < m.cfg.depth; ++i) {
        ctx.v.push_back(effective_weight(m, i));
    }
    return ctx;
}

void validate_targets(const Model& m, const Matrix& batch, const Targets& targets) {
    if (batch.rows() == 0) {
        throw DomainError("gradients: empty batch");
    }
    if (targets.count(m.cfg.loss) != batch.rows()) {
        throw DimensionError("targets cover " + std::to_string(targets.count(m.cfg.loss)) +
                             " samples, batch has " + std::to_string(batch.rows()));
    }
    std::size_t out = m.cfg.widths.back();
    if (m.cfg.loss == LossKind::Mse) {
        if (targets.values.cols() != out) {
            throw DimensionError("mse targets width " + std::to_string(targets.values.cols()) +
                                 " != output width " + std::to_string(out));
        }
    } else {
        for (int y : targets.classes) {
            if (y < 0 || static_cast<std::size_t>(y) >= out) {
                throw DomainError("class " + std::to_string(y) + " out of range for " +
                                  std::to_string(out) + " logits");
            }
        }
    }
}

double act_deriv(Activation act, double h) {
    // Derivative expressed through the stored post-activation value.
    switch (act) {
    case Activation::Tanh: return 1.0 - h * h;
    case Activation::Relu: return h > 0.0 ? 1.0 : 0.0;
    default: return 1.0;
    }
}

std::vector<LayerGrads> backprop_sample(const Model& m, const BatchContext& ctx,
                                        const Targets& targets, std::size_t j) {
    const std::size_t depth = m.cfg.depth;
    std::vector<LayerGrads> out(depth);

    const std::size_t c_out = ctx.logits.cols();
    std::vector<double> delta(c_out);
    if (m.cfg.loss == LossKind::Mse) {
        for (std::size_t c = 0; c < c_out; ++c) {
            delta[c] = ctx.logits(j, c) - targets.values(j, c);
        }
    } else {
        double mx = ctx.logits(j, 0);
        for (std::size_t c = 1; c < c_out; ++c) {
            mx = std::max(mx, ctx.logits(j, c));
        }
        double sum = 0.0;
        for (std::size_t c = 0; c < c_out; ++c) {
            delta[c] = std::exp(ctx.logits(j, c) - mx);
            sum += delta[c];
        }
        for (std::size_t c = 0; c < c_out; ++c) {
            delta[c] /= sum;
        }
        delta[static_cast<std::size_t>(targets.classes[j])] -= 1.0;
    }

    for (std::size_t i = depth; i-- > 0;) {
        const Matrix& fa = m.adapters.a[i];
        const Matrix& fb = m.adapters.b[i];
        auto x = ctx.trace.inputs[i].row(j);
        const std::size_t in = fa.cols();
        const std::size_t rank = fa.rows();
        const std::size_t rows = fb.rows();

        // dB = delta (x) (A x), dA = (B^T delta) (x) x: the dense layer
        // gradient delta (x) x never gets materialized.
        std::vector<double> u(rank, 0.0);
        std::vector<double> w(rank, 0.0);
        for (std::size_t p = 0; p < rank; ++p) {
            for (std::size_t q = 0; q < in; ++q) {
                u[p] += fa(p, q) * x[q];
            }
        }
        for (std::size_t p = 0; p < rank; ++p) {
            for (std::size_t r = 0; r < rows; ++r) {
                w[p] += fb(r, p) * delta[r];
            }
        }
        Matrix ga(rank, in);
        for (std::size_t p = 0; p < rank; ++p) {
            for (std::size_t q = 0; q < in; ++q) {
                ga(p, q) = w[p] * x[q];
            }
        }
        Matrix gb(rows, rank);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t p = 0; p < rank; ++p) {
                gb(r, p) = delta[r] * u[p];
            }
        }
        out[i] = {std::move(ga), std::move(gb)};

        if (i > 0) {
            auto h = ctx.trace.outputs[i - 1].row(j);
            const Matrix& v = ctx.v[i];
            std::vector<double> nd(in, 0.0);
            for (std::size_t c = 0; c < in; ++c) {
                double s = 0.0;
                for (std::size_t r = 0; r < rows; ++r) {
                    s += v(r, c) * delta[r];
                }
                nd[c] = s * act_deriv(m.cfg.activation, h[c]);
            }
            delta = std::move(nd);
        }
    }
    return out;
}

PerSampleLayerGrads compute_grads(const Model& m, const Matrix& batch, const Targets& targets,
                                  bool parallel) {
    validate_targets(m, batch, targets);
    BatchContext ctx = make_context(m, batch);
    const std::size_t n = batch.rows();
    const std::size_t depth = m.cfg.depth;

    PerSampleLayerGrads out;
    out.g.resize(depth);
    for (auto& layer : out.g) {
        layer.resize(n);
    }
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n); ++j) {
        auto gs = backprop_sample(m, ctx, targets, static_cast<std::size_t>(j));
        for (std::size_t i = 0; i < depth; ++i) {
            out.g[i][static_cast<std::size_t>(j)] = std::move(gs[i]);
        }
    }
    return out;
}

LayerGrads scaled_mean(const PairwiseAccumulator& aa, const PairwiseAccumulator& ab,
                       std::size_t count) {
    Matrix a = aa.finalize();
    Matrix b = ab.finalize();
    double inv = 1.0 / static_cast<double>(count);
    a *= inv;
    b *= inv;
    return {std::move(a), std::move(b)};
}

} // namespace

PerSampleLayerGrads per_sample_layer_grads(const Model& m, const Matrix& batch,
                                           const Targets& targets) {
    return compute_grads(m, batch, targets, true);
}

PerSampleLayerGrads per_sample_layer_grads_serial(const Model& m, const Matrix& batch,
                                                  const Targets& targets) {
    return compute_grads(m, batch, targets, false);
}

void visit_sample_grads(const Model& m, const Matrix& batch, const Targets& targets,
                        const std::function<void(std::size_t, const std::vector<LayerGrads>&)>& fn) {
    validate_targets(m, batch, targets);
    BatchContext ctx = make_context(m, batch);
    for (std::size_t j = 0; j < batch.rows(); ++j) {
        fn(j, backprop_sample(m, ctx, targets, j));
    }
}

SupportGradient support_gradient(const Model& m, const Matrix& batch, const Targets& targets) {
    PerSampleLayerGrads psg = per_sample_layer_grads(m, batch, targets);
    SupportGradient gsup;
    gsup.layers.reserve(psg.layers());
    for (std::size_t i = 0; i < psg.layers(); ++i) {
        PairwiseAccumulator aa;
        PairwiseAccumulator ab;
        for (std::size_t j = 0; j < psg.batch(); ++j) {
            aa.add(psg.g[i][j].a);
            ab.add(psg.g[i][j].b);
        }
        gsup.layers.push_back(scaled_mean(aa, ab, psg.batch()));
    }
    return gsup;
}

LayerGrads aggregate_selected(const PerSampleLayerGrads& psg, const SelectionPlan& plan,
                              std::size_t layer) {
    if (layer >= plan.layers() || plan.layers() != psg.layers()) {
        throw DimensionError("aggregate_selected: layer " + std::to_string(layer) +
                             " out of range");
    }
    const auto& sel = plan.selected[layer];
    if (sel.empty()) {
        throw DomainError("aggregate_selected: empty selection for layer " +
                          std::to_string(layer));
    }
    PairwiseAccumulator aa;
    PairwiseAccumulator ab;
    for (std::size_t j : sel) {
        if (j >= psg.batch()) {
            throw DomainError("aggregate_selected: index " + std::to_string(j) +
                              " outside batch of " + std::to_string(psg.batch()));
        }
        aa.add(psg.g[layer][j].a);
        ab.add(psg.g[layer][j].b);
    }
    return scaled_mean(aa, ab, sel.size());
}

std::vector<std::optional<LayerGrads>> grads_via_mode(GradMode mode, const Model& m,
                                                      const Matrix& batch, const Targets& targets,
                                                      const SelectionPlan& plan,
                                                      GradInstrumentation* instr) {
    const std::size_t depth = m.cfg.depth;
    const std::size_t n = batch.rows();
    if (plan.layers() != depth) {
        throw DimensionError("plan covers " + std::to_string(plan.layers()) + " layers, model has " +
                             std::to_string(depth));
    }
    if (plan.batch_size != n) {
        throw DimensionError("plan batch size " + std::to_string(plan.batch_size) +
                             " != batch rows " + std::to_string(n));
    }

    std::vector<std::optional<LayerGrads>> out(depth);
    if (mode == GradMode::StorePerSample) {
        PerSampleLayerGrads psg = per_sample_layer_grads(m, batch, targets);
        if (instr) {
            instr->peak_live_per_layer = n;
            instr->samples_visited = n;
        }
        for (std::size_t i = 0; i < depth; ++i) {
            if (!plan.selected[i].empty()) {
                out[i] = aggregate_selected(psg, plan, i);
            }
        }
        return out;
    }

    // TwoPass: recompute and fold in one selected sample at a time.
    std::vector<std::vector<char>> member(depth, std::vector<char>(n, 0));
    std::vector<char> any(n, 0);
    for (std::size_t i = 0; i < depth; ++i) {
        for (std::size_t j : plan.selected[i]) {
            if (j >= n) {
                throw DomainError("plan index " + std::to_string(j) + " outside batch of " +
                                  std::to_string(n));
            }
            member[i][j] = 1;
            any[j] = 1;
        }
    }
    validate_targets(m, batch, targets);
    BatchContext ctx = make_context(m, batch);
    std::vector<PairwiseAccumulator> aa(depth);
    std::vector<PairwiseAccumulator> ab(depth);
    std::size_t live = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (!any[j]) {
            continue;
        }
        {
            auto gs = backprop_sample(m, ctx, targets, j);
            ++live;
            if (instr) {
                instr->peak_live_per_layer = std::max(instr->peak_live_per_layer, live);
                ++instr->samples_visited;
            }
            for (std::size_t i = 0; i < depth; ++i) {
                if (member[i][j]) {
                    aa[i].add(gs[i].a);
                    ab[i].add(gs[i].b);
                }
            }
        }
        --live;
    }
    for (std::size_t i = 0; i < depth; ++i) {
        if (!plan.selected[i].empty()) {
            out[i] = scaled_mean(aa[i], ab[i], plan.selected[i].size());
        }
    }
    return out;
}

} // namespace gast
