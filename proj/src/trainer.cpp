#include "gast/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "gast/errors.hpp"
#include "gast/numerics.hpp"

namespace gast {

SupportSource parse_support_source(const std::string& name) {
    if (name == "whole-train") {
        return SupportSource::WholeTrain;
    }
    if (name == "held-out") {
        return SupportSource::HeldOut;
    }
    throw ConfigError("unknown support source \"" + name + "\"");
}

std::string to_string(SupportSource s) {
    return s == SupportSource::WholeTrain ? "whole-train" : "held-out";
}

void TrainConfig::validate() const {
    if (batch_size < 1) {
        throw ConfigError("train: batch_size must be >= 1");
    }
    if (lr < 0.0 || !std::isfinite(lr)) {
        throw ConfigError("train: lr must be finite and >= 0");
    }
    if (support_batch_size < 1) {
        throw ConfigError("train: support_batch_size must be >= 1");
    }
    if (eval_interval < 1) {
        throw ConfigError("train: eval_interval must be >= 1");
    }
    bool gast_family = strategy.kind == StrategyKind::GastSampling ||
                       strategy.kind == StrategyKind::GastTopK ||
                       strategy.kind == StrategyKind::GastRandom;
    if (gast_family && (strategy.k < 1 || strategy.k > batch_size)) {
        throw ConfigError("train: selection budget K must be in [1, batch_size]");
    }
}

namespace {

double mean_loss_of(const Model& m, const Matrix& x, const Targets& y) {
    Matrix logits = forward(m, x);
    Vector losses = per_sample_loss(logits, y, m.cfg.loss);
    double acc = 0.0;
    for (std::size_t j = 0; j < losses.len(); ++j) {
        acc += losses[j];
    }
    return acc / static_cast<double>(losses.len());
}

} // namespace

StepResult train_step(TrainState& state, const Matrix& batch_x, const Targets& batch_y,
                      const Matrix& support_x, const Targets& support_y, const TrainConfig& cfg) {
    Model& m = state.model;
    const std::size_t t = state.step;
    const std::size_t depth = m.cfg.depth;
    const std::size_t n = batch_x.rows();

    StepResult res;
    res.metrics.step = t;
    res.metrics.strategy = cfg.strategy.str();
    res.metrics.train_loss = mean_loss_of(m, batch_x, batch_y);
    res.metrics.support_loss = mean_loss_of(m, support_x, support_y);
    if (!std::isfinite(res.metrics.train_loss) || !std::isfinite(res.metrics.support_loss)) {
        throw NumericError("non-finite loss at step " + std::to_string(t));
    }

    SupportGradient gsup = support_gradient(m, support_x, support_y);

    AlignmentScores scores;
    std::vector<std::optional<LayerGrads>> agg(depth);
    if (cfg.grad_mode == GradMode::StorePerSample) {
        PerSampleLayerGrads psg = per_sample_layer_grads(m, batch_x, batch_y);
        scores = alignment_scores(psg, gsup, cfg.cosine_scores);
        res.probs = selection_probs(scores);
        res.plan = select(cfg.strategy, scores, res.probs, n, depth, t, state.run_rng);
        for (std::size_t i = 0; i < depth; ++i) {
            if (!res.plan.selected[i].empty()) {
                agg[i] = aggregate_selected(psg, res.plan, i);
            }
        }
    } else {
        scores = alignment_scores_two_pass(m, batch_x, batch_y, gsup, cfg.cosine_scores);
        res.probs = selection_probs(scores);
        res.plan = select(cfg.strategy, scores, res.probs, n, depth, t, state.run_rng);
        agg = grads_via_mode(GradMode::TwoPass, m, batch_x, batch_y, res.plan);
    }

    for (std::size_t i = 0; i < depth; ++i) {
        if (!agg[i]) {
            continue;
        }
        if (!agg[i]->a.all_finite() || !agg[i]->b.all_finite()) {
            throw NumericError("non-finite gradient at step " + std::to_string(t) + ", layer " +
                               std::to_string(i));
        }
        Matrix da = agg[i]->a;
        da *= cfg.lr;
        m.adapters.a[i] -= da;
        Matrix db = agg[i]->b;
        db *= cfg.lr;
        m.adapters.b[i] -= db;
    }

    res.metrics.selected_per_layer.reserve(depth);
    for (const auto& sel : res.plan.selected) {
        res.metrics.selected_per_layer.push_back(sel.size());
    }
    res.metrics.sparsity = plan_sparsity(res.plan);
    state.step += 1;
    return res;
}

RunResult run_training(const TrainConfig& cfg, Model model, const Dataset& train,
                       const Dataset& support, const Dataset& val) {
    cfg.validate();
    if (train.empty()) {
        throw DomainError("run_training: empty training set");
    }
    if (cfg.support_batch_size > support.size()) {
        throw DomainError("run_training: support batch of " +
                          std::to_string(cfg.support_batch_size) + " exceeds support set of " +
                          std::to_string(support.size()));
    }

    const Dataset& eval_set = val.empty() ? train : val;
    Targets train_targets = Targets::from_dataset(train, model.cfg.loss);
    Targets support_targets = Targets::from_dataset(support, model.cfg.loss);

    RunResult out;
    TrainState state{0, std::move(model), Rng(cfg.seed)};

    std::size_t epoch = 0;
    std::size_t pos = 0;
    std::vector<std::size_t> order;
    double cached_val_loss = 0.0;
    double cached_val_acc = 0.0;
    bool cached_has_acc = false;

    for (std::size_t t = 0; t < cfg.steps; ++t) {
        if (pos == order.size()) {
            order = epoch_order(train.size(), epoch++, state.run_rng);
            pos = 0;
        }
        std::size_t take = std::min<std::size_t>(cfg.batch_size, order.size() - pos);
        std::vector<std::size_t> batch_rows(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                            order.begin() + static_cast<std::ptrdiff_t>(pos + take));
        pos += take;

        Dataset batch = take_rows(train, batch_rows);
        Targets batch_y = Targets::from_dataset(batch, state.model.cfg.loss);

        auto sup_rows = support_indices(support.size(), cfg.support_batch_size, t, state.run_rng);
        Dataset sup = take_rows(support, sup_rows);
        Targets sup_y = Targets::from_dataset(sup, state.model.cfg.loss);

        bool fresh = t % cfg.eval_interval == 0;
        if (fresh) {
            EvalResult ev = evaluate(state.model, eval_set);
            cached_val_loss = ev.mean_loss;
            cached_val_acc = ev.accuracy;
            cached_has_acc = ev.has_accuracy;
        }

        StepResult sr = train_step(state, batch.inputs, batch_y, sup.inputs, sup_y, cfg);
        sr.metrics.val_loss = cached_val_loss;
        sr.metrics.val_acc = cached_val_acc;
        sr.metrics.has_val = true;
        sr.metrics.has_acc = cached_has_acc;
        sr.metrics.fresh_eval = fresh;

        out.metrics.push_back(std::move(sr.metrics));
        out.plans.push_back(std::move(sr.plan));
        out.probs.push_back(std::move(sr.probs));
        out.batch_rows.push_back(std::move(batch_rows));
    }

    out.final_eval = evaluate(state.model, eval_set);
    out.model = std::move(state.model);
    return out;
}

std::vector<StrategyStats> compare_strategies(const TrainConfig& base, const ModelConfig& mcfg,
                                              const std::vector<Strategy>& strategies,
                                              const Dataset& train, const Dataset& support,
                                              const Dataset& val,
                                              const std::vector<std::uint64_t>& seeds) {
    if (strategies.empty() || seeds.empty()) {
        throw DomainError("compare_strategies: need at least one strategy and one seed");
    }
    std::vector<StrategyStats> table;
    for (const Strategy& strat : strategies) {
        StrategyStats stats;
        stats.strategy = strat.str();
        std::vector<std::vector<double>> curves;
        std::vector<double> final_accs;
        double sparsity_sum = 0.0;
        std::size_t sparsity_count = 0;

        for (std::uint64_t seed : seeds) {
            TrainConfig cfg = base;
            cfg.strategy = strat;
            cfg.seed = seed;
            Model model = init_model(mcfg, Rng(seed).stream("init"));
            try {
                RunResult run = run_training(cfg, std::move(model), train, support, val);
                stats.seeds.push_back(seed);
                stats.final_val_losses.push_back(run.final_eval.mean_loss);
                if (run.final_eval.has_accuracy) {
                    stats.has_acc = true;
                    final_accs.push_back(run.final_eval.accuracy);
                }
                std::vector<double> curve;
                std::vector<std::size_t> grid;
                for (const MetricsRecord& rec : run.metrics) {
                    sparsity_sum += rec.sparsity;
                    ++sparsity_count;
                    if (rec.fresh_eval) {
                        grid.push_back(rec.step);
                        curve.push_back(rec.val_loss);
                    }
                }
                grid.push_back(cfg.steps);
                curve.push_back(run.final_eval.mean_loss);
                if (stats.eval_steps.empty()) {
                    stats.eval_steps = grid;
                }
                curves.push_back(std::move(curve));
            } catch (const std::exception& e) {
                stats.failures.push_back("seed " + std::to_string(seed) + ": " + e.what());
            }
        }

        auto stats_of = [](std::span<const double> v) {
            double m = mean(v);
            return std::pair<double, double>{m, pop_std(v)};
        };
        if (!stats.final_val_losses.empty()) {
            auto [m, s] = stats_of(stats.final_val_losses);
            stats.mean_final = m;
            stats.std_final = s;
        }
        if (!final_accs.empty()) {
            stats.mean_final_acc = mean(final_accs);
        }
        if (sparsity_count > 0) {
            stats.mean_sparsity = sparsity_sum / static_cast<double>(sparsity_count);
        }
        for (std::size_t p = 0; p < stats.eval_steps.size(); ++p) {
            std::vector<double> at;
            for (const auto& curve : curves) {
                if (p < curve.size()) {
                    at.push_back(curve[p]);
                }
            }
            if (at.empty()) {
                break;
            }
            auto [m, s] = stats_of(at);
            stats.mean_curve.push_back(m);
            stats.std_curve.push_back(s);
        }
        table.push_back(std::move(stats));
    }
    return table;
}

} // namespace gast
