#include "gast/theory.hpp"

#include <algorithm>
#include <cmath>

#include "gast/errors.hpp"
#include "gast/numerics.hpp"
#include "gast/selection.hpp"

namespace gast {

namespace {

double stack_dot(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += dot_flat(a[i], b[i]);
    }
    return acc;
}

double stack_norm(const std::vector<Matrix>& a) {
    double acc = 0.0;
    for (const Matrix& m : a) {
        acc += frob_norm_sq(m);
    }
    return std::sqrt(acc);
}

std::vector<Matrix> stack_axpy(std::vector<Matrix> p, double alpha, const std::vector<Matrix>& d) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        Matrix step = d[i];
        step *= alpha;
        p[i] += step;
    }
    return p;
}

void check_same_stack(const std::vector<Matrix>& a, const std::vector<Matrix>& b,
                      const char* what) {
    if (a.size() != b.size()) {
        throw DimensionError(std::string(what) + ": stack sizes differ");
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].same_shape(b[i])) {
            throw DimensionError(std::string(what) + ": shape mismatch at slot " +
                                 std::to_string(i));
        }
    }
}

} // namespace

LinearObjective::LinearObjective(std::vector<Matrix> coeffs, std::vector<Matrix> start)
    : coeffs_(std::move(coeffs)), start_(std::move(start)) {
    check_same_stack(coeffs_, start_, "linear objective");
}

double LinearObjective::value(const std::vector<Matrix>& p) const {
    check_same_stack(coeffs_, p, "linear objective");
    return stack_dot(coeffs_, p);
}

std::vector<Matrix> LinearObjective::gradient(const std::vector<Matrix>& p) const {
    check_same_stack(coeffs_, p, "linear objective");
    return coeffs_;
}

QuadraticObjective::QuadraticObjective(double lambda, std::vector<Matrix> start)
    : lambda_(lambda), start_(std::move(start)) {}

double QuadraticObjective::value(const std::vector<Matrix>& p) const {
    double acc = 0.0;
    for (const Matrix& m : p) {
        acc += frob_norm_sq(m);
    }
    return 0.5 * lambda_ * acc;
}

std::vector<Matrix> QuadraticObjective::gradient(const std::vector<Matrix>& p) const {
    std::vector<Matrix> g = p;
    for (Matrix& m : g) {
        m *= lambda_;
    }
    return g;
}

SupportLossObjective::SupportLossObjective(Model m, Matrix inputs, Targets targets)
    : model_(std::move(m)), inputs_(std::move(inputs)), targets_(std::move(targets)) {}

std::vector<Matrix> SupportLossObjective::params() const {
    std::vector<Matrix> p;
    for (std::size_t i = 0; i < model_.cfg.depth; ++i) {
        p.push_back(model_.adapters.a[i]);
        p.push_back(model_.adapters.b[i]);
    }
    return p;
}

Model SupportLossObjective::with_params(const std::vector<Matrix>& p) const {
    if (p.size() != 2 * model_.cfg.depth) {
        throw DimensionError("support objective: expected " +
                             std::to_string(2 * model_.cfg.depth) + " parameter matrices");
    }
    Model m = model_;
    for (std::size_t i = 0; i < m.cfg.depth; ++i) {
        m.adapters.a[i] = p[2 * i];
        m.adapters.b[i] = p[2 * i + 1];
    }
    return m;
}

double SupportLossObjective::value(const std::vector<Matrix>& p) const {
    Model m = with_params(p);
    Matrix logits = forward(m, inputs_);
    Vector losses = per_sample_loss(logits, targets_, m.cfg.loss);
    double acc = 0.0;
    for (std::size_t j = 0; j < losses.len(); ++j) {
        acc += losses[j];
    }
    return acc / static_cast<double>(losses.len());
}

std::vector<Matrix> SupportLossObjective::gradient(const std::vector<Matrix>& p) const {
    Model m = with_params(p);
    SupportGradient g = support_gradient(m, inputs_, targets_);
    std::vector<Matrix> out;
    for (auto& layer : g.layers) {
        out.push_back(std::move(layer.a));
        out.push_back(std::move(layer.b));
    }
    return out;
}

SmoothnessEstimate estimate_smoothness(const Objective& obj, std::size_t probes, double radius,
                                       const Rng& rng) {
    if (probes < 2) {
        throw DomainError("estimate_smoothness: need at least 2 probes");
    }
    if (!(radius > 0.0)) {
        throw DomainError("estimate_smoothness: radius must be > 0");
    }
    std::vector<Matrix> p0 = obj.params();
    std::vector<Matrix> g0 = obj.gradient(p0);

    SmoothnessEstimate est;
    est.probes = probes;
    est.radius = radius;
    for (std::size_t k = 0; k < probes; ++k) {
        Rng r = rng.stream("probe", k);
        std::vector<Matrix> dir;
        dir.reserve(p0.size());
        for (const Matrix& m : p0) {
            Matrix d(m.rows(), m.cols());
            for (std::size_t i = 0; i < d.rows(); ++i) {
                for (std::size_t j = 0; j < d.cols(); ++j) {
                    d(i, j) = r.gaussian();
                }
            }
            dir.push_back(std::move(d));
        }
        double norm = stack_norm(dir);
        if (norm < 1e-300) {
            continue;
        }
        for (Matrix& m : dir) {
            m *= 1.0 / norm;
        }
        std::vector<Matrix> p1 = stack_axpy(p0, radius, dir);
        std::vector<Matrix> g1 = obj.gradient(p1);
        std::vector<Matrix> diff = stack_axpy(std::move(g1), -1.0, g0);
        est.lhat = std::max(est.lhat, stack_norm(diff) / radius);
    }
    return est;
}

TheoryReport check_total_differential(const Objective& obj, const std::vector<Matrix>& direction,
                                      std::span<const double> etas) {
    if (etas.empty()) {
        throw DomainError("check_total_differential: need at least one step size");
    }
    for (double eta : etas) {
        if (!(eta > 0.0)) {
            throw DomainError("check_total_differential: step sizes must be > 0");
        }
    }
    if (stack_norm(direction) < 1e-300) {
        throw DomainError("check_total_differential: zero direction");
    }

    std::vector<Matrix> p0 = obj.params();
    check_same_stack(p0, direction, "total differential");
    double l0 = obj.value(p0);
    std::vector<Matrix> g0 = obj.gradient(p0);
    double slope = stack_dot(g0, direction);

    auto remainder = [&](double eta) {
        double l1 = obj.value(stack_axpy(p0, -eta, direction));
        return std::abs(l1 - l0 + eta * slope);
    };

    constexpr double kZeroRemainder = 1e-12;
    constexpr double kRatioLo = 3.5;
    constexpr double kRatioHi = 4.5;

    TheoryReport rep;
    rep.check = "total_differential";
    rep.tolerance = kRatioHi;
    rep.detail = "R(eta)/R(eta/2) in [3.5,4.5], or remainders <= 1e-12";
    rep.pass = true;
    for (std::size_t k = 0; k < etas.size(); ++k) {
        double eta = etas[k];
        double r1 = remainder(eta);
        double r2 = remainder(eta / 2.0);
        rep.measured.emplace_back("eta" + std::to_string(k), eta);
        rep.measured.emplace_back("R" + std::to_string(k), r1);
        if (r1 <= kZeroRemainder && r2 <= kZeroRemainder) {
            rep.measured.emplace_back("ratio" + std::to_string(k), 0.0);
            continue;
        }
        double ratio = r2 > 0.0 ? r1 / r2 : 0.0;
        rep.measured.emplace_back("ratio" + std::to_string(k), ratio);
        if (!(ratio >= kRatioLo && ratio <= kRatioHi)) {
            rep.pass = false;
        }
    }
    return rep;
}

TheoryReport check_descent(const Model& m, const Matrix& batch_x, const Targets& batch_y,
                           const Matrix& support_x, const Targets& support_y,
                           const Strategy& strategy, double eta, std::size_t trials,
                           const Rng& rng) {
    if (trials < 1) {
        throw DomainError("check_descent: need at least one trial");
    }
    SupportLossObjective obj(m, support_x, support_y);
    std::vector<Matrix> p0 = obj.params();
    double l0 = obj.value(p0);
    std::vector<Matrix> grad0 = obj.gradient(p0);
    SmoothnessEstimate sm = estimate_smoothness(obj, 50, 1e-2, rng.stream("smooth"));

    SupportGradient gsup = support_gradient(m, support_x, support_y);
    PerSampleLayerGrads psg = per_sample_layer_grads(m, batch_x, batch_y);
    AlignmentScores scores = alignment_scores(psg, gsup, false);
    SelectionProbs probs = selection_probs(scores);
    const std::size_t depth = m.cfg.depth;
    const std::size_t n = batch_x.rows();

    std::size_t decreases = 0;
    std::size_t guarded = 0;
    std::size_t violations = 0;
    const double slack = 1e-12 * std::max(1.0, std::abs(l0));
    for (std::size_t trial = 0; trial < trials; ++trial) {
        SelectionPlan plan = select(strategy, scores, probs, n, depth, trial, rng);
        std::vector<Matrix> g;
        g.reserve(2 * depth);
        for (std::size_t i = 0; i < depth; ++i) {
            if (plan.selected[i].empty()) {
                g.emplace_back(m.adapters.a[i].rows(), m.adapters.a[i].cols());
                g.emplace_back(m.adapters.b[i].rows(), m.adapters.b[i].cols());
            } else {
                LayerGrads lg = aggregate_selected(psg, plan, i);
                g.push_back(std::move(lg.a));
                g.push_back(std::move(lg.b));
            }
        }
        double inner = stack_dot(grad0, g);
        double gsq = stack_dot(g, g);
        double l1 = obj.value(stack_axpy(p0, -eta, g));
        if (l1 < l0) {
            ++decreases;
        }
        if (gsq <= 0.0 || inner <= 0.0) {
            continue; // guard unsatisfiable for this step direction
        }
        if (sm.lhat > 0.0 && eta > inner / (sm.lhat * gsq)) {
            continue;
        }
        ++guarded;
        double bound = l0 - eta * inner + 0.5 * sm.lhat * eta * eta * gsq;
        if (l1 > bound + slack) {
            ++violations;
        }
    }

    TheoryReport rep;
    rep.check = "descent_bound";
    rep.tolerance = 0.0;
    rep.detail = "loss(p') <= loss(p) - eta*<grad,g> + lhat/2*eta^2*|g|^2 on guard-passing trials";
    rep.pass = violations == 0;
    rep.measured.emplace_back("trials", static_cast<double>(trials));
    rep.measured.emplace_back("guarded", static_cast<double>(guarded));
    rep.measured.emplace_back("violations", static_cast<double>(violations));
    rep.measured.emplace_back("decrease_rate",
                              static_cast<double>(decreases) / static_cast<double>(trials));
    rep.measured.emplace_back("lhat", sm.lhat);
    return rep;
}

TheoryReport check_hybrid_inequality(const Matrix& score_rows, std::size_t fixed_subset_trials,
                                     const Rng& rng) {
    const std::size_t rows = score_rows.rows();
    const std::size_t cols = score_rows.cols();
    if (rows == 0 || cols == 0) {
        throw DomainError("check_hybrid_inequality: empty score matrix");
    }

    std::vector<std::size_t> usable; // rows with a nonempty positive set
    std::size_t empty_rows = 0;
    std::size_t violations = 0;
    std::vector<double> pos_means(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        auto row = score_rows.row(r);
        double pos_sum = 0.0;
        std::size_t pos_count = 0;
        double all_sum = 0.0;
        for (double s : row) {
            all_sum += s;
            if (s > 0.0) {
                pos_sum += s;
                ++pos_count;
            }
        }
        if (pos_count == 0) {
            ++empty_rows;
            continue;
        }
        pos_means[r] = pos_sum / static_cast<double>(pos_count);
        double all_mean = all_sum / static_cast<double>(cols);
        if (pos_means[r] < all_mean - 1e-12) {
            ++violations;
        }
        usable.push_back(r);
    }

    std::size_t satisfied = 0;
    std::size_t ran = 0;
    if (!usable.empty() && cols >= 2) {
        const std::size_t half = std::max<std::size_t>(1, cols / 2);
        for (std::size_t k = 0; k < fixed_subset_trials; ++k) {
            Rng r = rng.stream("subset", k);
            std::size_t row = usable[r.uniform_index(usable.size())];
            auto idx = r.distinct_indices(cols, half);
            double sub = 0.0;
            for (std::size_t j : idx) {
                sub += score_rows(row, j);
            }
            sub /= static_cast<double>(half);
            if (pos_means[row] >= sub - 1e-12) {
                ++satisfied;
            }
            ++ran;
        }
    }
    double rate = ran > 0 ? static_cast<double>(satisfied) / static_cast<double>(ran) : 1.0;

    TheoryReport rep;
    rep.check = "hybrid_inequality";
    rep.tolerance = 1e-12;
    rep.detail = "mean positives >= mean all (exact) and >= random half subsets (rate >= 0.95)";
    rep.pass = violations == 0 && rate >= 0.95;
    rep.measured.emplace_back("rows", static_cast<double>(rows));
    rep.measured.emplace_back("empty_positive_rows", static_cast<double>(empty_rows));
    rep.measured.emplace_back("violations", static_cast<double>(violations));
    rep.measured.emplace_back("subset_rate", rate);
    return rep;
}

std::vector<LayerGrads> finite_difference_oracle(const Model& m, const Matrix& inputs,
                                                 const Targets& targets, double h) {
    if (!(h > 0.0)) {
        throw DomainError("finite_difference_oracle: h must be > 0");
    }
    Model probe = m;
    auto loss = [&]() {
        Matrix logits = forward(probe, inputs);
        Vector losses = per_sample_loss(logits, targets, probe.cfg.loss);
        double acc = 0.0;
        for (std::size_t j = 0; j < losses.len(); ++j) {
            acc += losses[j];
        }
        return acc / static_cast<double>(losses.len());
    };
    auto central = [&](double& param) {
        double orig = param;
        param = orig + h;
        double lp = loss();
        param = orig - h;
        double lm = loss();
        param = orig;
        return (lp - lm) / (2.0 * h);
    };

    std::vector<LayerGrads> out;
    for (std::size_t i = 0; i < m.cfg.depth; ++i) {
        LayerGrads g{Matrix(m.adapters.a[i].rows(), m.adapters.a[i].cols()),
                     Matrix(m.adapters.b[i].rows(), m.adapters.b[i].cols())};
        for (std::size_t p = 0; p < g.a.rows(); ++p) {
            for (std::size_t q = 0; q < g.a.cols(); ++q) {
                g.a(p, q) = central(probe.adapters.a[i](p, q));
            }
        }
        for (std::size_t p = 0; p < g.b.rows(); ++p) {
            for (std::size_t q = 0; q < g.b.cols(); ++q) {
                g.b(p, q) = central(probe.adapters.b[i](p, q));
            }
        }
        out.push_back(std::move(g));
    }
    return out;
}

TheoryReport run_grad_check(std::size_t pairs, const Rng& rng, double inject_bias) {
    if (pairs < 1) {
        throw DomainError("run_grad_check: need at least one pair");
    }
    double max_rel = 0.0;
    for (std::size_t k = 0; k < pairs; ++k) {
        Rng r = rng.stream("pair", k);
        ModelConfig cfg;
        cfg.depth = 1 + r.uniform_index(3);
        cfg.widths.resize(cfg.depth + 1);
        for (auto& w : cfg.widths) {
            w = 2 + r.uniform_index(4);
        }
        std::size_t min_w = *std::min_element(cfg.widths.begin(), cfg.widths.end());
        cfg.rank = 1 + r.uniform_index(min_w);
        // Central differences need a smooth loss surface, so relu stays out.
        cfg.activation = r.uniform() < 0.5 ? Activation::Tanh : Activation::Identity;
        cfg.loss = r.uniform() < 0.5 ? LossKind::Mse : LossKind::CrossEntropy;

        Model m = init_model(cfg, r.stream("init"));
        Rng fill = r.stream("fill");
        for (std::size_t i = 0; i < cfg.depth; ++i) {
            for (std::size_t p = 0; p < m.adapters.b[i].rows(); ++p) {
                for (std::size_t q = 0; q < m.adapters.b[i].cols(); ++q) {
                    m.adapters.b[i](p, q) = 0.3 * fill.gaussian();
                }
            }
        }

        Matrix x(1, cfg.widths[0]);
        Rng data = r.stream("data");
        for (std::size_t c = 0; c < x.cols(); ++c) {
            x(0, c) = data.gaussian();
        }
        Targets y;
        if (cfg.loss == LossKind::Mse) {
            y.values = Matrix(1, cfg.widths.back());
            for (std::size_t c = 0; c < y.values.cols(); ++c) {
                y.values(0, c) = data.gaussian();
            }
        } else {
            y.classes.push_back(static_cast<int>(data.uniform_index(cfg.widths.back())));
        }

        PerSampleLayerGrads psg = per_sample_layer_grads(m, x, y);
        std::vector<LayerGrads> fd = finite_difference_oracle(m, x, y, 1e-5);
        for (std::size_t i = 0; i < cfg.depth; ++i) {
            auto compare = [&](const Matrix& an, const Matrix& ref) {
                for (std::size_t p = 0; p < an.rows(); ++p) {
                    for (std::size_t q = 0; q < an.cols(); ++q) {
                        double a = an(p, q) + inject_bias;
                        double f = ref(p, q);
                        max_rel = std::max(max_rel, std::abs(a - f) / std::max(1.0, std::abs(f)));
                    }
                }
            };
            compare(psg.g[i][0].a, fd[i].a);
            compare(psg.g[i][0].b, fd[i].b);
        }
    }

    TheoryReport rep;
    rep.check = "grad_check";
    rep.tolerance = 1e-5;
    rep.detail = "analytic vs central finite differences, rel err vs max(1,|g|)";
    rep.pass = max_rel <= rep.tolerance;
    rep.measured.emplace_back("pairs", static_cast<double>(pairs));
    rep.measured.emplace_back("max_rel_err", max_rel);
    return rep;
}

} // namespace gast
