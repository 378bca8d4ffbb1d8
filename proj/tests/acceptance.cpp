// Acceptance gate: every release-blocking property in one binary, one
// PASS/FAIL line per criterion, exit 0 only when all ten hold.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gast/artifacts.hpp"
#include "gast/config.hpp"
#include "gast/data.hpp"
#include "gast/gradients.hpp"
#include "gast/model.hpp"
#include "gast/selection.hpp"
#include "gast/theory.hpp"
#include "gast/trainer.hpp"
#include "helpers.hpp"

using namespace gast;

namespace {

int g_failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
    std::printf("%s  %s: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!pass) {
        ++g_failures;
    }
}

double measured(const TheoryReport& rep, const std::string& key) {
    for (const auto& [k, v] : rep.measured) {
        if (k == key) {
            return v;
        }
    }
    return std::nan("");
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            m(i, j) = rng.gaussian();
        }
    }
    return m;
}

Model random_adapter_model(const ModelConfig& cfg, std::uint64_t seed, double b_scale) {
    Model m = init_model(cfg, Rng(seed).stream("init"));
    Rng fill = Rng(seed).stream("bfill");
    for (std::size_t i = 0; i < cfg.depth; ++i) {
        for (std::size_t p = 0; p < m.adapters.b[i].rows(); ++p) {
            for (std::size_t q = 0; q < m.adapters.b[i].cols(); ++q) {
                m.adapters.b[i](p, q) = b_scale * fill.gaussian();
            }
        }
    }
    return m;
}

// ------------------------------------------------------------ criteria

void c1_gradient_oracle() {
    TheoryReport rep = run_grad_check(100, Rng(2026).stream("c1"));
    double err = measured(rep, "max_rel_err");
    report("C1 gradient oracle", rep.pass && err <= 1e-5,
           "100 random (model, sample) pairs vs central differences, max_rel_err=" + fmt(err) +
               " (tol 1e-5)");
}

void c2_hybrid_dominance() {
    Rng rng = Rng(2026).stream("c2");
    Matrix rows = gaussian_matrix(1000, 16, rng);
    TheoryReport rep = check_hybrid_inequality(rows, 1000, Rng(2026).stream("c2_subsets"));
    double violations = measured(rep, "violations");
    double rate = measured(rep, "subset_rate");
    report("C2 hybrid dominance", violations == 0.0 && rate >= 0.95,
           "1000 score rows: positive-mean violations=" + fmt(violations) +
               ", half-subset win rate=" + fmt(rate) + " (need 0 and >= 0.95)");
}

void c3_total_differential() {
    const std::vector<double> etas = {1e-2, 5e-3, 2.5e-3};

    ModelConfig mc = RunConfig::default_model();
    mc.activation = Activation::Tanh;
    mc.loss = LossKind::Mse;
    Model m = random_adapter_model(mc, 31, 0.2);
    Rng data = Rng(2026).stream("c3_data");
    Matrix x = gaussian_matrix(8, mc.widths.front(), data);
    Targets y;
    y.values = gaussian_matrix(8, mc.widths.back(), data);
    SupportLossObjective obj(std::move(m), std::move(x), std::move(y));
    TheoryReport model_rep = check_total_differential(obj, obj.gradient(obj.params()), etas);
    bool ratios_ok = true;
    std::string ratios;
    for (std::size_t k = 0; k < etas.size(); ++k) {
        double r = measured(model_rep, "ratio" + std::to_string(k));
        ratios_ok = ratios_ok && r >= 3.5 && r <= 4.5;
        ratios += (k ? "," : "") + fmt(r);
    }

    Rng lin = Rng(2026).stream("c3_linear");
    std::vector<Matrix> coeffs{gaussian_matrix(3, 4, lin), gaussian_matrix(2, 2, lin)};
    std::vector<Matrix> start{gaussian_matrix(3, 4, lin), gaussian_matrix(2, 2, lin)};
    std::vector<Matrix> dir{gaussian_matrix(3, 4, lin), gaussian_matrix(2, 2, lin)};
    LinearObjective lobj(coeffs, start);
    TheoryReport lin_rep = check_total_differential(lobj, dir, etas);
    double worst_r = 0.0;
    for (std::size_t k = 0; k < etas.size(); ++k) {
        worst_r = std::max(worst_r, measured(lin_rep, "R" + std::to_string(k)));
    }

    report("C3 total differential", ratios_ok && worst_r <= 1e-12,
           "tanh-mse remainder ratios {" + ratios + "} in [3.5,4.5]; linear max remainder=" +
               fmt(worst_r) + " (tol 1e-12)");
}

void c4_descent(const Dataset& train, const Dataset& support) {
    Model m = init_model(RunConfig::default_model(), Rng(2026).stream("c4_init"));
    std::vector<std::size_t> batch_rows(16);
    for (std::size_t i = 0; i < 16; ++i) {
        batch_rows[i] = i;
    }
    Dataset batch = take_rows(train, batch_rows);
    Rng sup_rng = Rng(2026).stream("c4_support");
    Dataset sup = take_rows(support, sup_rng.distinct_indices(support.size(), 4));

    TheoryReport rep = check_descent(m, batch.inputs, Targets::from_dataset(batch, m.cfg.loss),
                                     sup.inputs, Targets::from_dataset(sup, m.cfg.loss),
                                     Strategy::parse("gast:8"), 1e-3, 200,
                                     Rng(2026).stream("c4"));
    double rate = measured(rep, "decrease_rate");
    double violations = measured(rep, "violations");
    double guarded = measured(rep, "guarded");
    report("C4 descent", rate >= 0.9 && violations == 0.0,
           "eta=1e-3, 200 sampled plans: decrease rate=" + fmt(rate) +
               " (need >= 0.9), bound violations=" + fmt(violations) + " over " + fmt(guarded) +
               " guarded trials, lhat=" + fmt(measured(rep, "lhat")));
}

void c5_mode_equivalence() {
    Rng root(2026);
    std::size_t bad = 0;
    for (std::size_t t = 0; t < 50; ++t) {
        Rng r = root.stream("c5", t);
        ModelConfig mc;
        mc.depth = 1 + r.uniform_index(3);
        mc.widths.clear();
        for (std::size_t i = 0; i <= mc.depth; ++i) {
            mc.widths.push_back(2 + r.uniform_index(5));
        }
        std::size_t min_w = *std::min_element(mc.widths.begin(), mc.widths.end());
        mc.rank = 1 + r.uniform_index(std::min<std::size_t>(3, min_w));
        mc.activation = r.uniform_index(2) == 0 ? Activation::Tanh : Activation::Relu;
        mc.loss = r.uniform_index(2) == 0 ? LossKind::Mse : LossKind::CrossEntropy;
        if (mc.loss == LossKind::CrossEntropy && mc.widths.back() < 2) {
            mc.widths.back() = 2;
        }
        Model m = random_adapter_model(mc, 1000 + t, 0.3);

        std::size_t bsz = 1 + r.uniform_index(16);
        Matrix x = gaussian_matrix(bsz, mc.widths.front(), r);
        Targets y;
        if (mc.loss == LossKind::Mse) {
            y.values = gaussian_matrix(bsz, mc.widths.back(), r);
        } else {
            for (std::size_t j = 0; j < bsz; ++j) {
                y.classes.push_back(static_cast<int>(r.uniform_index(mc.widths.back())));
            }
        }

        SelectionPlan plan;
        plan.batch_size = bsz;
        plan.selected.resize(mc.depth);
        for (std::size_t i = 0; i < mc.depth; ++i) {
            if (r.uniform_index(5) == 0) {
                continue; // skipped layer
            }
            plan.selected[i] = r.distinct_indices(bsz, 1 + r.uniform_index(bsz));
        }

        auto stored = grads_via_mode(GradMode::StorePerSample, m, x, y, plan);
        auto streamed = grads_via_mode(GradMode::TwoPass, m, x, y, plan);
        bool same = stored.size() == streamed.size();
        for (std::size_t i = 0; same && i < stored.size(); ++i) {
            if (stored[i].has_value() != streamed[i].has_value()) {
                same = false;
            } else if (stored[i] &&
                       !(testutil::bit_equal(stored[i]->a, streamed[i]->a) &&
                         testutil::bit_equal(stored[i]->b, streamed[i]->b))) {
                same = false;
            }
        }
        if (!same) {
            ++bad;
        }
    }
    report("C5 mode equivalence", bad == 0,
           "store-all vs two-pass aggregates over 50 random (model, batch, plan) triples: " +
               std::to_string(50 - bad) + "/50 bit-identical");
}

struct CompareOutcome {
    std::map<std::string, const StrategyStats*> by_name;
    std::vector<StrategyStats> stats;
    bool clean = true;
};

CompareOutcome run_protocol_compare(const Dataset& train, const Dataset& support,
                                    const Dataset& val) {
    TrainConfig base;
    base.steps = 1000;
    base.batch_size = 16;
    base.lr = 1e-2;
    base.support_batch_size = 4;
    base.eval_interval = 50;

    std::vector<std::string> names = {"gast:8",  "dense",   "layer:0.5", "data:0.5", "topk:8",
                                      "gast:16", "gast:12", "gast:4",    "gast:2"};
    std::vector<Strategy> strategies;
    for (const std::string& n : names) {
        strategies.push_back(Strategy::parse(n));
    }
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; s <= 10; ++s) {
        seeds.push_back(s);
    }

    CompareOutcome out;
    out.stats = compare_strategies(base, RunConfig::default_model(), strategies, train, support,
                                   val, seeds);
    for (const StrategyStats& s : out.stats) {
        out.clean = out.clean && s.failures.empty() && s.final_val_losses.size() == 10;
    }
    for (const StrategyStats& s : out.stats) {
        out.by_name[s.strategy] = &s;
    }
    return out;
}

std::string mean_sd(const StrategyStats& s) {
    return s.strategy + "=" + fmt(s.mean_final) + "+-" + fmt(s.std_final);
}

void c6_convergence_ordering(const CompareOutcome& cmp) {
    const StrategyStats& gast = *cmp.by_name.at("gast:8");
    const StrategyStats& dense = *cmp.by_name.at("dense");
    const StrategyStats& layer = *cmp.by_name.at("layer:0.5");
    const StrategyStats& data = *cmp.by_name.at("data:0.5");
    bool ok = cmp.clean && gast.mean_final <= dense.mean_final &&
              gast.mean_final <= layer.mean_final && gast.mean_final <= data.mean_final;
    report("C6 convergence ordering", ok,
           "mean final val loss over 10 seeds (1-sigma): " + mean_sd(gast) + " vs " +
               mean_sd(dense) + ", " + mean_sd(layer) + ", " + mean_sd(data));
}

void c7_sparsity_sweep(const CompareOutcome& cmp) {
    // B=16, so K in {16,12,8,4,2} covers sparsities {0,.25,.5,.75,.875}.
    const StrategyStats& s000 = *cmp.by_name.at("gast:16");
    const StrategyStats& s025 = *cmp.by_name.at("gast:12");
    const StrategyStats& s050 = *cmp.by_name.at("gast:8");
    const StrategyStats& s075 = *cmp.by_name.at("gast:4");
    const StrategyStats& s875 = *cmp.by_name.at("gast:2");
    bool ok = cmp.clean && s050.mean_final <= s000.mean_final &&
              s050.mean_final <= s875.mean_final;
    report("C7 sparsity sweep", ok,
           "mean final val loss by sparsity: 0->" + fmt(s000.mean_final) + " .25->" +
               fmt(s025.mean_final) + " .5->" + fmt(s050.mean_final) + " .75->" +
               fmt(s075.mean_final) + " .875->" + fmt(s875.mean_final) +
               " (need .5 <= 0 and .5 <= .875)");
}

void c8_strategy_direction(const CompareOutcome& cmp) {
    const StrategyStats& samp = *cmp.by_name.at("gast:8");
    const StrategyStats& topk = *cmp.by_name.at("topk:8");
    bool ok = cmp.clean && samp.mean_final <= topk.mean_final;
    report("C8 selection strategy", ok,
           "4-sample support mini-batch, 10 seeds: sampling " + mean_sd(samp) + " vs top-k " +
               mean_sd(topk) + " (need sampling <= top-k in mean)");
}

void c9_determinism() {
    SyntheticSpec spec;
    spec.n = 64;
    spec.label_noise = 0.1;
    Dataset ds = gen_conflict_task(spec, 5);
    Splits sp = split(ds, SplitFractions{}, 5);

    TrainConfig cfg;
    cfg.steps = 40;
    cfg.batch_size = 16;
    cfg.lr = 1e-2;
    cfg.support_batch_size = 4;
    cfg.eval_interval = 10;
    cfg.seed = 5;
    cfg.strategy = Strategy::parse("gast:8");

    ModelConfig mc = RunConfig::default_model();
    auto run = [&] {
        Model m = init_model(mc, Rng(cfg.seed).stream("init"));
        return run_training(cfg, std::move(m), sp.train, sp.train, sp.val);
    };
    RunResult r1 = run();
    RunResult r2 = run();

    testutil::TempDir tmp("acceptance_c9");
    write_metrics_csv(tmp.file("m1.csv"), r1.metrics);
    write_metrics_csv(tmp.file("m2.csv"), r2.metrics);
    bool bytes_equal = testutil::read_file(tmp.file("m1.csv")) ==
                       testutil::read_file(tmp.file("m2.csv"));

    double worst_simplex = 0.0;
    for (const SelectionProbs& p : r1.probs) {
        for (std::size_t i = 0; i < p.values.rows(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < p.values.cols(); ++j) {
                sum += p.values(i, j);
            }
            worst_simplex = std::max(worst_simplex, std::abs(sum - 1.0));
        }
    }

    bool plans_ok = true;
    for (const SelectionPlan& plan : r1.plans) {
        std::size_t want = std::min<std::size_t>(8, plan.batch_size);
        for (const auto& sel : plan.selected) {
            if (sel.size() != want) {
                plans_ok = false;
            }
            for (std::size_t j = 1; j < sel.size(); ++j) {
                if (sel[j] <= sel[j - 1]) {
                    plans_ok = false; // not strictly ascending => duplicate
                }
            }
        }
    }

    // Frozen optimizer: with eta=0 nothing may drift. Whole-set batches and
    // support keep every loss deterministic step to step.
    TrainConfig frozen = cfg;
    frozen.lr = 0.0;
    frozen.steps = 12;
    frozen.batch_size = sp.train.size();
    frozen.support_batch_size = sp.train.size();
    frozen.eval_interval = 1;
    RunResult rf = run_training(frozen, init_model(mc, Rng(5).stream("init")), sp.train, sp.train,
                                sp.val);
    bool frozen_ok = !rf.metrics.empty();
    const MetricsRecord& first = rf.metrics.front();
    for (const MetricsRecord& rec : rf.metrics) {
        double tol = 1e-12 * std::max(1.0, std::abs(first.train_loss));
        frozen_ok = frozen_ok && std::abs(rec.train_loss - first.train_loss) <= tol &&
                    rec.support_loss == first.support_loss && rec.val_loss == first.val_loss;
    }

    report("C9 determinism and interfaces",
           bytes_equal && worst_simplex <= 1e-9 && plans_ok && frozen_ok,
           std::string("metrics.csv rerun byte-identical=") + (bytes_equal ? "yes" : "NO") +
               ", max |prob row sum - 1|=" + fmt(worst_simplex) +
               ", plans all min(K,B) distinct=" + (plans_ok ? "yes" : "NO") +
               ", eta=0 losses constant=" + (frozen_ok ? "yes" : "NO"));
}

void c10_affine_invariance() {
    Rng root(2026);
    std::size_t bad = 0;
    double worst = 0.0;
    for (std::size_t t = 0; t < 100; ++t) {
        Rng r = root.stream("c10", t);
        AlignmentScores s;
        // Rows at raw alignment-score scale (gradient inner products are
        // well above 1); the normalization epsilon is additive, so exact
        // invariance holds only up to ~eps/std of the row.
        s.values = gaussian_matrix(1, 16, r);
        s.values *= 100.0;
        double a = 0.5 + 2.5 * r.uniform();
        double b = 100.0 * r.gaussian();
        AlignmentScores st;
        st.values = Matrix(1, 16);
        for (std::size_t j = 0; j < 16; ++j) {
            st.values(0, j) = a * s.values(0, j) + b;
        }

        SelectionProbs p = selection_probs(s);
        SelectionProbs pt = selection_probs(st);
        for (std::size_t j = 0; j < 16; ++j) {
            worst = std::max(worst, std::abs(p.values(0, j) - pt.values(0, j)));
        }

        Strategy topk = Strategy::parse("topk:5");
        SelectionPlan k1 = select(topk, s, p, 16, 1, t, root);
        SelectionPlan k2 = select(topk, st, pt, 16, 1, t, root);
        if (worst > 1e-9 || k1.selected != k2.selected) {
            ++bad;
        }
    }
    report("C10 affine invariance", bad == 0,
           "100 rows under s -> a*s+b: max prob shift=" + fmt(worst) +
               " (tol 1e-9), top-k index sets identical=" + (bad == 0 ? "yes" : "NO"));
}

} // namespace

int main() {
    auto t0 = std::chrono::steady_clock::now();

    c1_gradient_oracle();
    c2_hybrid_dominance();
    c3_total_differential();

    // Shared protocol task: two latent groups at 120 degrees, default model
    // depth 6, B=16, whole-train support.
    SyntheticSpec spec;
    spec.n = 512;
    spec.conflict_angle_deg = 120.0;
    spec.label_noise = 0.0;
    Dataset ds = gen_conflict_task(spec, 2026);
    Splits sp = split(ds, SplitFractions{}, 2026);

    c4_descent(sp.train, sp.train);
    c5_mode_equivalence();

    CompareOutcome cmp = run_protocol_compare(sp.train, sp.train, sp.val);
    c6_convergence_ordering(cmp);
    c7_sparsity_sweep(cmp);
    c8_strategy_direction(cmp);

    c9_determinism();
    c10_affine_invariance();

    auto secs = std::chrono::duration_cast<std::chrono::seconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    std::printf("%d/10 criteria passed (%llds)\n", 10 - g_failures,
                static_cast<long long>(secs));
    return g_failures == 0 ? 0 : 1;
}
