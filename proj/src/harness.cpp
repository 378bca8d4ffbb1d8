#include "gast/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>

#include "gast/artifacts.hpp"
#include "gast/errors.hpp"
#include "gast/theory.hpp"

namespace fs = std::filesystem;

namespace gast {

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            if (!cur.empty()) {
                out.push_back(cur);
            }
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) {
        out.push_back(cur);
    }
    return out;
}

struct ExperimentData {
    Dataset train;
    Dataset support;
    Dataset val;
};

ExperimentData prepare_data(const RunConfig& cfg) {
    Dataset ds = cfg.data.source == "synthetic"
                     ? gen_conflict_task(cfg.data.synthetic, cfg.seed)
                     : load_dataset(cfg.data.path, cfg.data.format);
    Splits sp = split(ds, cfg.data.fractions, cfg.seed);
    ExperimentData ed;
    ed.train = std::move(sp.train);
    ed.val = std::move(sp.val);
    ed.support = cfg.train.support_source == SupportSource::WholeTrain ? ed.train
                                                                       : std::move(sp.support);
    return ed;
}

template <typename F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}

TheoryReport derived_decrease_row(const TheoryReport& descent) {
    TheoryReport rep;
    rep.check = "descent_decrease";
    rep.deterministic = false;
    rep.tolerance = 0.9;
    rep.detail = "fraction of trials with a strict support-loss decrease";
    double rate = 0.0;
    for (const auto& [k, v] : descent.measured) {
        if (k == "decrease_rate") {
            rate = v;
        }
    }
    rep.measured.emplace_back("decrease_rate", rate);
    rep.pass = rate >= rep.tolerance;
    return rep;
}

std::vector<Matrix> random_stack(Rng& r, std::initializer_list<std::pair<std::size_t, std::size_t>> shapes) {
    std::vector<Matrix> out;
    for (auto [rows, cols] : shapes) {
        Matrix m(rows, cols);
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) {
                m(i, j) = r.gaussian();
            }
        }
        out.push_back(std::move(m));
    }
    return out;
}

// The suite behind both `theory` and the report emitted after `train`.
std::vector<TheoryReport> run_theory_suite(const RunConfig& cfg, const ExperimentData& ed,
                                           const TheoryKnobs& knobs, double inject_bias) {
    std::vector<TheoryReport> reps;
    Rng root(cfg.seed);

    reps.push_back(run_grad_check(knobs.grad_check_pairs, root.stream("theory_gradcheck"),
                                  inject_bias));

    {
        Rng r = root.stream("theory_linear");
        LinearObjective obj(random_stack(r, {{3, 4}, {2, 2}}), random_stack(r, {{3, 4}, {2, 2}}));
        std::vector<Matrix> dir = random_stack(r, {{3, 4}, {2, 2}});
        TheoryReport rep = check_total_differential(obj, dir, knobs.etas);
        rep.check = "total_differential_linear";
        rep.detail = "linear objective; remainders must vanish";
        reps.push_back(rep);
    }

    {
        // A smooth tanh-mse adapter objective probed along its own gradient.
        Rng r = root.stream("theory_tdiff");
        ModelConfig mc = cfg.model;
        mc.activation = Activation::Tanh;
        mc.loss = LossKind::Mse;
        Model m = init_model(mc, r.stream("init"));
        Rng fill = r.stream("fill");
        for (std::size_t i = 0; i < mc.depth; ++i) {
            for (std::size_t p = 0; p < m.adapters.b[i].rows(); ++p) {
                for (std::size_t q = 0; q < m.adapters.b[i].cols(); ++q) {
                    m.adapters.b[i](p, q) = 0.2 * fill.gaussian();
                }
            }
        }
        Rng data = r.stream("data");
        Matrix x(8, mc.widths.front());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) {
                x(i, j) = data.gaussian();
            }
        }
        Targets y;
        y.values = Matrix(8, mc.widths.back());
        for (std::size_t i = 0; i < y.values.rows(); ++i) {
            for (std::size_t j = 0; j < y.values.cols(); ++j) {
                y.values(i, j) = data.gaussian();
            }
        }
        SupportLossObjective obj(std::move(m), std::move(x), std::move(y));
        TheoryReport rep = check_total_differential(obj, obj.gradient(obj.params()), knobs.etas);
        rep.check = "total_differential_model";
        reps.push_back(rep);

        SmoothnessEstimate sm = estimate_smoothness(obj, knobs.smoothness_probes,
                                                    knobs.smoothness_radius,
                                                    root.stream("theory_smooth"));
        TheoryReport smooth;
        smooth.check = "smoothness";
        smooth.pass = true;
        smooth.tolerance = 0.0;
        smooth.detail = "estimated gradient Lipschitz constant (informational)";
        smooth.measured.emplace_back("lhat", sm.lhat);
        smooth.measured.emplace_back("probes", static_cast<double>(sm.probes));
        reps.push_back(smooth);
    }

    {
        Model m = init_model(cfg.model, Rng(cfg.seed).stream("init"));
        std::size_t bsz = std::min<std::size_t>(cfg.train.batch_size, ed.train.size());
        std::vector<std::size_t> rows(bsz);
        for (std::size_t i = 0; i < bsz; ++i) {
            rows[i] = i;
        }
        Dataset batch = take_rows(ed.train, rows);
        Rng sup_rng = root.stream("theory_descent_support");
        auto sup_rows = sup_rng.distinct_indices(
            ed.support.size(), std::min<std::size_t>(cfg.train.support_batch_size,
                                                     ed.support.size()));
        Dataset sup = take_rows(ed.support, sup_rows);

        Strategy strat = cfg.train.strategy;
        bool gast_family = strat.kind == StrategyKind::GastSampling ||
                           strat.kind == StrategyKind::GastTopK ||
                           strat.kind == StrategyKind::GastRandom;
        if (!gast_family) {
            strat = Strategy{};
        }
        strat.k = std::min(strat.k, bsz);

        TheoryReport descent = check_descent(
            m, batch.inputs, Targets::from_dataset(batch, m.cfg.loss), sup.inputs,
            Targets::from_dataset(sup, m.cfg.loss), strat, knobs.descent_eta,
            knobs.descent_trials, root.stream("theory_descent"));
        reps.push_back(descent);
        reps.push_back(derived_decrease_row(descent));
    }

    {
        Rng r = root.stream("theory_hybrid");
        Matrix rows(knobs.hybrid_rows, 16);
        for (std::size_t i = 0; i < rows.rows(); ++i) {
            for (std::size_t j = 0; j < rows.cols(); ++j) {
                rows(i, j) = r.gaussian();
            }
        }
        reps.push_back(check_hybrid_inequality(rows, knobs.hybrid_trials,
                                               root.stream("theory_hybrid_subsets")));
    }

    return reps;
}

void print_reports(const std::vector<TheoryReport>& reps) {
    for (const TheoryReport& r : reps) {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.check;
        for (const auto& [k, v] : r.measured) {
            std::cout << "  " << k << "=" << v;
        }
        std::cout << "\n";
    }
}

std::string join_path(const std::string& dir, const std::string& file) {
    return (fs::path(dir) / file).string();
}

} // namespace

RunConfig load_and_merge(const std::string& config_path, const CliOverrides& ovr) {
    RunConfig cfg = load_run_config(config_path);
    if (ovr.seed) {
        cfg.seed = *ovr.seed;
        cfg.has_seed = true;
    }
    if (ovr.out_dir) {
        cfg.out_dir = *ovr.out_dir;
    }
    if (!cfg.out_dir.empty() && fs::path(cfg.out_dir).is_relative()) {
        if (const char* root = std::getenv("GAST_OUT_ROOT")) {
            cfg.out_dir = (fs::path(root) / cfg.out_dir).string();
        }
    }
    if (ovr.strategies) {
        cfg.compare.strategies = split_list(*ovr.strategies);
    }
    if (ovr.seeds) {
        cfg.compare.seeds.clear();
        for (const std::string& s : split_list(*ovr.seeds)) {
            try {
                cfg.compare.seeds.push_back(std::stoull(s));
            } catch (const std::exception&) {
                throw ConfigError("--seeds: bad seed \"" + s + "\"");
            }
        }
    }
    cfg.validate();
    cfg.train.seed = cfg.seed;
    return cfg;
}

int cmd_train(const std::string& config_path, const CliOverrides& ovr) {
    return guarded([&] {
        RunConfig cfg = load_and_merge(config_path, ovr);
        ExperimentData ed = prepare_data(cfg);
        fs::create_directories(cfg.out_dir);

        Model model = init_model(cfg.model, Rng(cfg.seed).stream("init"));
        RunResult run = run_training(cfg.train, std::move(model), ed.train, ed.support, ed.val);

        write_metrics_csv(join_path(cfg.out_dir, "metrics.csv"), run.metrics);
        write_selection_log_csv(join_path(cfg.out_dir, "selection_log.csv"), run.plans,
                                run.batch_rows);
        write_probs_heatmap_csv(join_path(cfg.out_dir, "probs_heatmap.csv"), run.probs);
        write_layer_histogram_csv(join_path(cfg.out_dir, "layer_histogram.csv"), run.plans,
                                  run.batch_rows, ed.train.size());

        TheoryKnobs quick = cfg.theory;
        quick.grad_check_pairs = std::min<std::size_t>(quick.grad_check_pairs, 10);
        quick.descent_trials = std::min<std::size_t>(quick.descent_trials, 50);
        quick.hybrid_rows = std::min<std::size_t>(quick.hybrid_rows, 200);
        quick.hybrid_trials = std::min<std::size_t>(quick.hybrid_trials, 200);
        quick.smoothness_probes = std::min<std::size_t>(quick.smoothness_probes, 20);
        auto reps = run_theory_suite(cfg, ed, quick, 0.0);
        write_theory_report_csv(join_path(cfg.out_dir, "theory_report.csv"), reps);

        write_manifest(join_path(cfg.out_dir, "manifest.json"), cfg);
        save_checkpoint(run.model, join_path(cfg.out_dir, "model.ckpt"));

        if (ovr.svg) {
            write_loss_curve_svg(join_path(cfg.out_dir, "loss_curves.svg"), run.metrics);
            if (!run.probs.empty()) {
                write_probs_heatmap_svg(join_path(cfg.out_dir, "probs_heatmap.svg"),
                                        run.probs.back());
            }
            std::vector<double> hist;
            for (const auto& row :
                 read_csv(join_path(cfg.out_dir, "layer_histogram.csv"))) {
                if (row.size() == 2 && row[0] != "rank") {
                    hist.push_back(std::stod(row[1]));
                }
            }
            write_layer_histogram_svg(join_path(cfg.out_dir, "layer_histogram.svg"), hist);
        }

        std::cout << "strategy " << cfg.train.strategy.str() << ", " << cfg.train.steps
                  << " steps: final val loss " << run.final_eval.mean_loss;
        if (run.final_eval.has_accuracy) {
            std::cout << ", accuracy " << run.final_eval.accuracy;
        }
        std::cout << "\nartifacts in " << cfg.out_dir << "\n";
        return kExitOk;
    });
}

int cmd_compare(const std::string& config_path, const CliOverrides& ovr) {
    return guarded([&] {
        RunConfig cfg = load_and_merge(config_path, ovr);
        ExperimentData ed = prepare_data(cfg);
        fs::create_directories(cfg.out_dir);

        std::vector<Strategy> strategies;
        for (const std::string& name : cfg.compare.strategies) {
            strategies.push_back(Strategy::parse(name));
        }
        std::vector<std::uint64_t> seeds =
            cfg.compare.seeds.empty() ? std::vector<std::uint64_t>{cfg.seed} : cfg.compare.seeds;

        auto stats = compare_strategies(cfg.train, cfg.model, strategies, ed.train, ed.support,
                                        ed.val, seeds);

        write_compare_curves_csv(join_path(cfg.out_dir, "compare_curves.csv"), stats);
        write_compare_table_csv(join_path(cfg.out_dir, "compare_table.csv"), stats);
        write_manifest(join_path(cfg.out_dir, "manifest.json"), cfg);
        if (ovr.svg) {
            write_compare_curves_svg(join_path(cfg.out_dir, "compare_curves.svg"), stats);
        }

        for (const StrategyStats& s : stats) {
            std::cout << s.strategy << ": final val loss " << s.mean_final << " +- "
                      << s.std_final << " over " << s.seeds.size() << " seeds";
            if (!s.failures.empty()) {
                std::cout << " (" << s.failures.size() << " failed)";
            }
            std::cout << "\n";
        }
        std::cout << "artifacts in " << cfg.out_dir << "\n";
        return kExitOk;
    });
}

int cmd_theory(const std::string& config_path, const CliOverrides& ovr) {
    return guarded([&] {
        RunConfig cfg = load_and_merge(config_path, ovr);
        ExperimentData ed = prepare_data(cfg);
        fs::create_directories(cfg.out_dir);

        auto reps = run_theory_suite(cfg, ed, cfg.theory, ovr.inject_grad_bias);
        write_theory_report_csv(join_path(cfg.out_dir, "theory_report.csv"), reps);
        write_manifest(join_path(cfg.out_dir, "manifest.json"), cfg);
        print_reports(reps);

        bool ok = std::all_of(reps.begin(), reps.end(),
                              [](const TheoryReport& r) { return !r.deterministic || r.pass; });
        return ok ? kExitOk : kExitCheckFailed;
    });
}

int cmd_report(const std::string& artifacts_dir, bool svg) {
    return guarded([&] {
        const char* needed[] = {"metrics.csv", "selection_log.csv", "probs_heatmap.csv",
                                "layer_histogram.csv", "theory_report.csv"};
        for (const char* name : needed) {
            if (!fs::exists(fs::path(artifacts_dir) / name)) {
                throw IoError("missing artifact " + std::string(name) + " in " + artifacts_dir);
            }
        }

        // Simplex check over the emitted heatmap rows.
        auto heat = read_csv(join_path(artifacts_dir, "probs_heatmap.csv"));
        std::map<std::pair<long, long>, double> sums;
        std::size_t last_step = 0;
        std::size_t layers = 0;
        std::size_t samples = 0;
        for (std::size_t r = 1; r < heat.size(); ++r) {
            const auto& row = heat[r];
            if (row.size() != 4) {
                throw ParseError("probs_heatmap.csv: expected 4 columns", r + 1);
            }
            long step = std::stol(row[0]);
            long layer = std::stol(row[1]);
            sums[{step, layer}] += std::stod(row[3]);
            last_step = std::max(last_step, static_cast<std::size_t>(step));
            layers = std::max(layers, static_cast<std::size_t>(layer) + 1);
            samples = std::max(samples, static_cast<std::size_t>(std::stol(row[2])) + 1);
        }
        std::size_t bad = 0;
        for (const auto& [key, sum] : sums) {
            if (std::abs(sum - 1.0) > 1e-9) {
                ++bad;
            }
        }

        auto hist = read_csv(join_path(artifacts_dir, "layer_histogram.csv"));
        std::vector<double> values;
        for (std::size_t r = 1; r < hist.size(); ++r) {
            values.push_back(std::stod(hist[r][1]));
        }

        if (svg) {
            auto metrics = read_csv(join_path(artifacts_dir, "metrics.csv"));
            std::vector<MetricsRecord> recs;
            for (std::size_t r = 1; r < metrics.size(); ++r) {
                MetricsRecord rec;
                rec.step = static_cast<std::size_t>(std::stoul(metrics[r][0]));
                rec.train_loss = std::stod(metrics[r][2]);
                rec.val_loss = metrics[r][4].empty() ? rec.train_loss : std::stod(metrics[r][4]);
                recs.push_back(rec);
            }
            write_loss_curve_svg(join_path(artifacts_dir, "loss_curves.svg"), recs);

            SelectionProbs last;
            last.values = Matrix(layers, samples);
            for (std::size_t r = 1; r < heat.size(); ++r) {
                if (static_cast<std::size_t>(std::stol(heat[r][0])) == last_step) {
                    last.values(static_cast<std::size_t>(std::stol(heat[r][1])),
                                static_cast<std::size_t>(std::stol(heat[r][2]))) =
                        std::stod(heat[r][3]);
                }
            }
            write_probs_heatmap_svg(join_path(artifacts_dir, "probs_heatmap.svg"), last);
            write_layer_histogram_svg(join_path(artifacts_dir, "layer_histogram.svg"), values);
        }

        std::cout << "probability rows: " << sums.size() << " (step,layer) groups, " << bad
                  << " off-simplex\n";
        if (!values.empty()) {
            auto [mn, mx] = std::minmax_element(values.begin(), values.end());
            std::cout << "layers trained per sample: min " << *mn << ", max " << *mx << "\n";
        }
        return bad == 0 ? kExitOk : kExitCheckFailed;
    });
}

} // namespace gast
