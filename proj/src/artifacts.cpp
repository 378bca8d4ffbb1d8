#include "gast/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gast/errors.hpp"

namespace gast {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    return out;
}

// Stray commas would shift CSV columns, so free-text fields drop them.
std::string sanitize(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

} // namespace

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records) {
    auto out = open_out(path);
    out << "step,strategy,train_loss,support_loss,val_loss,val_acc,sparsity\n";
    for (const MetricsRecord& r : records) {
        out << r.step << "," << r.strategy << "," << fmt(r.train_loss) << ","
            << fmt(r.support_loss) << ",";
        if (r.has_val) {
            out << fmt(r.val_loss);
        }
        out << ",";
        if (r.has_acc) {
            out << fmt(r.val_acc);
        }
        out << "," << fmt(r.sparsity) << "\n";
    }
}

void write_selection_log_csv(const std::string& path, const std::vector<SelectionPlan>& plans,
                             const std::vector<std::vector<std::size_t>>& batch_rows) {
    auto out = open_out(path);
    out << "step,layer,sample\n";
    for (std::size_t t = 0; t < plans.size(); ++t) {
        const auto& rows = batch_rows[t];
        for (std::size_t i = 0; i < plans[t].layers(); ++i) {
            for (std::size_t slot : plans[t].selected[i]) {
                out << plans[t].step << "," << i << "," << rows[slot] << "\n";
            }
        }
    }
}

void write_probs_heatmap_csv(const std::string& path, const std::vector<SelectionProbs>& probs) {
    auto out = open_out(path);
    out << "step,layer,sample,probability\n";
    for (std::size_t t = 0; t < probs.size(); ++t) {
        const Matrix& p = probs[t].values;
        for (std::size_t i = 0; i < p.rows(); ++i) {
            for (std::size_t j = 0; j < p.cols(); ++j) {
                out << t << "," << i << "," << j << "," << fmt(p(i, j)) << "\n";
            }
        }
    }
}

namespace {

// Mean layers trained per appearance for every dataset row that was ever
// batched, sorted descending (ties by row id).
std::vector<std::pair<std::size_t, double>> histogram_values(
    const std::vector<SelectionPlan>& plans,
    const std::vector<std::vector<std::size_t>>& batch_rows, std::size_t train_size) {
    std::vector<double> hits(train_size, 0.0);
    std::vector<std::size_t> appearances(train_size, 0);
    for (std::size_t t = 0; t < plans.size(); ++t) {
        for (std::size_t row : batch_rows[t]) {
            appearances[row] += 1;
        }
        for (std::size_t i = 0; i < plans[t].layers(); ++i) {
            for (std::size_t slot : plans[t].selected[i]) {
                hits[batch_rows[t][slot]] += 1.0;
            }
        }
    }
    std::vector<std::pair<std::size_t, double>> vals;
    for (std::size_t row = 0; row < train_size; ++row) {
        if (appearances[row] > 0) {
            vals.emplace_back(row, hits[row] / static_cast<double>(appearances[row]));
        }
    }
    std::stable_sort(vals.begin(), vals.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });
    return vals;
}

} // namespace

void write_layer_histogram_csv(const std::string& path, const std::vector<SelectionPlan>& plans,
                               const std::vector<std::vector<std::size_t>>& batch_rows,
                               std::size_t train_size) {
    auto vals = histogram_values(plans, batch_rows, train_size);
    auto out = open_out(path);
    out << "rank,layers_trained\n";
    for (std::size_t r = 0; r < vals.size(); ++r) {
        out << r << "," << fmt(vals[r].second) << "\n";
    }
}

void write_theory_report_csv(const std::string& path, const std::vector<TheoryReport>& reports) {
    auto out = open_out(path);
    out << "check,pass,deterministic,measured,tolerance,detail\n";
    for (const TheoryReport& r : reports) {
        out << r.check << "," << (r.pass ? 1 : 0) << "," << (r.deterministic ? 1 : 0) << ",";
        for (std::size_t i = 0; i < r.measured.size(); ++i) {
            out << (i ? ";" : "") << r.measured[i].first << "=" << fmt(r.measured[i].second);
        }
        out << "," << fmt(r.tolerance) << "," << sanitize(r.detail) << "\n";
    }
}

void write_compare_curves_csv(const std::string& path, const std::vector<StrategyStats>& stats) {
    auto out = open_out(path);
    out << "strategy,step,mean_val_loss,std_val_loss\n";
    for (const StrategyStats& s : stats) {
        for (std::size_t p = 0; p < s.mean_curve.size(); ++p) {
            out << s.strategy << "," << s.eval_steps[p] << "," << fmt(s.mean_curve[p]) << ","
                << fmt(s.std_curve[p]) << "\n";
        }
    }
}

void write_compare_table_csv(const std::string& path, const std::vector<StrategyStats>& stats) {
    auto out = open_out(path);
    out << "strategy,completed_seeds,mean_final_val_loss,std_final_val_loss,mean_final_val_acc,"
           "mean_sparsity,failures\n";
    for (const StrategyStats& s : stats) {
        out << s.strategy << "," << s.seeds.size() << ",";
        if (!s.final_val_losses.empty()) {
            out << fmt(s.mean_final) << "," << fmt(s.std_final);
        } else {
            out << ",";
        }
        out << ",";
        if (s.has_acc) {
            out << fmt(s.mean_final_acc);
        }
        out << "," << fmt(s.mean_sparsity) << ",";
        for (std::size_t i = 0; i < s.failures.size(); ++i) {
            out << (i ? ";" : "") << sanitize(s.failures[i]);
        }
        out << "\n";
    }
}

void write_manifest(const std::string& path, const RunConfig& cfg) {
    nlohmann::json j;
    j["config_hash"] = config_hash(cfg);
    j["seed"] = cfg.seed;
    j["depth"] = cfg.model.depth;
    j["batch_size"] = cfg.train.batch_size;
    j["steps"] = cfg.train.steps;
    j["strategy"] = cfg.train.strategy.str();
    j["out_dir"] = cfg.out_dir;
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

// ------------------------------------------------------------------- plots

namespace {

constexpr double kW = 720.0;
constexpr double kH = 420.0;
constexpr double kPad = 48.0;

struct Scale {
    double lo = 0.0;
    double hi = 1.0;
    double map(double v, double out_lo, double out_hi) const {
        double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
        return out_lo + t * (out_hi - out_lo);
    }
};

std::string svg_header(const std::string& title) {
    std::ostringstream ss;
    ss << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
       << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kPad << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
       << title << "</text>\n";
    return ss.str();
}

void polyline(std::ostream& out, const std::vector<double>& xs, const std::vector<double>& ys,
              const Scale& sx, const Scale& sy, const std::string& color) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out << sx.map(xs[i], kPad, kW - kPad) << "," << sy.map(ys[i], kH - kPad, kPad) << " ";
    }
    out << "\"/>\n";
}

void axes(std::ostream& out, const Scale& sx, const Scale& sy) {
    out << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kW - kPad
        << "\" y2=\"" << kH - kPad << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kPad << "\" y2=\""
        << kPad << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << kPad << "\" y=\"" << kH - kPad + 16
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(sx.lo) << "</text>\n"
        << "<text x=\"" << kW - kPad - 30 << "\" y=\"" << kH - kPad + 16
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(sx.hi) << "</text>\n"
        << "<text x=\"4\" y=\"" << kH - kPad << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(sy.lo) << "</text>\n"
        << "<text x=\"4\" y=\"" << kPad << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(sy.hi) << "</text>\n";
}

Scale fit(const std::vector<double>& v) {
    Scale s;
    if (v.empty()) {
        return s;
    }
    s.lo = *std::min_element(v.begin(), v.end());
    s.hi = *std::max_element(v.begin(), v.end());
    if (s.hi == s.lo) {
        s.hi = s.lo + 1.0;
    }
    return s;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

} // namespace

void write_loss_curve_svg(const std::string& path, const std::vector<MetricsRecord>& records) {
    std::vector<double> steps;
    std::vector<double> train;
    std::vector<double> val;
    for (const MetricsRecord& r : records) {
        steps.push_back(static_cast<double>(r.step));
        train.push_back(r.train_loss);
        val.push_back(r.val_loss);
    }
    auto out = open_out(path);
    out << svg_header("loss curves (blue: train batch, red: validation)");
    Scale sx = fit(steps);
    std::vector<double> all = train;
    all.insert(all.end(), val.begin(), val.end());
    Scale sy = fit(all);
    sy.lo = std::min(sy.lo, 0.0);
    axes(out, sx, sy);
    polyline(out, steps, train, sx, sy, kPalette[0]);
    polyline(out, steps, val, sx, sy, kPalette[1]);
    out << "</svg>\n";
}

void write_probs_heatmap_svg(const std::string& path, const SelectionProbs& probs) {
    const Matrix& p = probs.values;
    auto out = open_out(path);
    out << svg_header("selection probabilities (rows: layers, columns: batch)");
    if (p.rows() == 0 || p.cols() == 0) {
        out << "</svg>\n";
        return;
    }
    double hi = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        for (std::size_t j = 0; j < p.cols(); ++j) {
            hi = std::max(hi, p(i, j));
        }
    }
    double cw = (kW - 2 * kPad) / static_cast<double>(p.cols());
    double ch = (kH - 2 * kPad) / static_cast<double>(p.rows());
    for (std::size_t i = 0; i < p.rows(); ++i) {
        for (std::size_t j = 0; j < p.cols(); ++j) {
            int shade = hi > 0.0 ? static_cast<int>(255.0 * (1.0 - p(i, j) / hi)) : 255;
            out << "<rect x=\"" << kPad + cw * static_cast<double>(j) << "\" y=\""
                << kPad + ch * static_cast<double>(i) << "\" width=\"" << cw << "\" height=\""
                << ch << "\" fill=\"rgb(" << shade << "," << shade << ",255)\"/>\n";
        }
    }
    out << "</svg>\n";
}

void write_layer_histogram_svg(const std::string& path, const std::vector<double>& values) {
    auto out = open_out(path);
    out << svg_header("layers trained per sample (ranked)");
    if (!values.empty()) {
        Scale sy = fit(values);
        sy.lo = std::min(0.0, sy.lo);
        double bw = (kW - 2 * kPad) / static_cast<double>(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            double top = sy.map(values[i], kH - kPad, kPad);
            out << "<rect x=\"" << kPad + bw * static_cast<double>(i) << "\" y=\"" << top
                << "\" width=\"" << std::max(bw - 1.0, 0.5) << "\" height=\""
                << (kH - kPad) - top << "\" fill=\"" << kPalette[0] << "\"/>\n";
        }
    }
    out << "</svg>\n";
}

void write_compare_curves_svg(const std::string& path, const std::vector<StrategyStats>& stats) {
    auto out = open_out(path);
    out << svg_header("mean validation loss by strategy");
    std::vector<double> all_x;
    std::vector<double> all_y;
    for (const StrategyStats& s : stats) {
        for (std::size_t p = 0; p < s.mean_curve.size(); ++p) {
            all_x.push_back(static_cast<double>(s.eval_steps[p]));
            all_y.push_back(s.mean_curve[p]);
        }
    }
    Scale sx = fit(all_x);
    Scale sy = fit(all_y);
    sy.lo = std::min(sy.lo, 0.0);
    axes(out, sx, sy);
    for (std::size_t k = 0; k < stats.size(); ++k) {
        const StrategyStats& s = stats[k];
        std::vector<double> xs;
        for (std::size_t step : s.eval_steps) {
            xs.push_back(static_cast<double>(step));
        }
        xs.resize(s.mean_curve.size());
        const char* color = kPalette[k % (sizeof(kPalette) / sizeof(kPalette[0]))];
        polyline(out, xs, s.mean_curve, sx, sy, color);
        out << "<text x=\"" << kW - kPad + 2 << "\" y=\"" << 40 + 14 * k
            << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color << "\">"
            << s.strategy << "</text>\n";
    }
    out << "</svg>\n";
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::string cell;
        std::stringstream ss(line);
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (!line.empty() && line.back() == ',') {
            cells.push_back("");
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

} // namespace gast
