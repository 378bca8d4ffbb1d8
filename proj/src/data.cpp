#include "gast/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gast/errors.hpp"
#include "gast/numerics.hpp"

namespace gast {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Internal scale knobs for the generator; targets and inputs stay O(1).
constexpr double kClassMargin = 1.0;
constexpr double kClassInputNoise = 0.35;
constexpr double kRegressionInputNoise = 0.05;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Group directions spread across conflict_angle degrees in a fixed 2-plane.
std::vector<std::pair<double, double>> group_directions(std::size_t m, double angle_deg) {
    std::vector<std::pair<double, double>> dirs(m);
    for (std::size_t g = 0; g < m; ++g) {
        double frac = m > 1 ? static_cast<double>(g) / static_cast<double>(m - 1) : 0.5;
        double alpha = (-angle_deg / 2.0 + angle_deg * frac) * kPi / 180.0;
        dirs[g] = {std::cos(alpha), std::sin(alpha)};
    }
    return dirs;
}

} // namespace

int Dataset::class_label(std::size_t row) const {
    if (targets.cols() != 1) {
        throw DomainError("classification targets must be a single column");
    }
    double v = targets(row, 0);
    double r = std::nearbyint(v);
    if (std::abs(v - r) > 1e-9 || r < 0) {
        throw DomainError("target at row " + std::to_string(row) +
                          " is not a class index: " + std::to_string(v));
    }
    return static_cast<int>(r);
}

std::size_t Dataset::num_classes() const {
    int mx = 1;
    for (std::size_t i = 0; i < size(); ++i) {
        mx = std::max(mx, class_label(i));
    }
    return static_cast<std::size_t>(mx) + 1;
}

void SyntheticSpec::validate() const {
    if (n < 1) {
        throw ConfigError("synthetic: n must be >= 1");
    }
    if (dim < 2) {
        throw ConfigError("synthetic: dim must be >= 2");
    }
    if (subpopulations < 2) {
        throw ConfigError("synthetic: subpopulations must be >= 2");
    }
    if (conflict_angle_deg < 0.0 || conflict_angle_deg > 180.0) {
        throw ConfigError("synthetic: conflict_angle_deg must be in [0, 180]");
    }
    if (label_noise < 0.0 || label_noise >= 1.0) {
        throw ConfigError("synthetic: label_noise must be in [0, 1)");
    }
}

Dataset gen_conflict_task(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng = Rng(seed).stream("gen_conflict_task");
    auto dirs = group_directions(spec.subpopulations, spec.conflict_angle_deg);

    Dataset ds;
    ds.groups.resize(spec.n);

    if (spec.task == TaskKind::Classification) {
        // Each subpopulation separates the two classes along its own
        // direction u_g; rotating u_g across groups makes a shared linear
        // separator face conflicting per-sample gradients.
        Matrix x(spec.n, spec.dim);
        Matrix y(spec.n, 1);
        for (std::size_t j = 0; j < spec.n; ++j) {
            std::size_t g = j % spec.subpopulations;
            ds.groups[j] = static_cast<int>(g);
            int label = rng.uniform() < 0.5 ? 0 : 1;
            double sign = label == 1 ? 1.0 : -1.0;
            x(j, 0) = sign * kClassMargin * dirs[g].first;
            x(j, 1) = sign * kClassMargin * dirs[g].second;
            for (std::size_t c = 0; c < spec.dim; ++c) {
                x(j, c) += kClassInputNoise * rng.gaussian();
            }
            if (spec.label_noise > 0.0 && rng.uniform() < spec.label_noise) {
                label = 1 - label;
            }
            y(j, 0) = static_cast<double>(label);
        }
        ds.inputs = std::move(x);
        ds.targets = std::move(y);
    } else {
        // Regression: one shared input cluster, group-specific 2-d target
        // vectors. The conflict is irreducible for a shared model, which is
        // exactly the regime the diagnostics probe.
        Matrix x(spec.n, spec.dim);
        Matrix y(spec.n, 2);
        for (std::size_t j = 0; j < spec.n; ++j) {
            std::size_t g = j % spec.subpopulations;
            ds.groups[j] = static_cast<int>(g);
            x(j, 0) = 1.0;
            for (std::size_t c = 0; c < spec.dim; ++c) {
                x(j, c) += kRegressionInputNoise * rng.gaussian();
            }
            y(j, 0) = dirs[g].first + spec.label_noise * rng.gaussian();
            y(j, 1) = dirs[g].second + spec.label_noise * rng.gaussian();
        }
        ds.inputs = std::move(x);
        ds.targets = std::move(y);
    }
    return ds;
}

// ---------------------------------------------------------------- file I/O

static Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw ParseError("missing header row", 1);
    }
    ++line_no;
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cols.push_back(cell);
        }
    }
    std::ptrdiff_t target_col = -1;
    std::ptrdiff_t group_col = -1;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i] == "target") {
            target_col = static_cast<std::ptrdiff_t>(i);
        } else if (cols[i] == "group") {
            group_col = static_cast<std::ptrdiff_t>(i);
        }
    }
    if (target_col < 0) {
        throw ParseError("header has no \"target\" column", 1);
    }

    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<int> groups;
    std::size_t rows = 0;
    const std::size_t ncols = cols.size();
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            double v = 0.0;
            try {
                std::size_t pos = 0;
                v = std::stod(cell, &pos);
                if (pos != cell.size()) {
                    throw std::invalid_argument(cell);
                }
            } catch (const std::exception&) {
                throw ParseError("bad numeric field \"" + cell + "\"", line_no);
            }
            if (static_cast<std::ptrdiff_t>(c) == target_col) {
                ys.push_back(v);
            } else if (static_cast<std::ptrdiff_t>(c) == group_col) {
                groups.push_back(static_cast<int>(std::nearbyint(v)));
            } else {
                xs.push_back(v);
            }
            ++c;
        }
        if (c != ncols) {
            throw ParseError("expected " + std::to_string(ncols) + " fields, got " +
                             std::to_string(c), line_no);
        }
        ++rows;
    }
    if (rows == 0) {
        throw DomainError("dataset " + path + " has no data rows");
    }
    std::size_t d = ncols - 1 - (group_col >= 0 ? 1 : 0);
    Dataset ds;
    ds.inputs = Matrix(rows, d, std::move(xs));
    ds.targets = Matrix(rows, 1, std::move(ys));
    ds.groups = std::move(groups);
    return ds;
}

static Dataset load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    std::vector<std::vector<double>> xs;
    std::vector<std::vector<double>> ys;
    std::vector<int> groups;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw ParseError(std::string("bad json: ") + e.what(), line_no);
        }
        if (!obj.contains("x") || !obj.contains("y")) {
            throw ParseError("object must have \"x\" and \"y\"", line_no);
        }
        std::vector<double> x = obj["x"].get<std::vector<double>>();
        std::vector<double> y;
        if (obj["y"].is_array()) {
            y = obj["y"].get<std::vector<double>>();
        } else {
            y.push_back(obj["y"].get<double>());
        }
        if (!xs.empty() && (x.size() != xs[0].size() || y.size() != ys[0].size())) {
            throw ParseError("inconsistent x/y widths", line_no);
        }
        if (obj.contains("group")) {
            groups.push_back(obj["group"].get<int>());
        }
        xs.push_back(std::move(x));
        ys.push_back(std::move(y));
    }
    if (xs.empty()) {
        throw DomainError("dataset " + path + " has no data rows");
    }
    Dataset ds;
    ds.inputs = Matrix(xs.size(), xs[0].size());
    ds.targets = Matrix(ys.size(), ys[0].size());
    for (std::size_t r = 0; r < xs.size(); ++r) {
        for (std::size_t c = 0; c < xs[0].size(); ++c) {
            ds.inputs(r, c) = xs[r][c];
        }
        for (std::size_t c = 0; c < ys[0].size(); ++c) {
            ds.targets(r, c) = ys[r][c];
        }
    }
    ds.groups = std::move(groups);
    return ds;
}

Dataset load_dataset(const std::string& path, FileFormat format) {
    return format == FileFormat::Csv ? load_csv(path) : load_jsonl(path);
}

void save_dataset(const Dataset& ds, const std::string& path, FileFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    if (format == FileFormat::Csv) {
        if (ds.targets.cols() != 1) {
            throw DomainError("csv schema holds a single target column; use jsonl");
        }
        for (std::size_t c = 0; c < ds.inputs.cols(); ++c) {
            out << "x" << c << ",";
        }
        out << "target";
        if (!ds.groups.empty()) {
            out << ",group";
        }
        out << "\n";
        for (std::size_t r = 0; r < ds.size(); ++r) {
            for (std::size_t c = 0; c < ds.inputs.cols(); ++c) {
                out << format_double(ds.inputs(r, c)) << ",";
            }
            out << format_double(ds.targets(r, 0));
            if (!ds.groups.empty()) {
                out << "," << ds.groups[r];
            }
            out << "\n";
        }
    } else {
        for (std::size_t r = 0; r < ds.size(); ++r) {
            out << "{\"x\":[";
            for (std::size_t c = 0; c < ds.inputs.cols(); ++c) {
                out << (c ? "," : "") << format_double(ds.inputs(r, c));
            }
            out << "],\"y\":";
            if (ds.targets.cols() == 1) {
                out << format_double(ds.targets(r, 0));
            } else {
                out << "[";
                for (std::size_t c = 0; c < ds.targets.cols(); ++c) {
                    out << (c ? "," : "") << format_double(ds.targets(r, c));
                }
                out << "]";
            }
            if (!ds.groups.empty()) {
                out << ",\"group\":" << ds.groups[r];
            }
            out << "}\n";
        }
    }
}

// ------------------------------------------------------------------ splits

Dataset take_rows(const Dataset& ds, std::span<const std::size_t> rows) {
    Dataset out;
    out.inputs = Matrix(rows.size(), ds.inputs.cols());
    out.targets = Matrix(rows.size(), ds.targets.cols());
    if (!ds.groups.empty()) {
        out.groups.resize(rows.size());
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::size_t r = rows[i];
        for (std::size_t c = 0; c < ds.inputs.cols(); ++c) {
            out.inputs(i, c) = ds.inputs(r, c);
        }
        for (std::size_t c = 0; c < ds.targets.cols(); ++c) {
            out.targets(i, c) = ds.targets(r, c);
        }
        if (!ds.groups.empty()) {
            out.groups[i] = ds.groups[r];
        }
    }
    return out;
}

Splits split(const Dataset& ds, const SplitFractions& f, std::uint64_t seed) {
    if (f.train <= 0.0 || f.support < 0.0 || f.val < 0.0 ||
        f.train + f.support + f.val > 1.0 + 1e-12) {
        throw DomainError("split fractions must be nonnegative, sum <= 1, train > 0");
    }
    const std::size_t n = ds.size();
    auto order = Rng(seed).stream("split").permutation(n);
    auto count = [n](double frac) {
        return static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
    };
    std::size_t n_train = std::min(count(f.train), n);
    std::size_t n_support = std::min(count(f.support), n - n_train);
    std::size_t n_val = std::min(count(f.val), n - n_train - n_support);
    if (n_train == 0) {
        throw DomainError("split: train fraction yields zero rows");
    }

    Splits out;
    std::span<const std::size_t> sp(order);
    out.train = take_rows(ds, sp.subspan(0, n_train));
    if (n_support == 0) {
        out.support = out.train;
        out.support_aliases_train = true;
    } else {
        out.support = take_rows(ds, sp.subspan(n_train, n_support));
    }
    out.val = take_rows(ds, sp.subspan(n_train + n_support, n_val));
    return out;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::size_t epoch, const Rng& run_rng) {
    Rng r = run_rng.stream("epoch", epoch);
    return r.permutation(n);
}

std::vector<std::size_t> support_indices(std::size_t n, std::size_t k, std::size_t step,
                                         const Rng& run_rng) {
    if (k < 1) {
        throw DomainError("support batch size must be >= 1");
    }
    Rng r = run_rng.stream("support", step);
    return r.distinct_indices(n, k);
}

// ------------------------------------------------------------- diagnostics

ConflictDiagnostics measure_conflict(const Dataset& ds) {
    // Per-sample mse gradient of the zero linear model: -y_tilde (x) x,
    // where y_tilde is the raw target row (regression) or the centered
    // one-hot label (classification).
    const std::size_t n = std::min<std::size_t>(ds.size(), 256);
    const std::size_t d = ds.inputs.cols();
    bool classification = ds.targets.cols() == 1;
    std::size_t t = classification ? ds.num_classes() : ds.targets.cols();

    std::vector<Matrix> grads;
    grads.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        Matrix g(t, d);
        for (std::size_t a = 0; a < t; ++a) {
            double y;
            if (classification) {
                y = (static_cast<std::size_t>(ds.class_label(j)) == a ? 1.0 : 0.0) -
                    1.0 / static_cast<double>(t);
            } else {
                y = ds.targets(j, a);
            }
            for (std::size_t b = 0; b < d; ++b) {
                g(a, b) = -y * ds.inputs(j, b);
            }
        }
        grads.push_back(std::move(g));
    }

    ConflictDiagnostics diag;
    double cos_sum = 0.0;
    std::size_t pairs = 0;
    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j) {
        norms[j] = std::sqrt(frob_norm_sq(grads[j]));
    }
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            if (norms[a] < 1e-12 || norms[b] < 1e-12) {
                continue;
            }
            cos_sum += dot_flat(grads[a], grads[b]) / (norms[a] * norms[b]);
            ++pairs;
        }
    }
    diag.mean_pairwise_cosine = pairs ? cos_sum / static_cast<double>(pairs) : 0.0;

    Matrix mean_grad = pairwise_sum(grads);
    mean_grad *= 1.0 / static_cast<double>(n);
    double mean_norm = 0.0;
    for (double nv : norms) {
        mean_norm += nv;
    }
    mean_norm /= static_cast<double>(n);
    diag.cancellation_ratio =
        mean_norm > 0.0 ? std::sqrt(frob_norm_sq(mean_grad)) / mean_norm : 0.0;
    return diag;
}

} // namespace gast
