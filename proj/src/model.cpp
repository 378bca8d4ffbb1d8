#include "gast/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "gast/errors.hpp"

namespace gast {

Activation parse_activation(const std::string& name) {
    if (name == "tanh") {
        return Activation::Tanh;
    }
    if (name == "relu") {
        return Activation::Relu;
    }
    if (name == "identity") {
        return Activation::Identity;
    }
    throw ConfigError("unknown activation \"" + name + "\"");
}

LossKind parse_loss(const std::string& name) {
    if (name == "mse") {
        return LossKind::Mse;
    }
    if (name == "ce" || name == "cross-entropy") {
        return LossKind::CrossEntropy;
    }
    throw ConfigError("unknown loss \"" + name + "\"");
}

std::string to_string(Activation a) {
    switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    default: return "identity";
    }
}

std::string to_string(LossKind l) {
    return l == LossKind::Mse ? "mse" : "ce";
}

void ModelConfig::validate() const {
    if (depth < 1) {
        throw ConfigError("model: depth must be >= 1");
    }
    if (widths.size() != depth + 1) {
        throw ConfigError("model: widths must list depth+1 sizes, got " +
                          std::to_string(widths.size()));
    }
    for (std::size_t w : widths) {
        if (w < 1) {
            throw ConfigError("model: widths must be >= 1");
        }
    }
    std::size_t min_w = *std::min_element(widths.begin(), widths.end());
    if (rank < 1 || rank > min_w) {
        throw ConfigError("model: rank must be in [1, min(widths)]");
    }
}

Matrix AdapterStack::delta(std::size_t layer) const {
    return matmul(b[layer], a[layer]);
}

Model init_model(const ModelConfig& cfg, const Rng& rng) {
    cfg.validate();
    Model m;
    m.cfg = cfg;
    for (std::size_t i = 0; i < cfg.depth; ++i) {
        std::size_t in = cfg.widths[i];
        std::size_t out = cfg.widths[i + 1];
        double scale = 1.0 / std::sqrt(static_cast<double>(in));

        Matrix w(out, in);
        Rng rw = rng.stream("init_w", i);
        for (std::size_t r = 0; r < out; ++r) {
            for (std::size_t c = 0; c < in; ++c) {
                w(r, c) = scale * rw.gaussian();
            }
        }
        m.backbone.weights.push_back(std::move(w));
        m.backbone.biases.emplace_back(out);

        Matrix a(cfg.rank, in);
        Rng ra = rng.stream("init_a", i);
        for (std::size_t r = 0; r < cfg.rank; ++r) {
            for (std::size_t c = 0; c < in; ++c) {
                a(r, c) = scale * ra.gaussian();
            }
        }
        m.adapters.a.push_back(std::move(a));
        m.adapters.b.emplace_back(out, cfg.rank);
    }
    return m;
}

Matrix effective_weight(const Model& m, std::size_t layer) {
    return m.backbone.weights[layer] + m.adapters.delta(layer);
}

namespace {

double apply_act(Activation act, double z) {
    switch (act) {
    case Activation::Tanh: return std::tanh(z);
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    default: return z;
    }
}

} // namespace

Matrix forward(const Model& m, const Matrix& batch, ForwardTrace* trace) {
    if (batch.cols() != m.cfg.widths[0]) {
        throw DimensionError("forward: batch width " + std::to_string(batch.cols()) +
                             " != input width " + std::to_string(m.cfg.widths[0]));
    }
    if (batch.rows() == 0) {
        throw DomainError("forward: empty batch");
    }
    if (trace) {
        trace->inputs.clear();
        trace->outputs.clear();
    }
    Matrix h = batch;
    for (std::size_t i = 0; i < m.cfg.depth; ++i) {
        if (trace) {
            trace->inputs.push_back(h);
        }
        Matrix v = effective_weight(m, i);
        Matrix z = matmul(h, transpose(v));
        const Vector& bias = m.backbone.biases[i];
        bool last = i + 1 == m.cfg.depth;
        for (std::size_t r = 0; r < z.rows(); ++r) {
            for (std::size_t c = 0; c < z.cols(); ++c) {
                double zv = z(r, c) + bias[c];
                z(r, c) = last ? zv : apply_act(m.cfg.activation, zv);
            }
        }
        h = std::move(z);
        if (trace) {
            trace->outputs.push_back(h);
        }
    }
    return h;
}

Targets Targets::from_dataset(const Dataset& ds, LossKind loss) {
    Targets t;
    if (loss == LossKind::Mse) {
        t.values = ds.targets;
    } else {
        t.classes.resize(ds.size());
        for (std::size_t j = 0; j < ds.size(); ++j) {
            t.classes[j] = ds.class_label(j);
        }
    }
    return t;
}

Targets Targets::rows(std::span<const std::size_t> idx) const {
    Targets out;
    if (!classes.empty()) {
        out.classes.reserve(idx.size());
        for (std::size_t i : idx) {
            out.classes.push_back(classes[i]);
        }
    }
    if (values.rows() > 0) {
        out.values = Matrix(idx.size(), values.cols());
        for (std::size_t r = 0; r < idx.size(); ++r) {
            for (std::size_t c = 0; c < values.cols(); ++c) {
                out.values(r, c) = values(idx[r], c);
            }
        }
    }
    return out;
}

std::size_t Targets::count(LossKind loss) const {
    return loss == LossKind::Mse ? values.rows() : classes.size();
}

Vector per_sample_loss(const Matrix& logits, const Targets& targets, LossKind loss) {
    const std::size_t n = logits.rows();
    // Computed losses, not caller input: a diverging model may legitimately
    // produce non-finite values here, and the trainer reports those with
    // step context. So skip the finite-on-construction vector path.
    Vector out(n);
    if (loss == LossKind::Mse) {
        if (!logits.same_shape(targets.values)) {
            throw DimensionError("mse: logits " + logits.shape_str() + " vs targets " +
                                 targets.values.shape_str());
        }
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < logits.cols(); ++c) {
                double d = logits(j, c) - targets.values(j, c);
                acc += d * d;
            }
            out[j] = 0.5 * acc;
        }
    } else {
        if (targets.classes.size() != n) {
            throw DimensionError("cross-entropy: batch of " + std::to_string(n) + " vs " +
                                 std::to_string(targets.classes.size()) + " labels");
        }
        for (std::size_t j = 0; j < n; ++j) {
            int y = targets.classes[j];
            if (y < 0 || static_cast<std::size_t>(y) >= logits.cols()) {
                throw DomainError("cross-entropy: class " + std::to_string(y) +
                                  " out of range for " + std::to_string(logits.cols()) +
                                  " logits");
            }
            double mx = logits(j, 0);
            for (std::size_t c = 1; c < logits.cols(); ++c) {
                mx = std::max(mx, logits(j, c));
            }
            double sum = 0.0;
            for (std::size_t c = 0; c < logits.cols(); ++c) {
                sum += std::exp(logits(j, c) - mx);
            }
            out[j] = mx + std::log(sum) - logits(j, static_cast<std::size_t>(y));
        }
    }
    return out;
}

EvalResult evaluate(const Model& m, const Dataset& ds) {
    if (ds.empty()) {
        throw DomainError("evaluate: empty dataset");
    }
    Targets targets = Targets::from_dataset(ds, m.cfg.loss);
    Matrix logits = forward(m, ds.inputs);
    Vector losses = per_sample_loss(logits, targets, m.cfg.loss);
    EvalResult res;
    double acc_loss = 0.0;
    for (std::size_t j = 0; j < losses.len(); ++j) {
        acc_loss += losses[j];
    }
    res.mean_loss = acc_loss / static_cast<double>(losses.len());
    if (m.cfg.loss == LossKind::CrossEntropy) {
        res.has_accuracy = true;
        std::size_t hits = 0;
        for (std::size_t j = 0; j < logits.rows(); ++j) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < logits.cols(); ++c) {
                if (logits(j, c) > logits(j, best)) {
                    best = c;
                }
            }
            if (best == static_cast<std::size_t>(targets.classes[j])) {
                ++hits;
            }
        }
        res.accuracy = static_cast<double>(hits) / static_cast<double>(logits.rows());
    }
    return res;
}

// ------------------------------------------------------------- checkpoints

namespace {

constexpr char kMagic[8] = {'G', 'A', 'S', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t get_u64(std::ifstream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

void put_matrix(std::ofstream& out, const Matrix& m) {
    put_u64(out, m.rows());
    put_u64(out, m.cols());
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
}

Matrix get_matrix(std::ifstream& in) {
    std::uint64_t r = get_u64(in);
    std::uint64_t c = get_u64(in);
    std::vector<double> data(r * c);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    return Matrix(r, c, std::move(data));
}

} // namespace

void save_checkpoint(const Model& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char*>(&kVersion), sizeof kVersion);
    put_u64(out, m.cfg.depth);
    for (std::size_t w : m.cfg.widths) {
        put_u64(out, w);
    }
    put_u64(out, m.cfg.rank);
    put_u64(out, static_cast<std::uint64_t>(m.cfg.activation));
    put_u64(out, static_cast<std::uint64_t>(m.cfg.loss));
    for (std::size_t i = 0; i < m.cfg.depth; ++i) {
        put_matrix(out, m.backbone.weights[i]);
        put_u64(out, m.backbone.biases[i].len());
        out.write(reinterpret_cast<const char*>(m.backbone.biases[i].data()),
                  static_cast<std::streamsize>(m.backbone.biases[i].len() * sizeof(double)));
        put_matrix(out, m.adapters.a[i]);
        put_matrix(out, m.adapters.b[i]);
    }
    if (!out) {
        throw IoError("short write to " + path);
    }
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw IoError(path + " is not a checkpoint file");
    }
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    if (version != kVersion) {
        throw IoError("unsupported checkpoint version " + std::to_string(version));
    }
    Model m;
    m.cfg.depth = get_u64(in);
    m.cfg.widths.resize(m.cfg.depth + 1);
    for (auto& w : m.cfg.widths) {
        w = get_u64(in);
    }
    m.cfg.rank = get_u64(in);
    m.cfg.activation = static_cast<Activation>(get_u64(in));
    m.cfg.loss = static_cast<LossKind>(get_u64(in));
    for (std::size_t i = 0; i < m.cfg.depth; ++i) {
        m.backbone.weights.push_back(get_matrix(in));
        std::vector<double> bias(get_u64(in));
        in.read(reinterpret_cast<char*>(bias.data()),
                static_cast<std::streamsize>(bias.size() * sizeof(double)));
        m.backbone.biases.emplace_back(std::move(bias));
        m.adapters.a.push_back(get_matrix(in));
        m.adapters.b.push_back(get_matrix(in));
    }
    if (!in) {
        throw IoError("truncated checkpoint " + path);
    }
    m.cfg.validate();
    return m;
}

} // namespace gast
