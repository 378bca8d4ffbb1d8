#include "gast/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gast/errors.hpp"

namespace gast {

using nlohmann::json;

ModelConfig RunConfig::default_model() {
    ModelConfig m;
    m.depth = 6;
    m.widths = {8, 16, 16, 16, 16, 16, 2};
    m.rank = 2;
    m.activation = Activation::Tanh;
    m.loss = LossKind::CrossEntropy;
    return m;
}

namespace {

// Strict object reader: every key must be consumed, leftovers are errors.
class ObjView {
  public:
    ObjView(const json& j, std::string scope) : obj_(j), scope_(std::move(scope)) {
        if (!j.is_object()) {
            throw ConfigError("key \"" + scope_ + "\" must be an object");
        }
    }

    bool has(const std::string& key) const { return obj_.contains(key); }

    const json* take(const std::string& key) {
        seen_.push_back(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    template <typename T>
    T get(const std::string& key, T dflt) {
        const json* v = take(key);
        if (!v) {
            return dflt;
        }
        try {
            return v->get<T>();
        } catch (const std::exception&) {
            throw ConfigError("key \"" + path(key) + "\" has the wrong type");
        }
    }

    void finish() const {
        for (const auto& item : obj_.items()) {
            if (std::find(seen_.begin(), seen_.end(), item.key()) == seen_.end()) {
                throw ConfigError("unknown key \"" + path(item.key()) + "\"");
            }
        }
    }

    std::string path(const std::string& key) const {
        return scope_.empty() ? key : scope_ + "." + key;
    }

  private:
    const json& obj_;
    std::string scope_;
    std::vector<std::string> seen_;
};

ModelConfig parse_model(const json& j) {
    ModelConfig m = RunConfig::default_model();
    ObjView v(j, "model");
    m.widths = v.get<std::vector<std::size_t>>("widths", m.widths);
    m.depth = v.get<std::size_t>("depth", m.widths.empty() ? 0 : m.widths.size() - 1);
    m.rank = v.get<std::size_t>("rank", m.rank);
    if (const json* a = v.take("activation")) {
        m.activation = parse_activation(a->get<std::string>());
    }
    if (const json* l = v.take("loss")) {
        m.loss = parse_loss(l->get<std::string>());
    }
    v.finish();
    return m;
}

TrainConfig parse_train(const json& j) {
    TrainConfig t;
    ObjView v(j, "train");
    t.steps = v.get<std::size_t>("steps", t.steps);
    t.batch_size = v.get<std::size_t>("batch_size", t.batch_size);
    t.lr = v.get<double>("lr", t.lr);
    if (const json* s = v.take("strategy")) {
        t.strategy = Strategy::parse(s->get<std::string>());
    }
    t.support_batch_size = v.get<std::size_t>("support_batch_size", t.support_batch_size);
    if (const json* s = v.take("support_source")) {
        t.support_source = parse_support_source(s->get<std::string>());
    }
    t.eval_interval = v.get<std::size_t>("eval_interval", t.eval_interval);
    if (const json* g = v.take("grad_mode")) {
        t.grad_mode = parse_grad_mode(g->get<std::string>());
    }
    t.cosine_scores = v.get<bool>("cosine_scores", t.cosine_scores);
    v.finish();
    return t;
}

DataConfig parse_data(const json& j) {
    DataConfig d;
    ObjView v(j, "data");
    d.source = v.get<std::string>("source", d.source);
    if (d.source != "synthetic" && d.source != "file") {
        throw ConfigError("key \"data.source\" must be \"synthetic\" or \"file\"");
    }
    d.path = v.get<std::string>("path", d.path);
    if (const json* f = v.take("format")) {
        std::string name = f->get<std::string>();
        if (name == "csv") {
            d.format = FileFormat::Csv;
        } else if (name == "jsonl") {
            d.format = FileFormat::Jsonl;
        } else {
            throw ConfigError("key \"data.format\" must be \"csv\" or \"jsonl\"");
        }
    }
    d.synthetic.n = v.get<std::size_t>("n", d.synthetic.n);
    d.synthetic.dim = v.get<std::size_t>("dim", d.synthetic.dim);
    d.synthetic.subpopulations = v.get<std::size_t>("subpopulations", d.synthetic.subpopulations);
    d.synthetic.conflict_angle_deg =
        v.get<double>("conflict_angle_deg", d.synthetic.conflict_angle_deg);
    d.synthetic.label_noise = v.get<double>("label_noise", d.synthetic.label_noise);
    if (const json* t = v.take("task")) {
        std::string name = t->get<std::string>();
        if (name == "classification") {
            d.synthetic.task = TaskKind::Classification;
        } else if (name == "regression") {
            d.synthetic.task = TaskKind::Regression;
        } else {
            throw ConfigError("key \"data.task\" must be \"classification\" or \"regression\"");
        }
    }
    d.fractions.train = v.get<double>("train_fraction", d.fractions.train);
    d.fractions.support = v.get<double>("support_fraction", d.fractions.support);
    d.fractions.val = v.get<double>("val_fraction", d.fractions.val);
    v.finish();
    return d;
}

CompareConfig parse_compare(const json& j) {
    CompareConfig c;
    ObjView v(j, "compare");
    c.strategies = v.get<std::vector<std::string>>("strategies", c.strategies);
    c.seeds = v.get<std::vector<std::uint64_t>>("seeds", c.seeds);
    v.finish();
    return c;
}

TheoryKnobs parse_theory(const json& j) {
    TheoryKnobs t;
    ObjView v(j, "theory");
    t.grad_check_pairs = v.get<std::size_t>("grad_check_pairs", t.grad_check_pairs);
    t.smoothness_probes = v.get<std::size_t>("smoothness_probes", t.smoothness_probes);
    t.smoothness_radius = v.get<double>("smoothness_radius", t.smoothness_radius);
    t.etas = v.get<std::vector<double>>("etas", t.etas);
    t.descent_trials = v.get<std::size_t>("descent_trials", t.descent_trials);
    t.descent_eta = v.get<double>("descent_eta", t.descent_eta);
    t.hybrid_rows = v.get<std::size_t>("hybrid_rows", t.hybrid_rows);
    t.hybrid_trials = v.get<std::size_t>("hybrid_trials", t.hybrid_trials);
    v.finish();
    return t;
}

} // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config is not valid json: ") + e.what(),
                         static_cast<std::size_t>(e.byte));
    }
    RunConfig cfg;
    ObjView v(root, "");
    if (const json* s = v.take("seed")) {
        try {
            cfg.seed = s->get<std::uint64_t>();
        } catch (const std::exception&) {
            throw ConfigError("key \"seed\" must be an unsigned integer");
        }
        cfg.has_seed = true;
    }
    cfg.out_dir = v.get<std::string>("out_dir", cfg.out_dir);
    if (const json* m = v.take("model")) {
        cfg.model = parse_model(*m);
    }
    if (const json* t = v.take("train")) {
        cfg.train = parse_train(*t);
    }
    if (const json* d = v.take("data")) {
        cfg.data = parse_data(*d);
    }
    if (const json* c = v.take("compare")) {
        cfg.compare = parse_compare(*c);
    }
    if (const json* t = v.take("theory")) {
        cfg.theory = parse_theory(*t);
    }
    v.finish();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

void RunConfig::validate() const {
    if (!has_seed) {
        throw ConfigError("key \"seed\" is required (config file or --seed)");
    }
    if (out_dir.empty()) {
        throw ConfigError("key \"out_dir\" is required (config file or --out)");
    }
    model.validate();
    train.validate();
    if (data.source == "synthetic") {
        data.synthetic.validate();
        if (model.widths.front() != data.synthetic.dim) {
            throw ConfigError("key \"model.widths\": first width " +
                              std::to_string(model.widths.front()) +
                              " must equal \"data.dim\" " +
                              std::to_string(data.synthetic.dim));
        }
        if (data.synthetic.task == TaskKind::Classification &&
            model.loss == LossKind::CrossEntropy && model.widths.back() < 2) {
            throw ConfigError("key \"model.widths\": need >= 2 logits for classification");
        }
        if (data.synthetic.task == TaskKind::Regression && model.loss == LossKind::Mse &&
            model.widths.back() != 2) {
            throw ConfigError(
                "key \"model.widths\": synthetic regression targets are 2-wide, last width must "
                "be 2");
        }
    } else if (data.path.empty()) {
        throw ConfigError("key \"data.path\" is required when \"data.source\" is \"file\"");
    }
    if (data.fractions.train <= 0.0 || data.fractions.support < 0.0 || data.fractions.val < 0.0 ||
        data.fractions.train + data.fractions.support + data.fractions.val > 1.0 + 1e-12) {
        throw ConfigError("keys \"data.*_fraction\" must be nonnegative, train > 0, sum <= 1");
    }
    if (train.support_source == SupportSource::HeldOut && data.fractions.support <= 0.0) {
        throw ConfigError(
            "key \"train.support_source\": held-out support needs \"data.support_fraction\" > 0");
    }
    for (const std::string& s : compare.strategies) {
        Strategy::parse(s); // throws with the offending name
    }
}

std::string config_canonical(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    j["model"] = {{"depth", cfg.model.depth},
                  {"widths", cfg.model.widths},
                  {"rank", cfg.model.rank},
                  {"activation", to_string(cfg.model.activation)},
                  {"loss", to_string(cfg.model.loss)}};
    j["train"] = {{"steps", cfg.train.steps},
                  {"batch_size", cfg.train.batch_size},
                  {"lr", cfg.train.lr},
                  {"strategy", cfg.train.strategy.str()},
                  {"support_batch_size", cfg.train.support_batch_size},
                  {"support_source", to_string(cfg.train.support_source)},
                  {"eval_interval", cfg.train.eval_interval},
                  {"grad_mode", to_string(cfg.train.grad_mode)},
                  {"cosine_scores", cfg.train.cosine_scores}};
    j["data"] = {{"source", cfg.data.source},
                 {"path", cfg.data.path},
                 {"format", cfg.data.format == FileFormat::Csv ? "csv" : "jsonl"},
                 {"n", cfg.data.synthetic.n},
                 {"dim", cfg.data.synthetic.dim},
                 {"subpopulations", cfg.data.synthetic.subpopulations},
                 {"conflict_angle_deg", cfg.data.synthetic.conflict_angle_deg},
                 {"label_noise", cfg.data.synthetic.label_noise},
                 {"task",
                  cfg.data.synthetic.task == TaskKind::Classification ? "classification"
                                                                      : "regression"},
                 {"train_fraction", cfg.data.fractions.train},
                 {"support_fraction", cfg.data.fractions.support},
                 {"val_fraction", cfg.data.fractions.val}};
    j["compare"] = {{"strategies", cfg.compare.strategies}, {"seeds", cfg.compare.seeds}};
    j["theory"] = {{"grad_check_pairs", cfg.theory.grad_check_pairs},
                   {"smoothness_probes", cfg.theory.smoothness_probes},
                   {"smoothness_radius", cfg.theory.smoothness_radius},
                   {"etas", cfg.theory.etas},
                   {"descent_trials", cfg.theory.descent_trials},
                   {"descent_eta", cfg.theory.descent_eta},
                   {"hybrid_rows", cfg.theory.hybrid_rows},
                   {"hybrid_trials", cfg.theory.hybrid_trials}};
    return j.dump();
}

std::string config_hash(const RunConfig& cfg) {
    std::string bytes = config_canonical(cfg);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace gast
