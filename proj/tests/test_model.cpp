#include <cmath>
#include <vector>

#include <doctest.h>

#include "gast/data.hpp"
#include "gast/errors.hpp"
#include "gast/model.hpp"
#include "gast/numerics.hpp"
#include "helpers.hpp"

using namespace gast;
using gast::testutil::bit_equal;
using gast::testutil::scalar_model;
using gast::testutil::TempDir;

TEST_CASE("model config validation") {
    ModelConfig cfg;
    CHECK_NOTHROW(cfg.validate());

    cfg.depth = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = ModelConfig{};
    cfg.widths = {8, 16}; // depth 2 needs 3 widths
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = ModelConfig{};
    cfg.rank = 9; // min width is 8
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = ModelConfig{};
    cfg.widths = {8, 0, 16};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("parse helpers") {
    CHECK(parse_activation("tanh") == Activation::Tanh);
    CHECK(parse_activation("relu") == Activation::Relu);
    CHECK(parse_activation("identity") == Activation::Identity);
    CHECK_THROWS_AS(parse_activation("gelu"), ConfigError);
    CHECK(parse_loss("mse") == LossKind::Mse);
    CHECK(parse_loss("ce") == LossKind::CrossEntropy);
    CHECK(parse_loss("cross-entropy") == LossKind::CrossEntropy);
    CHECK_THROWS_AS(parse_loss("hinge"), ConfigError);
}

TEST_CASE("init_model zero adapter contribution and determinism") {
    ModelConfig cfg;
    cfg.depth = 3;
    cfg.widths = {4, 6, 6, 2};
    cfg.rank = 2;
    Model m = init_model(cfg, Rng(12));
    for (std::size_t i = 0; i < cfg.depth; ++i) {
        Matrix d = m.adapters.delta(i);
        for (double v : d.values()) {
            CHECK(v == 0.0);
        }
        for (double v : m.backbone.biases[i].values()) {
            CHECK(v == 0.0);
        }
    }
    Model m2 = init_model(cfg, Rng(12));
    CHECK(bit_equal(m.adapters, m2.adapters));
    for (std::size_t i = 0; i < cfg.depth; ++i) {
        CHECK(bit_equal(m.backbone.weights[i], m2.backbone.weights[i]));
    }
}

TEST_CASE("init_model backbone scale 1/sqrt(fan_in)") {
    ModelConfig cfg;
    cfg.depth = 1;
    cfg.widths = {100, 100};
    cfg.rank = 1;
    Model m = init_model(cfg, Rng(99));
    const Matrix& w = m.backbone.weights[0]; // 10^4 entries, fan-in 100
    double sq = 0.0;
    for (double v : w.values()) {
        sq += v * v;
    }
    double std_hat = std::sqrt(sq / static_cast<double>(w.size()));
    CHECK(std_hat == doctest::Approx(0.1).epsilon(0.1)); // 0.1 +- 0.01
}

TEST_CASE("forward equals frozen model while adapters are zero") {
    ModelConfig cfg;
    cfg.depth = 2;
    cfg.widths = {3, 5, 2};
    cfg.rank = 2;
    cfg.activation = Activation::Tanh;
    Model m = init_model(cfg, Rng(4));

    Matrix x(4, 3);
    Rng fill(5);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            x(i, j) = fill.gaussian();
        }
    }
    Matrix logits = forward(m, x);

    // Frozen-only oracle computed directly from the backbone.
    Matrix h = x;
    for (std::size_t layer = 0; layer < cfg.depth; ++layer) {
        Matrix z = matmul(h, transpose(m.backbone.weights[layer]));
        if (layer + 1 < cfg.depth) {
            for (std::size_t i = 0; i < z.rows(); ++i) {
                for (std::size_t j = 0; j < z.cols(); ++j) {
                    z(i, j) = std::tanh(z(i, j));
                }
            }
        }
        h = z;
    }
    CHECK(bit_equal(logits, h));
}

TEST_CASE("forward identity pipeline and hand example") {
    Model ident = scalar_model(1.0, 1.0, 0.0);
    Matrix x{{3.25}, {-1.5}};
    Matrix out = forward(ident, x);
    CHECK(out(0, 0) == 3.25);
    CHECK(out(1, 0) == -1.5);

    // (2 + 0.5*1) * 3 = 7.5
    Model hand = scalar_model(2.0, 1.0, 0.5);
    Matrix logit = forward(hand, Matrix{{3.0}});
    CHECK(logit(0, 0) == 7.5);
}

TEST_CASE("forward errors") {
    Model m = scalar_model(1.0, 1.0, 0.0);
    CHECK_THROWS_AS(forward(m, Matrix{{1.0, 2.0}}), DimensionError);
    CHECK_THROWS_AS(forward(m, Matrix(0, 1)), DomainError);
}

TEST_CASE("forward trace consistency") {
    ModelConfig cfg;
    cfg.depth = 3;
    cfg.widths = {4, 8, 8, 3};
    cfg.rank = 2;
    cfg.activation = Activation::Tanh;
    Model m = init_model(cfg, Rng(21));
    Rng fill = Rng(21).stream("b");
    for (std::size_t i = 0; i < cfg.depth; ++i) {
        for (std::size_t p = 0; p < m.adapters.b[i].rows(); ++p) {
            for (std::size_t q = 0; q < m.adapters.b[i].cols(); ++q) {
                m.adapters.b[i](p, q) = 0.3 * fill.gaussian();
            }
        }
    }

    Matrix x(5, 4);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            x(i, j) = fill.gaussian();
        }
    }
    ForwardTrace trace;
    Matrix logits = forward(m, x, &trace);
    REQUIRE(trace.inputs.size() == cfg.depth);
    REQUIRE(trace.outputs.size() == cfg.depth);
    CHECK(bit_equal(trace.outputs.back(), logits));

    // Re-run each layer from its traced input; outputs must match.
    for (std::size_t layer = 0; layer < cfg.depth; ++layer) {
        Matrix v = effective_weight(m, layer);
        Matrix z = matmul(trace.inputs[layer], transpose(v));
        for (std::size_t i = 0; i < z.rows(); ++i) {
            for (std::size_t j = 0; j < z.cols(); ++j) {
                z(i, j) += m.backbone.biases[layer][j];
                if (layer + 1 < cfg.depth) {
                    z(i, j) = std::tanh(z(i, j));
                }
            }
        }
        for (std::size_t i = 0; i < z.rows(); ++i) {
            for (std::size_t j = 0; j < z.cols(); ++j) {
                CHECK(std::abs(z(i, j) - trace.outputs[layer](i, j)) <= 1e-12);
            }
        }
    }
}

TEST_CASE("per_sample_loss values") {
    Targets mse_y;
    mse_y.values = Matrix{{1.0, -2.0}};
    Vector zero = per_sample_loss(Matrix{{1.0, -2.0}}, mse_y, LossKind::Mse);
    CHECK(zero[0] == 0.0);

    Vector l = per_sample_loss(Matrix{{2.0, -1.0}}, mse_y, LossKind::Mse);
    CHECK(l[0] == doctest::Approx(0.5 * (1.0 + 1.0)).epsilon(1e-15));

    Targets ce_y;
    ce_y.classes = {1};
    Vector ce = per_sample_loss(Matrix{{1.0, 2.0}}, ce_y, LossKind::CrossEntropy);
    CHECK(ce[0] == doctest::Approx(0.3132616875182228).epsilon(1e-12));

    Targets uni_y;
    uni_y.classes = {3};
    Vector uni = per_sample_loss(Matrix{{0.7, 0.7, 0.7, 0.7, 0.7}}, uni_y, LossKind::CrossEntropy);
    CHECK(uni[0] == doctest::Approx(std::log(5.0)).epsilon(1e-12));

    Targets bad;
    bad.classes = {2};
    CHECK_THROWS_AS(per_sample_loss(Matrix{{0.0, 0.0}}, bad, LossKind::CrossEntropy), DomainError);

    // Losses are never negative.
    Rng rng(6);
    for (int t = 0; t < 20; ++t) {
        Matrix logits(1, 3);
        for (std::size_t j = 0; j < 3; ++j) {
            logits(0, j) = 4.0 * rng.gaussian();
        }
        Targets y;
        y.classes = {static_cast<int>(rng.uniform_index(3))};
        CHECK(per_sample_loss(logits, y, LossKind::CrossEntropy)[0] >= 0.0);
    }
}

TEST_CASE("evaluate basics") {
    Model m = scalar_model(1.0, 1.0, 0.0);
    Dataset one;
    one.inputs = Matrix{{2.0}};
    one.targets = Matrix{{2.0}};
    EvalResult r = evaluate(m, one);
    CHECK(r.mean_loss == 0.0);
    CHECK_FALSE(r.has_accuracy);

    Dataset dup;
    dup.inputs = Matrix{{2.0}, {2.0}, {1.0}, {1.0}};
    dup.targets = Matrix{{1.0}, {1.0}, {3.0}, {3.0}};
    Dataset half;
    half.inputs = Matrix{{2.0}, {1.0}};
    half.targets = Matrix{{1.0}, {3.0}};
    CHECK(evaluate(m, dup).mean_loss ==
          doctest::Approx(evaluate(m, half).mean_loss).epsilon(1e-15));

    Dataset empty;
    CHECK_THROWS_AS(evaluate(m, empty), DomainError);
}

TEST_CASE("evaluate accuracy near half for untrained symmetric models") {
    SyntheticSpec spec;
    spec.n = 400;
    spec.dim = 6;
    spec.conflict_angle_deg = 90.0;
    ModelConfig cfg;
    cfg.depth = 2;
    cfg.widths = {6, 8, 2};
    cfg.rank = 2;
    cfg.loss = LossKind::CrossEntropy;

    double acc_sum = 0.0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        Dataset ds = gen_conflict_task(spec, 1000 + static_cast<std::uint64_t>(s));
        Model m = init_model(cfg, Rng(2000 + static_cast<std::uint64_t>(s)));
        EvalResult r = evaluate(m, ds);
        CHECK(r.has_accuracy);
        acc_sum += r.accuracy;
    }
    CHECK(acc_sum / seeds == doctest::Approx(0.5).epsilon(0.1)); // 0.5 +- 0.05
}

TEST_CASE("checkpoint round trip is bit-exact") {
    ModelConfig cfg;
    cfg.depth = 2;
    cfg.widths = {3, 4, 2};
    cfg.rank = 2;
    cfg.activation = Activation::Relu;
    cfg.loss = LossKind::CrossEntropy;
    Model m = init_model(cfg, Rng(31));
    Rng fill(32);
    for (std::size_t i = 0; i < cfg.depth; ++i) {
        for (std::size_t p = 0; p < m.adapters.b[i].rows(); ++p) {
            for (std::size_t q = 0; q < m.adapters.b[i].cols(); ++q) {
                m.adapters.b[i](p, q) = fill.gaussian();
            }
        }
    }

    TempDir tmp("ckpt");
    save_checkpoint(m, tmp.file("m.ckpt"));
    Model back = load_checkpoint(tmp.file("m.ckpt"));
    CHECK(back.cfg.depth == cfg.depth);
    CHECK(back.cfg.widths == cfg.widths);
    CHECK(back.cfg.rank == cfg.rank);
    CHECK(back.cfg.activation == cfg.activation);
    CHECK(back.cfg.loss == cfg.loss);
    CHECK(bit_equal(back.adapters, m.adapters));
    for (std::size_t i = 0; i < cfg.depth; ++i) {
        CHECK(bit_equal(back.backbone.weights[i], m.backbone.weights[i]));
        CHECK(back.backbone.biases[i].values() == m.backbone.biases[i].values());
    }
}

TEST_CASE("checkpoint loader rejects junk") {
    TempDir tmp("ckpt_bad");
    gast::testutil::write_file(tmp.file("junk.ckpt"), "definitely not a checkpoint");
    CHECK_THROWS_AS(load_checkpoint(tmp.file("junk.ckpt")), IoError);
    CHECK_THROWS_AS(load_checkpoint(tmp.file("missing.ckpt")), IoError);
}

TEST_CASE("targets from dataset and row views") {
    Dataset ds;
    ds.inputs = Matrix{{1.0}, {2.0}, {3.0}};
    ds.targets = Matrix{{0.0}, {1.0}, {0.0}};
    Targets t = Targets::from_dataset(ds, LossKind::CrossEntropy);
    CHECK(t.classes == std::vector<int>{0, 1, 0});
    std::vector<std::size_t> idx{2, 0};
    Targets sub = t.rows(idx);
    CHECK(sub.classes == std::vector<int>{0, 0});
    CHECK(sub.count(LossKind::CrossEntropy) == 2);

    Targets r = Targets::from_dataset(ds, LossKind::Mse);
    CHECK(r.values.rows() == 3);
    Targets rsub = r.rows(idx);
    CHECK(rsub.values(0, 0) == 0.0);
    CHECK(rsub.values(1, 0) == 0.0);
}
