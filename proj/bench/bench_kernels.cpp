// Timing comparison between the OpenMP kernels and their serial references:
// matmul and the per-sample gradient sweep. Run with --quick for the ctest
// smoke entry (small shapes, single repetition).
#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "gast/gradients.hpp"
#include "gast/matrix.hpp"
#include "gast/model.hpp"
#include "gast/rng.hpp"

using namespace gast;

namespace {

double g_sink = 0.0; // keeps the timed work observable

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            m(i, j) = rng.gaussian();
        }
    }
    return m;
}

template <typename F>
double best_ms(F&& fn, std::size_t reps) {
    double best = 1e300;
    for (std::size_t r = 0; r < reps; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        fn();
        auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

void print_row(const std::string& label, double serial_ms, double parallel_ms) {
    std::printf("%-34s %12.3f %12.3f %10.2fx\n", label.c_str(), serial_ms, parallel_ms,
                parallel_ms > 0.0 ? serial_ms / parallel_ms : 0.0);
}

bool bench_matmul(std::size_t n, std::size_t reps) {
    Rng rng(11 + n);
    Matrix a = random_matrix(n, n, rng);
    Matrix b = random_matrix(n, n, rng);

    Matrix ref = matmul_serial(a, b);
    Matrix par = matmul(a, b);
    if (ref.values() != par.values()) {
        std::printf("FAIL matmul %zux%zu: parallel result differs from serial\n", n, n);
        return false;
    }

    double serial = best_ms([&] { g_sink += matmul_serial(a, b)(0, 0); }, reps);
    double parallel = best_ms([&] { g_sink += matmul(a, b)(0, 0); }, reps);
    print_row("matmul " + std::to_string(n) + "^3", serial, parallel);
    return true;
}

bool bench_per_sample(std::size_t batch, std::size_t reps) {
    ModelConfig cfg;
    cfg.depth = 6;
    cfg.widths = {8, 16, 16, 16, 16, 16, 2};
    cfg.rank = 2;
    cfg.activation = Activation::Tanh;
    cfg.loss = LossKind::Mse;
    Model m = init_model(cfg, Rng(3));
    Rng fill(4);
    for (std::size_t i = 0; i < cfg.depth; ++i) {
        for (std::size_t p = 0; p < m.adapters.b[i].rows(); ++p) {
            for (std::size_t q = 0; q < m.adapters.b[i].cols(); ++q) {
                m.adapters.b[i](p, q) = 0.3 * fill.gaussian();
            }
        }
    }
    Rng data(5);
    Matrix x = random_matrix(batch, cfg.widths.front(), data);
    Targets y;
    y.values = random_matrix(batch, cfg.widths.back(), data);

    PerSampleLayerGrads ref = per_sample_layer_grads_serial(m, x, y);
    PerSampleLayerGrads par = per_sample_layer_grads(m, x, y);
    for (std::size_t i = 0; i < cfg.depth; ++i) {
        for (std::size_t j = 0; j < batch; ++j) {
            if (ref.g[i][j].a.values() != par.g[i][j].a.values() ||
                ref.g[i][j].b.values() != par.g[i][j].b.values()) {
                std::printf("FAIL per_sample_layer_grads batch %zu: layer %zu sample %zu "
                            "differs between parallel and serial\n",
                            batch, i, j);
                return false;
            }
        }
    }

    double serial =
        best_ms([&] { g_sink += per_sample_layer_grads_serial(m, x, y).g[0][0].a(0, 0); }, reps);
    double parallel =
        best_ms([&] { g_sink += per_sample_layer_grads(m, x, y).g[0][0].a(0, 0); }, reps);
    print_row("per_sample_grads batch " + std::to_string(batch), serial, parallel);
    return true;
}

} // namespace

int main(int argc, char** argv) {
    bool quick = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--quick") == 0) {
            quick = true;
        } else {
            std::printf("usage: %s [--quick]\n", argv[0]);
            return 2;
        }
    }

    std::printf("%-34s %12s %12s %10s\n", "kernel", "serial ms", "parallel ms", "speedup");
    bool ok = true;
    if (quick) {
        ok = bench_matmul(48, 1) && ok;
        ok = bench_per_sample(16, 1) && ok;
    } else {
        for (std::size_t n : {64, 128, 256, 384}) {
            ok = bench_matmul(n, 5) && ok;
        }
        for (std::size_t batch : {16, 64, 256}) {
            ok = bench_per_sample(batch, 5) && ok;
        }
    }
    std::printf("(checksum %g)\n", g_sink);
    return ok ? 0 : 1;
}
