#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "gast/gradients.hpp"
#include "gast/matrix.hpp"
#include "gast/model.hpp"

namespace gast::testutil {

inline bool bit_equal(const Matrix& a, const Matrix& b) {
    return a.same_shape(b) && a.values() == b.values();
}

inline bool bit_equal(const LayerGrads& a, const LayerGrads& b) {
    return bit_equal(a.a, b.a) && bit_equal(a.b, b.b);
}

inline bool bit_equal(const AdapterStack& a, const AdapterStack& b) {
    if (a.layers() != b.layers()) {
        return false;
    }
    for (std::size_t i = 0; i < a.layers(); ++i) {
        if (!bit_equal(a.a[i], b.a[i]) || !bit_equal(a.b[i], b.b[i])) {
            return false;
        }
    }
    return true;
}

// Scalar model: one layer, one unit, rank 1, identity activation. The
// effective weight is w + b*a, so setting w=0, a=1 leaves b as the single
// trainable degree of freedom.
inline Model scalar_model(double w, double a, double b, LossKind loss = LossKind::Mse) {
    Model m;
    m.cfg.depth = 1;
    m.cfg.widths = {1, 1};
    m.cfg.rank = 1;
    m.cfg.activation = Activation::Identity;
    m.cfg.loss = loss;
    m.backbone.weights = {Matrix{{w}}};
    m.backbone.biases = {Vector{0.0}};
    m.adapters.a = {Matrix{{a}}};
    m.adapters.b = {Matrix{{b}}};
    return m;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

// Fresh per-test scratch directory, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("gast_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace gast::testutil
