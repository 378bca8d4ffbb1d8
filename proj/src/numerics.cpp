#include "gast/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gast/errors.hpp"

namespace gast {

double mean(std::span<const double> v) {
    if (v.empty()) {
        throw DomainError("mean of empty range");
    }
    double acc = 0.0;
    for (double x : v) {
        acc += x;
    }
    return acc / static_cast<double>(v.size());
}

double pop_std(std::span<const double> v) {
    double m = mean(v);
    double acc = 0.0;
    for (double x : v) {
        acc += (x - m) * (x - m);
    }
    return std::sqrt(acc / static_cast<double>(v.size()));
}

Vector softmax(const Vector& v) {
    if (v.empty()) {
        throw DomainError("softmax of empty vector");
    }
    double mx = v[0];
    for (std::size_t i = 1; i < v.len(); ++i) {
        mx = std::max(mx, v[i]);
    }
    Vector out(v.len());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.len(); ++i) {
        out[i] = std::exp(v[i] - mx);
        sum += out[i];
    }
    for (std::size_t i = 0; i < v.len(); ++i) {
        out[i] /= sum;
    }
    return out;
}

Vector mean_std_normalize(const Vector& v) {
    if (v.empty()) {
        throw DomainError("mean_std_normalize of empty vector");
    }
    double m = mean(v.values());
    double s = pop_std(v.values());
    Vector out(v.len());
    for (std::size_t i = 0; i < v.len(); ++i) {
        out[i] = (v[i] - m) / (s + kNormalizeEps);
    }
    return out;
}

std::vector<std::size_t> sample_without_replacement(const Vector& p, std::size_t k, Rng& rng) {
    const std::size_t n = p.len();
    if (k < 1 || k > n) {
        throw DomainError("sample_without_replacement: k=" + std::to_string(k) +
                          " out of range for n=" + std::to_string(n));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (p[i] < 0.0) {
            throw DomainError("sample_without_replacement: negative probability");
        }
        sum += p[i];
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw DomainError("sample_without_replacement: probabilities sum to " +
                          std::to_string(sum));
    }
    // Perturbed keys log p_i + G_i; the k largest keys are the sample.
    std::vector<double> key(n);
    for (std::size_t i = 0; i < n; ++i) {
        key[i] = (p[i] > 0.0 ? std::log(p[i]) : -std::numeric_limits<double>::infinity()) +
                 rng.gumbel();
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (key[a] != key[b]) {
            return key[a] > key[b];
        }
        return a < b;
    });
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

void PairwiseAccumulator::add(const Matrix& m) {
    if (count_ > 0 && !slots_.empty()) {
        // Validate against any live partial; all partials share one shape.
        for (const auto& s : slots_) {
            if (s && !s->same_shape(m)) {
                throw DimensionError("pairwise sum: shape " + s->shape_str() + " vs " +
                                     m.shape_str());
            }
        }
    }
    Matrix carry = m;
    std::size_t level = 0;
    while (level < slots_.size() && slots_[level]) {
        // Earlier elements sit in the slot; keep them as the left operand.
        carry = *slots_[level] + carry;
        slots_[level].reset();
        ++level;
    }
    if (level == slots_.size()) {
        slots_.emplace_back();
    }
    slots_[level] = std::move(carry);
    ++count_;
}

Matrix PairwiseAccumulator::finalize() const {
    if (count_ == 0) {
        throw DomainError("pairwise sum of empty sequence");
    }
    std::optional<Matrix> acc;
    for (const auto& s : slots_) {
        if (!s) {
            continue;
        }
        if (!acc) {
            acc = *s;
        } else {
            acc = *s + *acc; // higher level holds earlier elements
        }
    }
    return *acc;
}

Matrix pairwise_sum(std::span<const Matrix> values) {
    PairwiseAccumulator acc;
    for (const Matrix& m : values) {
        acc.add(m);
    }
    return acc.finalize();
}

} // namespace gast
