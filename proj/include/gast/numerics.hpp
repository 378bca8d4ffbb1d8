#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gast/matrix.hpp"
#include "gast/rng.hpp"

namespace gast {

double mean(std::span<const double> v);
// Population standard deviation (divides by n, not n-1).
double pop_std(std::span<const double> v);

// Max-shifted softmax; entries in (0,1), sum 1 within 1e-12.
Vector softmax(const Vector& v);

// (v - mean) / (pop_std + 1e-8). The epsilon keeps constant and singleton
// inputs defined (they map to all zeros).
Vector mean_std_normalize(const Vector& v);
inline constexpr double kNormalizeEps = 1e-8;

// Gumbel-top-k draw of k distinct indices from the simplex p, ascending.
// The per-index Gumbel noise is drawn in index order from rng, so the result
// is a pure function of (p, k, rng stream).
std::vector<std::size_t> sample_without_replacement(const Vector& p, std::size_t k, Rng& rng);

// Streaming pairwise (binary-counter) summation. Feeding elements in a fixed
// order yields a bit-deterministic result independent of how callers batch
// their work; pairwise_sum() below and all gradient aggregation use it.
class PairwiseAccumulator {
  public:
    void add(const Matrix& m);
    std::size_t count() const { return count_; }
    bool empty() const { return count_ == 0; }
    // Combines the remaining partials (lowest level first). Errors on empty.
    Matrix finalize() const;

  private:
    std::vector<std::optional<Matrix>> slots_;
    std::size_t count_ = 0;
};

Matrix pairwise_sum(std::span<const Matrix> values);

} // namespace gast
