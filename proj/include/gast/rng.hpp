#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace gast {

// Seeded random stream. A stream is identified by (root seed, scope name,
// up to two integer labels); deriving the same stream twice yields the same
// draw sequence no matter what other streams were consumed in between.
// Distributions are hand-rolled on top of splitmix64 output so sequences do
// not depend on the standard library implementation.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), state_(mix(seed)) {}

    // Derive an independent child stream. The parent's state is untouched.
    Rng stream(std::string_view scope) const;
    Rng stream(std::string_view scope, std::uint64_t a) const;
    Rng stream(std::string_view scope, std::uint64_t a, std::uint64_t b) const;

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();
    double uniform();  // [0, 1)
    double gaussian(); // standard normal, Box-Muller
    double gumbel();   // standard Gumbel(0, 1)

    // Uniform integer in [0, n).
    std::size_t uniform_index(std::size_t n);

    // k distinct uniform indices from [0, n), returned in ascending order.
    std::vector<std::size_t> distinct_indices(std::size_t n, std::size_t k);

    // Uniform permutation of 0..n-1 (Fisher-Yates).
    std::vector<std::size_t> permutation(std::size_t n);

  private:
    Rng(std::uint64_t seed, std::uint64_t state) : seed_(seed), state_(state) {}
    static std::uint64_t mix(std::uint64_t x);

    std::uint64_t seed_;
    std::uint64_t state_;
};

} // namespace gast
