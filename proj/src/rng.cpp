#include "gast/rng.hpp"

#include <algorithm>
#include <cmath>

#include "gast/errors.hpp"

namespace gast {

namespace {

// FNV-1a over the scope name; keeps differently named streams apart even for
// equal integer labels.
std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t splitmix_step(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t Rng::mix(std::uint64_t x) {
    std::uint64_t s = x;
    return splitmix_step(s);
}

Rng Rng::stream(std::string_view scope) const { return stream(scope, 0, 0); }

Rng Rng::stream(std::string_view scope, std::uint64_t a) const { return stream(scope, a, 0); }

Rng Rng::stream(std::string_view scope, std::uint64_t a, std::uint64_t b) const {
    std::uint64_t s = seed_;
    s = mix(s ^ fnv1a(scope));
    s = mix(s ^ a);
    s = mix(s ^ b);
    return Rng(seed_, s);
}

std::uint64_t Rng::next_u64() { return splitmix_step(state_); }

double Rng::uniform() {
    // 53 random bits -> [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
    // Box-Muller without the cached spare; u1 shifted away from zero.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::gumbel() {
    double u = 1.0 - uniform(); // (0, 1]
    return -std::log(-std::log(u) + 1e-300);
}

std::size_t Rng::uniform_index(std::size_t n) {
    if (n == 0) {
        throw DomainError("uniform_index: n must be positive");
    }
    // Rejection-free modulo is fine at 64-bit width for desk-scale n.
    return static_cast<std::size_t>(next_u64() % n);
}

std::vector<std::size_t> Rng::distinct_indices(std::size_t n, std::size_t k) {
    if (k > n) {
        throw DomainError("distinct_indices: k=" + std::to_string(k) + " exceeds n=" +
                          std::to_string(n));
    }
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) {
        idx[i] = i;
    }
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + uniform_index(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) {
        idx[i] = i;
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        std::size_t j = i + uniform_index(n - i);
        std::swap(idx[i], idx[j]);
    }
    return idx;
}

} // namespace gast
