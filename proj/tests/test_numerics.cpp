#include <cmath>
#include <set>
#include <vector>

#include <doctest.h>

#include "gast/errors.hpp"
#include "gast/matrix.hpp"
#include "gast/numerics.hpp"
#include "gast/rng.hpp"
#include "helpers.hpp"

using namespace gast;
using gast::testutil::bit_equal;

TEST_CASE("matmul basic products") {
    Matrix b{{5, 6}, {7, 8}};
    CHECK(bit_equal(matmul(Matrix::identity(2), b), b));

    Matrix zero(2, 2);
    CHECK(bit_equal(matmul(zero, b), zero));

    Matrix a{{1, 2}, {3, 4}};
    Matrix want{{19, 22}, {43, 50}};
    CHECK(bit_equal(matmul(a, b), want));
}

TEST_CASE("matmul shape mismatch names both shapes") {
    Matrix a(2, 3);
    Matrix b(2, 2);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x3"), DimensionError);
    try {
        matmul(a, b);
    } catch (const DimensionError& e) {
        CHECK(std::string(e.what()).find("2x2") != std::string::npos);
    }
}

TEST_CASE("matmul associativity on small integers") {
    Rng rng(7);
    Matrix a(3, 4), b(4, 2), c(2, 5);
    for (auto* m : {&a, &b, &c}) {
        for (std::size_t i = 0; i < m->rows(); ++i) {
            for (std::size_t j = 0; j < m->cols(); ++j) {
                (*m)(i, j) = static_cast<double>(rng.uniform_index(7)) - 3.0;
            }
        }
    }
    CHECK(bit_equal(matmul(matmul(a, b), c), matmul(a, matmul(b, c))));
}

TEST_CASE("matmul parallel equals serial bit for bit") {
    Rng rng(11);
    Matrix a(70, 90), b(90, 60); // big enough to hit the parallel path
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            a(i, j) = rng.gaussian();
        }
    }
    for (std::size_t i = 0; i < b.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            b(i, j) = rng.gaussian();
        }
    }
    CHECK(bit_equal(matmul(a, b), matmul_serial(a, b)));
}

TEST_CASE("softmax oracle values") {
    Vector s = softmax(Vector{0.0, 0.0});
    CHECK(s[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(s[1] == doctest::Approx(0.5).epsilon(1e-14));

    Vector big = softmax(Vector{1000.0, 1000.0});
    CHECK(big[0] == doctest::Approx(0.5).epsilon(1e-14));

    Vector ln = softmax(Vector{std::log(1.0), std::log(2.0), std::log(3.0)});
    CHECK(ln[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(ln[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(ln[2] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax simplex and shift invariance") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        Vector v(5);
        for (std::size_t i = 0; i < v.len(); ++i) {
            v[i] = 3.0 * rng.gaussian();
        }
        Vector p = softmax(v);
        double sum = 0.0;
        for (std::size_t i = 0; i < p.len(); ++i) {
            CHECK(p[i] > 0.0);
            CHECK(p[i] < 1.0);
            sum += p[i];
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);

        Vector shifted(5);
        for (std::size_t i = 0; i < v.len(); ++i) {
            shifted[i] = v[i] + 17.25;
        }
        Vector q = softmax(shifted);
        for (std::size_t i = 0; i < p.len(); ++i) {
            CHECK(std::abs(p[i] - q[i]) <= 1e-12);
        }
    }
    CHECK_THROWS_AS(softmax(Vector{}), DomainError);
}

TEST_CASE("mean_std_normalize oracle values") {
    Vector c = mean_std_normalize(Vector{4.2, 4.2, 4.2});
    for (std::size_t i = 0; i < c.len(); ++i) {
        CHECK(c[i] == 0.0);
    }
    Vector one = mean_std_normalize(Vector{13.0});
    CHECK(one[0] == 0.0);

    // mean 2, population std sqrt(2/3)
    Vector n = mean_std_normalize(Vector{1.0, 2.0, 3.0});
    CHECK(n[0] == doctest::Approx(-1.224744871391589).epsilon(1e-7));
    CHECK(n[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(n[2] == doctest::Approx(1.224744871391589).epsilon(1e-7));
}

TEST_CASE("mean_std_normalize output moments") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        Vector v(16);
        for (std::size_t i = 0; i < v.len(); ++i) {
            v[i] = 2.0 + 5.0 * rng.gaussian();
        }
        Vector out = mean_std_normalize(v);
        CHECK(std::abs(mean(out.values())) <= 1e-9);
        double in_std = pop_std(v.values());
        CHECK(std::abs(pop_std(out.values()) - 1.0) <= 1e-6 * (1.0 + 1.0 / in_std));
    }
}

TEST_CASE("sample_without_replacement basics") {
    Rng rng(1);
    Vector uniform4{0.25, 0.25, 0.25, 0.25};
    auto all = sample_without_replacement(uniform4, 4, rng);
    CHECK(all == std::vector<std::size_t>{0, 1, 2, 3});

    Vector hot{0.0, 0.0, 1.0, 0.0};
    auto idx = sample_without_replacement(hot, 1, rng);
    CHECK(idx == std::vector<std::size_t>{2});

    CHECK_THROWS_AS(sample_without_replacement(uniform4, 0, rng), DomainError);
    CHECK_THROWS_AS(sample_without_replacement(uniform4, 5, rng), DomainError);
}

TEST_CASE("sample_without_replacement distinct ascending and deterministic") {
    Rng root(42);
    Vector p(10);
    Rng fill = root.stream("fill");
    double sum = 0.0;
    for (std::size_t i = 0; i < p.len(); ++i) {
        p[i] = fill.uniform() + 0.01;
        sum += p[i];
    }
    for (std::size_t i = 0; i < p.len(); ++i) {
        p[i] /= sum;
    }
    for (std::size_t k = 1; k <= 10; ++k) {
        Rng a = root.stream("draw", k);
        Rng b = root.stream("draw", k);
        auto ia = sample_without_replacement(p, k, a);
        auto ib = sample_without_replacement(p, k, b);
        CHECK(ia == ib);
        CHECK(ia.size() == k);
        std::set<std::size_t> uniq(ia.begin(), ia.end());
        CHECK(uniq.size() == k);
        for (std::size_t j = 1; j < ia.size(); ++j) {
            CHECK(ia[j - 1] < ia[j]);
        }
    }
}

TEST_CASE("sample_without_replacement marginal frequencies, uniform p") {
    Vector p(16);
    for (std::size_t i = 0; i < p.len(); ++i) {
        p[i] = 1.0 / 16.0;
    }
    std::vector<std::size_t> hits(16, 0);
    Rng root(2024);
    const int trials = 100000;
    for (int t = 0; t < trials; ++t) {
        Rng r = root.stream("trial", static_cast<std::uint64_t>(t));
        for (std::size_t i : sample_without_replacement(p, 8, r)) {
            ++hits[i];
        }
    }
    for (std::size_t i = 0; i < 16; ++i) {
        double freq = static_cast<double>(hits[i]) / trials;
        CHECK(freq == doctest::Approx(0.5).epsilon(0.02)); // 0.5 +- 0.01
    }
}

TEST_CASE("sample_without_replacement monotone in p") {
    // Indices with double the probability should be included noticeably
    // more often.
    Vector p{0.2, 0.1, 0.2, 0.1, 0.2, 0.1, 0.05, 0.05};
    std::vector<std::size_t> hits(8, 0);
    Rng root(7);
    const int trials = 20000;
    for (int t = 0; t < trials; ++t) {
        Rng r = root.stream("mono", static_cast<std::uint64_t>(t));
        for (std::size_t i : sample_without_replacement(p, 3, r)) {
            ++hits[i];
        }
    }
    CHECK(hits[0] > hits[1]);
    CHECK(hits[2] > hits[3]);
    CHECK(hits[4] > hits[5]);
    CHECK(hits[1] > hits[6]);
}

TEST_CASE("pairwise_sum matches sequential oracle") {
    Matrix a{{1.0, -2.0}, {3.0, 0.5}};
    std::vector<Matrix> single{a};
    CHECK(bit_equal(pairwise_sum(single), a));

    Matrix neg = a;
    neg *= -1.0;
    std::vector<Matrix> cancel{a, neg};
    Matrix zero2(2, 2);
    CHECK(bit_equal(pairwise_sum(cancel), zero2));

    Rng rng(9);
    std::vector<Matrix> ms;
    for (int k = 0; k < 7; ++k) {
        Matrix m(3, 2);
        for (std::size_t i = 0; i < m.rows(); ++i) {
            for (std::size_t j = 0; j < m.cols(); ++j) {
                m(i, j) = rng.gaussian();
            }
        }
        ms.push_back(std::move(m));
    }
    Matrix seq(3, 2);
    for (const Matrix& m : ms) {
        seq += m;
    }
    Matrix pw = pairwise_sum(ms);
    for (std::size_t i = 0; i < seq.rows(); ++i) {
        for (std::size_t j = 0; j < seq.cols(); ++j) {
            CHECK(pw(i, j) == doctest::Approx(seq(i, j)).epsilon(1e-12));
        }
    }

    std::vector<Matrix> bad{Matrix(2, 2), Matrix(2, 3)};
    CHECK_THROWS_AS(pairwise_sum(bad), DimensionError);
}

TEST_CASE("pairwise accumulator is order-deterministic and streaming") {
    Rng rng(123);
    std::vector<Matrix> ms;
    for (int k = 0; k < 13; ++k) {
        Matrix m(2, 2);
        for (std::size_t i = 0; i < m.rows(); ++i) {
            for (std::size_t j = 0; j < m.cols(); ++j) {
                m(i, j) = rng.gaussian();
            }
        }
        ms.push_back(std::move(m));
    }
    PairwiseAccumulator acc;
    for (const Matrix& m : ms) {
        acc.add(m);
    }
    CHECK(acc.count() == 13);
    CHECK(bit_equal(acc.finalize(), pairwise_sum(ms)));

    PairwiseAccumulator again;
    for (const Matrix& m : ms) {
        again.add(m);
    }
    CHECK(bit_equal(acc.finalize(), again.finalize()));

    PairwiseAccumulator empty;
    CHECK(empty.empty());
    CHECK_THROWS_AS(empty.finalize(), DomainError);
}

TEST_CASE("rng streams are stable and order-independent") {
    Rng root(99);
    Rng a = root.stream("alpha", 3, 1);
    double first = a.uniform();

    // Consuming other streams in between must not disturb the draw.
    Rng root2(99);
    Rng noise = root2.stream("beta");
    (void)noise.next_u64();
    (void)root2.stream("gamma", 7).gaussian();
    Rng a2 = root2.stream("alpha", 3, 1);
    CHECK(a2.uniform() == first);

    Rng b = root.stream("alpha", 3, 2);
    CHECK(b.uniform() != first);
}

TEST_CASE("rng distinct_indices and permutation") {
    Rng root(5);
    Rng r = root.stream("pick");
    auto idx = r.distinct_indices(10, 4);
    CHECK(idx.size() == 4);
    for (std::size_t j = 1; j < idx.size(); ++j) {
        CHECK(idx[j - 1] < idx[j]);
    }
    Rng r2 = root.stream("pick");
    CHECK(r2.distinct_indices(10, 4) == idx);
    CHECK_THROWS_AS(r.distinct_indices(3, 4), DomainError);

    Rng p = root.stream("perm");
    auto perm = p.permutation(8);
    std::set<std::size_t> uniq(perm.begin(), perm.end());
    CHECK(uniq.size() == 8);
    CHECK(*uniq.begin() == 0);
    CHECK(*uniq.rbegin() == 7);
}

TEST_CASE("matrix constructors reject non-finite data") {
    CHECK_THROWS_AS(Matrix(1, 2, {1.0, std::nan("")}), DomainError);
    std::vector<double> inf_data{std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(Vector{inf_data}, DomainError);
    CHECK_THROWS_AS(Matrix(2, 2, {1.0, 2.0, 3.0}), DimensionError);
}
