#include <doctest.h>

#include <cmath>
#include <set>

#include "sonobox/rng.hpp"

using namespace sonobox;

TEST_CASE("same seed reproduces the stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.uniform() == b.uniform());
}

TEST_CASE("uniform stays in range and is roughly centered") {
    Rng rng(7);
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("bounded uniform respects its interval") {
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform(-2.0, 3.0);
        REQUIRE(u >= -2.0);
        REQUIRE(u < 3.0);
    }
}

TEST_CASE("normal has unit scale") {
    Rng rng(3);
    double sum = 0.0, sq = 0.0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("integer covers all residues") {
    Rng rng(5);
    std::set<uint64_t> seen;
    for (int i = 0; i < 500; ++i) {
        const uint64_t v = rng.integer(7);
        REQUIRE(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("seed hashing separates indices and attempts") {
    std::set<uint64_t> seeds;
    for (uint64_t i = 0; i < 100; ++i) seeds.insert(hash_seed(123, i));
    CHECK(seeds.size() == 100);
    CHECK(hash_seed(123, 4) != hash_seed(123, 4, 0));
    CHECK(hash_seed(123, 4, 0) != hash_seed(123, 4, 1));
    CHECK(hash_seed(123, 4) != hash_seed(124, 4));
}
