#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "monogp/rng.hpp"

using namespace monogp;

TEST_CASE("same seed reproduces the exact draw sequence") {
    Rng a(1234);
    Rng b(1234);
    for (int i = 0; i < 50; ++i) {
        CHECK(a.uniform() == b.uniform());
        CHECK(a.normal() == b.normal());
    }
}

TEST_CASE("different seeds give different sequences") {
    Rng a(1);
    Rng b(2);
    int differing = 0;
    for (int i = 0; i < 20; ++i)
        if (a.uniform() != b.uniform()) ++differing;
    CHECK(differing >= 19);
}

TEST_CASE("uniform stays in range") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = rng.uniform(-2.5, 3.5);
        CHECK(v >= -2.5);
        CHECK(v < 3.5);
    }
}

TEST_CASE("normal draws have the right first two moments") {
    Rng rng(42);
    const int n = 100000;
    double sum = 0.0;
    double sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("scaled normal applies mean and std") {
    Rng a(9);
    Rng b(9);
    for (int i = 0; i < 10; ++i) {
        const double raw = a.normal();
        CHECK(b.normal(3.0, 2.0) == 3.0 + 2.0 * raw);
    }
}

TEST_CASE("integer draws stay below the bound and cover all residues") {
    Rng rng(5);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 500; ++i) {
        const std::uint64_t k = rng.integer(7);
        CHECK(k < 7);
        seen.insert(k);
    }
    CHECK(seen.size() == 7);
}
