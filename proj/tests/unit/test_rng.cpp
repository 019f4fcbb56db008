#include <doctest.h>

#include <cmath>
#include <vector>

#include "capexrl/env.hpp"
#include "capexrl/rng.hpp"

using namespace capexrl;

TEST_CASE("fixed seed reproduces the exact draw sequence") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    Rng c(42);
    Rng d(43);
    bool all_equal = true;
    for (int i = 0; i < 16; ++i) {
        if (c.next_u64() != d.next_u64()) all_equal = false;
    }
    CHECK_FALSE(all_equal);
}

TEST_CASE("normal draws from fixed seed are reproducible") {
    Rng a(7);
    Rng b(7);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.normal() == b.normal());
    }
}

TEST_CASE("sample_log_ratio moment check: 1e5 draws at (0.05, 0.1)") {
    Rng rng(12345);
    const int n = 100000;
    double sum = 0.0;
    std::vector<double> draws(n);
    for (int i = 0; i < n; ++i) {
        draws[i] = sample_log_ratio(0.05, 0.1, rng);
        sum += draws[i];
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (double d : draws) ss += (d - mean) * (d - mean);
    const double sd = std::sqrt(ss / (n - 1));

    CHECK(std::abs(mean - 0.05) < 0.002);
    CHECK(std::abs(sd - 0.1) < 0.005);
}

TEST_CASE("vanishing volatility collapses the draw to the drift") {
    Rng rng(1);
    for (int i = 0; i < 10; ++i) {
        CHECK(sample_log_ratio(0.07, 1e-15, rng) == doctest::Approx(0.07).epsilon(1e-9));
    }
}

TEST_CASE("uniform_index is unbiased over a small range") {
    Rng rng(99);
    std::vector<int> counts(10, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[rng.uniform_index(10)];
    for (int c : counts) {
        CHECK(std::abs(c / static_cast<double>(n) - 0.1) < 0.01);
    }
}

TEST_CASE("derived streams differ by tag and index") {
    const std::uint64_t root = 1234;
    CHECK(derive_stream(root, "env") != derive_stream(root, "explore"));
    CHECK(derive_stream(root, "rollout", 0) != derive_stream(root, "rollout", 1));
    CHECK(derive_stream(root, "env") == derive_stream(root, "env"));
    CHECK(derive_stream(root, "env") != derive_stream(root + 1, "env"));
}
