#include <doctest.h>

#include <vector>

#include "capexrl/replay.hpp"

using namespace capexrl;

namespace {

Experience tagged(double reward) {
    Experience e;
    e.reward = reward;
    return e;
}

}  // namespace

TEST_CASE("FIFO eviction drops the oldest entry first") {
    ReplayBuffer buf(2);
    buf.push(tagged(1));  // a
    buf.push(tagged(2));  // b
    buf.push(tagged(3));  // c evicts a
    const auto contents = buf.snapshot();
    REQUIRE(contents.size() == 2);
    CHECK(contents[0].reward == 2);
    CHECK(contents[1].reward == 3);
}

TEST_CASE("size grows to capacity and stays there") {
    ReplayBuffer buf(1000);
    CHECK(buf.size() == 0);
    buf.push(tagged(0));
    CHECK(buf.size() == 1);
    for (int i = 0; i < 10000; ++i) buf.push(tagged(i));
    CHECK(buf.size() == 1000);
    CHECK(buf.total_pushed() == 10001);
}

TEST_CASE("sampling a single-element buffer repeats that element") {
    ReplayBuffer buf(8);
    buf.push(tagged(7));
    Rng rng(1);
    const auto batch = buf.sample(5, rng);
    REQUIRE_FALSE(batch.has_value());  // size 1 < 5: not ready

    const auto one = buf.sample(1, rng);
    REQUIRE(one.has_value());
    CHECK((*one)[0].reward == 7);

    // n = buffer size, with replacement: always the one element
    for (int i = 0; i < 10; ++i) {
        const auto again = buf.sample(1, rng);
        CHECK((*again)[0].reward == 7);
    }
}

TEST_CASE("n = 0 yields an empty batch") {
    ReplayBuffer buf(4);
    buf.push(tagged(1));
    Rng rng(1);
    const auto batch = buf.sample(0, rng);
    REQUIRE(batch.has_value());
    CHECK(batch->empty());
}

TEST_CASE("underfull buffer signals not-ready") {
    ReplayBuffer buf(100);
    for (int i = 0; i < 9; ++i) buf.push(tagged(i));
    Rng rng(1);
    CHECK_FALSE(buf.ready(10));
    CHECK_FALSE(buf.sample(10, rng).has_value());
    buf.push(tagged(9));
    CHECK(buf.ready(10));
    CHECK(buf.sample(10, rng).has_value());
}

TEST_CASE("sampling is uniform over contents") {
    ReplayBuffer buf(10);
    for (int i = 0; i < 10; ++i) buf.push(tagged(i));
    Rng rng(77);
    std::vector<int> counts(10, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto batch = buf.sample(1, rng);
        ++counts[static_cast<int>((*batch)[0].reward)];
    }
    for (int c : counts) {
        CHECK(std::abs(c / static_cast<double>(n) - 0.1) < 0.01);
    }
}
