// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rtpd/error.h"
#include "rtpd/replay.h"

using namespace rtpd;

namespace {

Transition numbered(int k) { return {{double(k)}, k % 3, 0.5 * k, {double(k + 1)}, k % 7 == 0}; }

}  // namespace

TEST(Replay, FifoEviction) {
    ReplayBuffer b(3);
    EXPECT_EQ(b.size(), 0u);
    b.push(numbered(0));
    EXPECT_EQ(b.size(), 1u);
    for (int k = 1; k < 4; ++k) b.push(numbered(k));
    ASSERT_EQ(b.size(), 3u);
    EXPECT_TRUE(b.full());
    for (int i = 0; i < 3; ++i) EXPECT_EQ(b.at(i).state[0], double(i + 1));
}

TEST(Replay, FillSaturatesAtCapacity) {
    ReplayBuffer b(10);
    for (int k = 0; k < 57; ++k) b.push(numbered(k));
    EXPECT_EQ(b.size(), 10u);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(b.at(i).state[0], double(47 + i));
    EXPECT_THROW(b.at(10), InvalidInput);
    EXPECT_THROW(ReplayBuffer(0), std::invalid_argument);
}

TEST(Replay, NotReadyBelowMinFill) {
    ReplayBuffer b(100);
    std::mt19937_64 rng(1);
    EXPECT_FALSE(b.sample_shared(4, rng).has_value());
    for (int k = 0; k < 9; ++k) b.push(numbered(k));
    EXPECT_FALSE(b.sample_shared(4, rng, 10).has_value());
    b.push(numbered(9));
    EXPECT_TRUE(b.sample_shared(4, rng, 10).has_value());
}

TEST(Replay, SingleItemGivesCopies) {
    ReplayBuffer b(5);
    b.push(numbered(3));
    std::mt19937_64 rng(2);
    const auto batch = b.sample_shared(4, rng);
    ASSERT_TRUE(batch);
    ASSERT_EQ(batch->size(), 4u);
    for (const auto& t : batch->transitions) EXPECT_EQ(t.state[0], 3.0);
    for (auto i : batch->indices) EXPECT_EQ(i, 0u);
}

TEST(Replay, SeededSamplingIsReproducible) {
    ReplayBuffer b(50);
    for (int k = 0; k < 50; ++k) b.push(numbered(k));
    std::mt19937_64 r1(77), r2(77);
    for (int t = 0; t < 20; ++t) {
        const auto x = b.sample_shared(16, r1), y = b.sample_shared(16, r2);
        EXPECT_EQ(x->indices, y->indices);
        EXPECT_EQ(x->content_hash(), y->content_hash());
    }
}

TEST(Replay, ContentHashSeesEveryField) {
    ReplayBuffer b(4);
    b.push(numbered(1));
    std::mt19937_64 rng(0);
    const auto base = b.sample_shared(1, rng)->content_hash();
    auto check = [&](auto mutate) {
        Batch c{{numbered(1)}, {0}};
        mutate(c.transitions[0]);
        EXPECT_NE(c.content_hash(), base);
    };
    check([](Transition& t) { t.state[0] += 1; });
    check([](Transition& t) { t.action += 1; });
    check([](Transition& t) { t.reward += 1; });
    check([](Transition& t) { t.next_state[0] += 1; });
    check([](Transition& t) { t.terminal = !t.terminal; });
}

TEST(Replay, UniformWithinThreeSigma) {
    ReplayBuffer b(10);
    for (int k = 0; k < 10; ++k) b.push(numbered(k));
    std::mt19937_64 rng(12345);
    std::vector<int> counts(10, 0);
    int total = 0;
    while (total < 100000) {
        const auto batch = b.sample_shared(100, rng);
        for (auto i : batch->indices) ++counts[i];
        total += 100;
    }
    const double p = 0.1, mean = total * p, sigma = std::sqrt(total * p * (1 - p));
    for (int c : counts) EXPECT_LE(std::abs(c - mean), 3 * sigma);
}
