// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "rtpd/envs.h"
#include "rtpd/error.h"

using namespace rtpd;

namespace {

// Independent 5x5 gridworld DP: goal at (4,4), four compass moves, walls block.
std::vector<double> brute_force_grid(double gamma, double step_r, double goal_r) {
    const int W = 5, H = 5;
    std::vector<double> v(W * H, 0.0);
    const int dx[] = {0, 0, -1, 1}, dy[] = {-1, 1, 0, 0};
    for (int it = 0; it < 20000; ++it) {
        std::vector<double> nv(W * H, 0.0);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double best = -1e300;
                for (int a = 0; a < 4; ++a) {
                    const int nx = std::clamp(x + dx[a], 0, W - 1), ny = std::clamp(y + dy[a], 0, H - 1);
                    const bool goal = nx == W - 1 && ny == H - 1;
                    const double q = goal ? goal_r : step_r + gamma * v[ny * W + nx];
                    best = std::max(best, q);
                }
                nv[y * W + x] = best;
            }
        v.swap(nv);
    }
    return v;
}

std::vector<std::pair<double, bool>> rollout(const EnvSpec& spec, const std::vector<int>& actions, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto st = reset(spec, seed);
    std::vector<std::pair<double, bool>> out;
    for (int a : actions) {
        const auto r = step(st, a, spec, rng);
        out.emplace_back(r.reward, r.terminal);
        if (r.terminal) break;
        st = r.next;
    }
    return out;
}

EnvSpec make(EnvKind k) {
    EnvSpec s;
    s.name = k;
    return s;
}

}  // namespace

TEST(Reset, GridworldStartsAtOrigin) {
    const auto s = make(EnvKind::gridworld);
    const auto a = reset(s, 0), b = reset(s, 0);
    EXPECT_EQ(a.internal, 0);
    EXPECT_EQ(a.steps_elapsed, 0);
    EXPECT_EQ(a.observation, b.observation);
    EXPECT_EQ(a.observation.size(), 27u);
    EXPECT_EQ(a.observation[2], 1.0);
}

TEST(Reset, RandomStartIsSeeded) {
    auto s = make(EnvKind::gridworld);
    s.random_start = true;
    EXPECT_EQ(reset(s, 123).internal, reset(s, 123).internal);
    bool varied = false;
    for (std::uint64_t k = 0; k < 20; ++k) varied |= reset(s, k).internal != reset(s, 0).internal;
    EXPECT_TRUE(varied);
}

TEST(Step, GridworldGoalAndWalls) {
    const auto s = make(EnvKind::gridworld);
    std::mt19937_64 rng(0);
    EnvState st;
    st.internal = 4 * 5 + 3;  // (3,4), goal to the right
    st.observation = observe(s, st.internal);
    const auto r = step(st, 3, s, rng);
    EXPECT_EQ(r.reward, 1.0);
    EXPECT_TRUE(r.terminal);
    const auto w = step(reset(s, 0), 0, s, rng);  // up from (0,0) is a wall
    EXPECT_EQ(w.next.internal, 0);
    EXPECT_EQ(w.reward, -0.01);
    EXPECT_FALSE(w.terminal);
    EXPECT_THROW(step(st, 4, s, rng), InvalidInput);
}

TEST(Step, GridworldTrap) {
    auto s = make(EnvKind::gridworld);
    s.traps = {{1, 0}};
    std::mt19937_64 rng(0);
    const auto r = step(reset(s, 0), 3, s, rng);
    EXPECT_EQ(r.reward, -1.0);
    EXPECT_TRUE(r.terminal);
}

TEST(Step, HazardWrongActionEndsEpisode) {
    const auto s = make(EnvKind::hazard_chain);
    std::mt19937_64 rng(0);
    for (int node = 0; node < s.length; ++node) {
        EnvState st;
        st.internal = node;
        st.observation = observe(s, node);
        int wrong_seen = 0;
        for (int a = 0; a < s.n_actions; ++a) {
            const auto r = step(st, a, s, rng);
            if (r.reward == s.hazard_reward) {
                ++wrong_seen;
                EXPECT_TRUE(r.terminal);
            }
        }
        EXPECT_EQ(wrong_seen, s.n_actions - 1);
    }
}

TEST(Step, DriftActionsDifferByBonusOnly) {
    const auto s = make(EnvKind::drift_field);
    std::mt19937_64 rng(0);
    for (int cell = 0; cell + 1 < s.length; ++cell) {
        EnvState st;
        st.internal = cell;
        st.observation = observe(s, cell);
        double lo = 1e9, hi = -1e9;
        for (int a = 0; a < s.n_actions; ++a) {
            const auto r = step(st, a, s, rng);
            EXPECT_EQ(r.next.internal, cell + 1);
            lo = std::min(lo, r.reward);
            hi = std::max(hi, r.reward);
        }
        EXPECT_LE(hi - lo, 0.01 + 1e-15);
    }
}

TEST(Step, DeterministicWithoutSlip) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> pick(0, 3);
    std::vector<int> actions(300);
    for (auto& a : actions) a = pick(rng);
    for (auto k : {EnvKind::gridworld, EnvKind::hazard_chain, EnvKind::drift_field}) {
        const auto s = make(k);
        EXPECT_EQ(rollout(s, actions, 1), rollout(s, actions, 999));
    }
}

TEST(Step, SlipIsSeeded) {
    auto s = make(EnvKind::gridworld);
    s.slip_prob = 0.3;
    const std::vector<int> actions(60, 3);
    EXPECT_EQ(rollout(s, actions, 4), rollout(s, actions, 4));
}

TEST(Step, EpisodesEndWithinHorizon) {
    auto s = make(EnvKind::gridworld);
    s.horizon = 17;
    std::mt19937_64 rng(3);
    auto st = reset(s, 0);
    int n = 0;
    for (;;) {
        const auto r = step(st, 0, s, rng);  // bumping into the top wall forever
        ++n;
        if (r.terminal) break;
        st = r.next;
    }
    EXPECT_EQ(n, 17);
    auto done = st;
    done.steps_elapsed = 17;
    EXPECT_THROW(step(done, 0, s, rng), InvalidInput);
}

TEST(ValueIteration, SelfLoopGeometricSeries) {
    TabularMdp m;
    m.n_states = 1;
    m.n_actions = 1;
    m.outcomes = {{{Outcome{1.0, 0, 1.0, false}}}};
    const auto r = value_iteration(m, 0.5, 1e-12, 100);
    EXPECT_NEAR(r.values[0], 2.0, 1e-11);
}

TEST(ValueIteration, GridworldMatchesBruteForce) {
    const auto s = make(EnvKind::gridworld);
    const auto r = value_iteration(s, 0.99, 1e-12);
    const auto oracle = brute_force_grid(0.99, -0.01, 1.0);
    for (int st = 0; st < 25; ++st) {
        if (st == 24) continue;  // goal cell is absorbing and never acted from
        EXPECT_NEAR(r.values[st], oracle[st], 1e-9) << st;
    }
    // 8 moves from (0,0): seven steps then the goal.
    EXPECT_NEAR(r.greedy_return, 1.0 - 7 * 0.01, 1e-12);
}

TEST(ValueIteration, GammaZeroIsBestImmediateReward) {
    for (auto k : {EnvKind::gridworld, EnvKind::hazard_chain, EnvKind::drift_field}) {
        const auto s = make(k);
        const auto r = value_iteration(s, 0.0, 1e-12);
        for (int st : decision_states(s)) {
            double best = -1e300;
            for (int a = 0; a < s.action_count(); ++a) best = std::max(best, deterministic_outcome(s, st, a).reward);
            EXPECT_DOUBLE_EQ(r.values[st], best);
        }
    }
}

namespace {

double action_gap(const std::vector<double>& q) {
    auto v = q;
    std::sort(v.rbegin(), v.rend());
    return v[0] - v[1];
}

}  // namespace

TEST(ValueIteration, HazardIsActionCritical) {
    const auto s = make(EnvKind::hazard_chain);
    const auto r = value_iteration(s, 0.99, 1e-12);
    for (int st : decision_states(s)) EXPECT_GT(action_gap(r.q[st]), 0.5) << st;
}

TEST(ValueIteration, DriftIsActionInsensitive) {
    const auto s = make(EnvKind::drift_field);
    const auto r = value_iteration(s, 0.99, 1e-12);
    for (int st : decision_states(s)) EXPECT_LT(action_gap(r.q[st]), 0.02) << st;
}

TEST(ValueIteration, SlipLowersValue) {
    auto s = make(EnvKind::gridworld);
    const double v0 = value_iteration(s, 0.99).start_value;
    s.slip_prob = 0.2;
    EXPECT_LT(value_iteration(s, 0.99).start_value, v0);
}

TEST(EnvSpec, ValidationAndJson) {
    auto s = make(EnvKind::gridworld);
    s.traps = {{4, 4}};
    EXPECT_THROW(s.validate(), InvalidInput);
    EXPECT_THROW(env_from_json({{"width", 5}}), InvalidInput);
    EXPECT_THROW(env_from_json({{"name", "pong"}}), InvalidInput);
    auto h = make(EnvKind::hazard_chain);
    h.length = 6;
    h.n_actions = 3;
    const auto back = env_from_json(env_to_json(h));
    EXPECT_EQ(back.length, 6);
    EXPECT_EQ(back.n_actions, 3);
    EXPECT_EQ(back.observation_dim(), 7u);
    EXPECT_EQ(env_to_json(back), env_to_json(h));
}
