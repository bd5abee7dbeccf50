// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "rtpd/error.h"
#include "rtpd/targets.h"

using namespace rtpd;

namespace {

// Network whose target net returns `values` for every input; the online net returns
// something else so that reading the wrong weights shows up.
QNetworkPair constant_net(const std::vector<double>& values) {
    auto p = make_zero_qnetwork(dense_arch(1, {}, static_cast<int>(values.size())));
    p.target.layers[0].bias = values;
    for (auto& b : p.online.layers[0].bias) b = -1000.0;
    return p;
}

Transition tr(double r, bool terminal = false) { return {{0.0}, 0, r, {0.0}, terminal}; }

}  // namespace

TEST(Argmax, LowestIndexOnTies) {
    EXPECT_EQ(argmax_lowest(std::vector<double>{1, 3, 3, 2}), 1);
    EXPECT_EQ(argmax_lowest(std::vector<double>{5, 5}), 0);
    EXPECT_EQ(argmax_lowest(std::vector<double>{-1, -2}), 0);
    // Moving the tied pair moves the choice with it.
    EXPECT_EQ(argmax_lowest(std::vector<double>{2, 3, 1, 3}), 1);
    EXPECT_EQ(argmax_lowest(std::vector<double>{3, 2, 3, 1}), 0);
}

TEST(TeacherTarget, Examples) {
    const auto t = constant_net({2.0, 1.5});
    const std::vector<Transition> batch{tr(1.0), tr(5.0, true)};
    const auto y = teacher_target(batch, t, 0.99);
    EXPECT_DOUBLE_EQ(y.y[0], 1.0 + 0.99 * 2.0);
    EXPECT_NEAR(y.y[0], 2.98, 1e-12);
    EXPECT_EQ(y.y[1], 5.0);
    EXPECT_EQ(y.source, TargetSource::teacher);
    EXPECT_EQ(teacher_target(std::vector<Transition>{tr(1.0)}, t, 0.0).y[0], 1.0);
}

TEST(TeacherTarget, Errors) {
    const auto t = constant_net({2.0, 1.5});
    EXPECT_THROW(teacher_target(std::vector<Transition>{}, t, 0.9), InvalidInput);
    EXPECT_THROW(teacher_target(std::vector<Transition>{tr(1)}, t, 1.5), InvalidInput);
    EXPECT_THROW(teacher_target(std::vector<Transition>{tr(1)}, t, -0.1), InvalidInput);
}

TEST(TeacherTarget, ClipRewards) {
    const auto t = constant_net({0.0, 0.0});
    const std::vector<Transition> batch{tr(5.0, true), tr(-3.0, true), tr(0.4, true)};
    const auto y = teacher_target(batch, t, 0.9, true);
    EXPECT_EQ(y.y, (std::vector<double>{1.0, -1.0, 0.4}));
    EXPECT_EQ(teacher_target(batch, t, 0.9, false).y[0], 5.0);
}

TEST(NoImitation, Examples) {
    const auto s = constant_net({0.5, 3.0});
    const std::vector<Transition> batch{tr(0.0), tr(0.7, true)};
    const auto y = student_target_no_imitation(batch, s, 0.5);
    EXPECT_DOUBLE_EQ(y.y[0], 1.5);
    EXPECT_EQ(y.y[1], 0.7);
    EXPECT_EQ(y.source, TargetSource::student_no_imitation);
    EXPECT_EQ(y.y, teacher_target(batch, s, 0.5).y);
}

TEST(Imitation, WorkedExample) {
    const auto teacher = constant_net({1.0, 9.0});
    const auto student = constant_net({7.0, 2.0});
    const std::vector<Transition> batch{tr(0.0)};
    const auto y = student_target_imitation(batch, student, teacher, 1.0);
    EXPECT_EQ(y.y[0], 2.0);
    EXPECT_EQ(y.source, TargetSource::student_imitation);
    EXPECT_EQ(student_target_no_imitation(batch, student, 1.0).y[0], 7.0);
}

TEST(Imitation, IdenticalNetsMatchNoImitation) {
    const auto net = make_qnetwork(dense_arch(3, {5}, 4), 8);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n;
    std::vector<Transition> batch;
    for (int i = 0; i < 16; ++i) batch.push_back({{n(rng), n(rng), n(rng)}, 0, n(rng), {n(rng), n(rng), n(rng)}, i % 5 == 0});
    EXPECT_EQ(student_target_imitation(batch, net, net, 0.9).y, student_target_no_imitation(batch, net, 0.9).y);
}

TEST(Imitation, TerminalNeverQueriesTeacher) {
    const auto student = constant_net({7.0, 2.0});
    const std::vector<Transition> batch{tr(3.0, true), tr(0.0)};
    // A teacher-values row that would throw if it were read for the terminal entry.
    const std::vector<ActionValues> teacher_q{{}, {1.0, 9.0}};
    const auto y = student_target_imitation(batch, student, teacher_q, 1.0);
    EXPECT_EQ(y.y[0], 3.0);
    EXPECT_EQ(y.y[1], 2.0);
}

TEST(Imitation, ActionCountMismatchThrows) {
    const auto teacher = constant_net({1.0, 9.0, 3.0});
    const auto student = constant_net({7.0, 2.0});
    EXPECT_THROW(student_target_imitation(std::vector<Transition>{tr(0)}, student, teacher, 0.9), InvalidInput);
}

TEST(Imitation, DoubleEstimatorBound) {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n;
    for (int draw = 0; draw < 2000; ++draw) {
        const auto teacher = make_qnetwork(dense_arch(3, {6}, 4), rng());
        const auto student = make_qnetwork(dense_arch(3, {4}, 4), rng());
        std::vector<Transition> batch;
        for (int i = 0; i < 5; ++i) batch.push_back({{n(rng), n(rng), n(rng)}, 0, n(rng), {n(rng), n(rng), n(rng)}, i == 4 && draw % 2});
        const double gamma = 0.5 + 0.5 * std::uniform_real_distribution<double>()(rng);
        const auto a = student_target_imitation(batch, student, teacher, gamma).y;
        const auto b = student_target_no_imitation(batch, student, gamma).y;
        for (std::size_t i = 0; i < a.size(); ++i) ASSERT_LE(a[i], b[i]);
    }
}

TEST(Targets, ReadOnlyTargetWeights) {
    // constant_net gives the online nets a huge negative bias; none of it may leak in.
    const auto teacher = constant_net({1.0, 9.0});
    const auto student = constant_net({7.0, 2.0});
    const std::vector<Transition> batch{tr(0.0)};
    EXPECT_EQ(teacher_target(batch, teacher, 1.0).y[0], 9.0);
    EXPECT_EQ(student_target_no_imitation(batch, student, 1.0).y[0], 7.0);
}

TEST(Targets, GammaZeroEqualsRewards) {
    const auto net = make_qnetwork(dense_arch(2, {3}, 3), 4);
    std::vector<Transition> batch;
    std::vector<double> r;
    for (int i = 0; i < 10; ++i) {
        batch.push_back({{0.1 * i, 1.0}, 0, 0.37 * i - 1.0, {1.0, -0.2 * i}, false});
        r.push_back(0.37 * i - 1.0);
    }
    EXPECT_EQ(teacher_target(batch, net, 0.0).y, r);
}
