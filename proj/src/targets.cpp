// SPDX-License-Identifier: Apache-2.0
#include "rtpd/targets.h"

#include <algorithm>

#include "rtpd/error.h"

namespace rtpd {

int argmax_lowest(std::span<const double> q) {
    if (q.empty()) throw InvalidInput("argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < q.size(); ++i)
        if (q[i] > q[best]) best = i;
    return static_cast<int>(best);
}

double clip_reward(double r, bool enabled) { return enabled ? std::clamp(r, -1.0, 1.0) : r; }

namespace {

void check_batch(std::span<const Transition> batch, double gamma) {
    if (batch.empty()) throw InvalidInput("target construction needs a non-empty batch");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInput("gamma must lie in [0, 1]");
}

}  // namespace

TargetVector max_target_from_values(std::span<const Transition> batch, std::span<const ActionValues> next_q,
                                    double gamma, TargetSource source, bool clip_rewards) {
    check_batch(batch, gamma);
    if (next_q.size() != batch.size()) throw InvalidInput("next-state values do not match the batch");
    TargetVector t;
    t.source = source;
    t.y.resize(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& tr = batch[i];
        const double r = clip_reward(tr.reward, clip_rewards);
        if (tr.terminal) {
            t.y[i] = r;
            continue;
        }
        const auto& q = next_q[i];
        t.y[i] = r + gamma * q[static_cast<std::size_t>(argmax_lowest(q))];
    }
    return t;
}

namespace {

TargetVector own_max_target(std::span<const Transition> batch, const QNetworkPair& net, double gamma,
                            TargetSource source, bool clip_rewards) {
    check_batch(batch, gamma);
    std::vector<ActionValues> next_q(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i)
        if (!batch[i].terminal) next_q[i] = forward(net, Which::target, batch[i].next_state);
    return max_target_from_values(batch, next_q, gamma, source, clip_rewards);
}

}  // namespace

TargetVector teacher_target(std::span<const Transition> batch, const QNetworkPair& teacher, double gamma,
                            bool clip_rewards) {
    return own_max_target(batch, teacher, gamma, TargetSource::teacher, clip_rewards);
}

TargetVector student_target_no_imitation(std::span<const Transition> batch, const QNetworkPair& student,
                                         double gamma, bool clip_rewards) {
    return own_max_target(batch, student, gamma, TargetSource::student_no_imitation, clip_rewards);
}

TargetVector student_target_imitation(std::span<const Transition> batch, const QNetworkPair& student,
                                      std::span<const ActionValues> teacher_next_q, double gamma,
                                      bool clip_rewards) {
    check_batch(batch, gamma);
    if (teacher_next_q.size() != batch.size()) throw InvalidInput("teacher values do not match the batch");
    TargetVector t;
    t.source = TargetSource::student_imitation;
    t.y.resize(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& tr = batch[i];
        const double r = clip_reward(tr.reward, clip_rewards);
        if (tr.terminal) {
            t.y[i] = r;
            continue;
        }
        const auto q_s = forward(student, Which::target, tr.next_state);
        if (teacher_next_q[i].size() != q_s.size())
            throw InvalidInput("teacher and student action counts differ");
        const int a_star = argmax_lowest(teacher_next_q[i]);
        t.y[i] = r + gamma * q_s[static_cast<std::size_t>(a_star)];
    }
    return t;
}

TargetVector student_target_imitation(std::span<const Transition> batch, const QNetworkPair& student,
                                      const QNetworkPair& teacher, double gamma, bool clip_rewards) {
    check_batch(batch, gamma);
    if (student.online.n_actions() != teacher.online.n_actions())
        throw InvalidInput("teacher and student action counts differ");
    std::vector<ActionValues> teacher_q(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i)
        if (!batch[i].terminal) teacher_q[i] = forward(teacher, Which::target, batch[i].next_state);
    return student_target_imitation(batch, student, teacher_q, gamma, clip_rewards);
}

}  // namespace rtpd
