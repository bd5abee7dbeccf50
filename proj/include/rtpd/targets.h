// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "rtpd/qnet.h"
#include "rtpd/replay.h"

namespace rtpd {

enum class TargetSource { teacher, student_imitation, student_no_imitation };

struct TargetVector {
    std::vector<double> y;
    TargetSource source = TargetSource::teacher;
};

/// Index of the largest entry; the lowest index wins ties.
int argmax_lowest(std::span<const double> q);

/// Optional clip of rewards to [-1, 1] before they enter any target.
double clip_reward(double r, bool enabled);

/// y = r + gamma * max_a Q_T(s', a; target weights); y = r on terminal transitions.
TargetVector teacher_target(std::span<const Transition> batch, const QNetworkPair& teacher, double gamma,
                            bool clip_rewards = false);

/// The max-rule target from precomputed target-net values on each next state.
TargetVector max_target_from_values(std::span<const Transition> batch, std::span<const ActionValues> next_q,
                                    double gamma, TargetSource source, bool clip_rewards = false);

/// Same rule as teacher_target, evaluated on the student's own target network.
TargetVector student_target_no_imitation(std::span<const Transition> batch, const QNetworkPair& student,
                                         double gamma, bool clip_rewards = false);

/// a* = argmax_a Q_T(s', a; teacher target weights); y = r + gamma * Q_S(s', a*; student target weights).
/// The teacher is never queried for terminal transitions.
TargetVector student_target_imitation(std::span<const Transition> batch, const QNetworkPair& student,
                                      const QNetworkPair& teacher, double gamma, bool clip_rewards = false);

/// Variant of student_target_imitation taking precomputed teacher target-net values on
/// each next state (entries for terminal transitions are ignored).
TargetVector student_target_imitation(std::span<const Transition> batch, const QNetworkPair& student,
                                      std::span<const ActionValues> teacher_next_q, double gamma,
                                      bool clip_rewards = false);

}  // namespace rtpd
