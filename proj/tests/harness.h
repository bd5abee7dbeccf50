// SPDX-License-Identifier: Apache-2.0
#pragma once

// Independent replicas used to cross-check the training loop.

#include <cstdint>
#include <string>
#include <vector>

#include "rtpd/losses.h"
#include "rtpd/qnet.h"
#include "rtpd/replay.h"
#include "rtpd/targets.h"
#include "rtpd/trainer.h"

namespace rtpd::testing {

/// A standalone DQN learner: own-target max rule, squared loss on the taken action.
struct PlainDqn {
    QNetworkPair net;
    OptimizerConfig optimizer;
    OptimizerState state;
    double gamma = 0.99;
    int sync_every = 1;
    std::int64_t updates = 0;

    void step(const Batch& batch) {
        const std::span<const Transition> tr(batch.transitions);
        const auto y = student_target_no_imitation(tr, net, gamma);
        std::vector<std::vector<double>> states, grads;
        std::vector<double> pred;
        for (const auto& t : tr) {
            states.push_back(t.state);
            pred.push_back(net.online.forward(t.state)[static_cast<std::size_t>(t.action)]);
        }
        const auto g = dqn_loss_gradient(y.y, pred);
        for (std::size_t i = 0; i < tr.size(); ++i) {
            grads.emplace_back(net.online.n_actions(), 0.0);
            grads.back()[static_cast<std::size_t>(tr[i].action)] = g[i];
        }
        apply_update(net, backward(net, states, grads), optimizer, state);
        if (++updates % sync_every == 0) sync_target(net);
    }
};

/// Teacher online q-values on the batch states, hashed the way the trainer reports them.
inline std::uint64_t snapshot_hash(const DenseNet& teacher_online, const Batch& batch) {
    std::vector<ActionValues> q;
    for (const auto& t : batch.transitions) q.push_back(teacher_online.forward(t.state));
    return values_hash(q);
}

/// Small, fast gridworld experiment.
inline ExperimentConfig small_config(std::uint64_t seed = 3) {
    ExperimentConfig cfg;
    cfg.env.horizon = 30;
    cfg.replay = {2000, 8, 40};
    cfg.trainer.seed = seed;
    cfg.trainer.anneal_steps = 500;
    cfg.trainer.updates_per_epoch = 50;
    cfg.trainer.total_epochs = 2;
    cfg.trainer.target_sync_every = 20;
    cfg.trainer.eval_episodes = 3;
    cfg.trainer.act_every = 2;
    cfg.teacher.hidden = {12};
    ModelSpec s;
    s.name = "student";
    s.hidden = {6};
    s.distill.tau = 0.5;
    cfg.students.push_back(s);
    return cfg;
}

}  // namespace rtpd::testing
