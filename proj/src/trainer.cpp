// SPDX-License-Identifier: Apache-2.0
#include "rtpd/trainer.h"

#include <algorithm>
#include <cmath>

#include "rtpd/config.h"
#include "rtpd/error.h"
#include "rtpd/hash.h"
#include "rtpd/io.h"
#include "rtpd/targets.h"

namespace rtpd {

void TrainerConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInput("trainer.gamma must lie in [0, 1]");
    if (!(epsilon_end >= 0.0 && epsilon_end <= epsilon_start && epsilon_start <= 1.0))
        throw InvalidInput("trainer epsilons must satisfy 0 <= epsilon_end <= epsilon_start <= 1");
    if (anneal_steps < 1) throw InvalidInput("trainer.anneal_steps must be positive");
    if (updates_per_epoch < 1) throw InvalidInput("trainer.updates_per_epoch must be positive");
    if (total_epochs < 1) throw InvalidInput("trainer.total_epochs must be positive");
    if (target_sync_every < 1) throw InvalidInput("trainer.target_sync_every must be positive");
    if (eval_episodes < 1) throw InvalidInput("trainer.eval_episodes must be positive");
    if (!(eval_epsilon >= 0.0 && eval_epsilon <= 1.0)) throw InvalidInput("trainer.eval_epsilon must lie in [0, 1]");
    if (act_every < 1) throw InvalidInput("trainer.act_every must be positive");
}

void ReplayConfig::validate() const {
    if (capacity < 1) throw InvalidInput("replay.capacity must be positive");
    if (batch_size < 1) throw InvalidInput("replay.batch_size must be positive");
    if (min_fill < 1 || min_fill > capacity) throw InvalidInput("replay.min_fill must lie in [1, capacity]");
}

ArchSpec ExperimentConfig::arch_for(const ModelSpec& m) const {
    return dense_arch(env.observation_dim(), m.hidden, env.action_count());
}

void ExperimentConfig::validate() const {
    env.validate();
    replay.validate();
    trainer.validate();
    arch_for(teacher).validate();
    for (const auto& s : students) {
        if (s.name.empty() || s.name == teacher.name) throw InvalidInput("student names must be unique and non-empty");
        arch_for(s).validate();
        s.distill.validate();
    }
    for (std::size_t i = 0; i < students.size(); ++i)
        for (std::size_t j = i + 1; j < students.size(); ++j)
            if (students[i].name == students[j].name) throw InvalidInput("duplicate student name '" + students[i].name + "'");
}

double epsilon_at(std::int64_t step, const TrainerConfig& cfg) {
    if (step >= cfg.anneal_steps) return cfg.epsilon_end;
    const double frac = static_cast<double>(std::max<std::int64_t>(step, 0)) / static_cast<double>(cfg.anneal_steps);
    return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

enum Stream : std::uint64_t {
    kTeacherInit = 1,
    kEnvRng = 2,
    kActRng = 3,
    kSampleRng = 4,
    kEpisodeReset = 5,
    kStudentInit = 100,
    kEval = 1000,
};

}  // namespace

ExperimentState::ExperimentState(const ExperimentConfig& config)
    : cfg(config),
      buffer(config.replay.capacity),
      env_rng(derive_seed(config.trainer.seed, kEnvRng)),
      act_rng(derive_seed(config.trainer.seed, kActRng)),
      sample_rng(derive_seed(config.trainer.seed, kSampleRng)) {
    cfg.validate();
    const auto seed = cfg.trainer.seed;
    teacher.name = cfg.teacher.name;
    teacher.net = make_qnetwork(cfg.arch_for(cfg.teacher), derive_seed(seed, kTeacherInit));
    teacher.optimizer = cfg.teacher.optimizer;
    for (std::size_t i = 0; i < cfg.students.size(); ++i) {
        const auto& s = cfg.students[i];
        Agent a;
        a.name = s.name;
        a.net = make_qnetwork(cfg.arch_for(s), derive_seed(seed, kStudentInit + i));
        a.optimizer = s.optimizer;
        a.distill = s.distill;
        students.push_back(std::move(a));
    }
    env_state = reset(cfg.env, derive_seed(seed, kEpisodeReset));
}

std::uint64_t values_hash(std::span<const ActionValues> values) {
    Fnv1a h;
    for (const auto& v : values) h.add(std::span<const double>(v));
    return h.value();
}

int epsilon_greedy(const DenseNet& net, std::span<const double> observation, double epsilon, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < epsilon) {
        std::uniform_int_distribution<int> any(0, static_cast<int>(net.n_actions()) - 1);
        return any(rng);
    }
    return argmax_lowest(net.forward(observation));
}

namespace {

void act(ExperimentState& st) {
    const auto& env = st.cfg.env;
    for (int k = 0; k < st.cfg.trainer.act_every; ++k) {
        const double eps = epsilon_at(st.env_steps, st.cfg.trainer);
        const int a = epsilon_greedy(st.teacher.net.online, st.env_state.observation, eps, st.act_rng);
        StepResult r = step(st.env_state, a, env, st.env_rng);
        st.buffer.push(Transition{st.env_state.observation, a, r.reward, r.next.observation, r.terminal});
        ++st.env_steps;
        if (r.terminal) {
            ++st.episodes;
            st.env_state = reset(env, derive_seed(st.cfg.trainer.seed, kEpisodeReset) + static_cast<std::uint64_t>(st.episodes));
        } else {
            st.env_state = std::move(r.next);
        }
    }
}

std::vector<ActionValues> forward_all(const DenseNet& net, std::span<const Transition> batch, bool next) {
    std::vector<ActionValues> out;
    out.reserve(batch.size());
    for (const auto& t : batch) out.push_back(net.forward(next ? t.next_state : t.state));
    return out;
}

std::vector<double> taken(std::span<const ActionValues> q, std::span<const Transition> batch) {
    std::vector<double> out(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) out[i] = q[i][static_cast<std::size_t>(batch[i].action)];
    return out;
}

std::vector<std::vector<double>> states_of(std::span<const Transition> batch) {
    std::vector<std::vector<double>> s;
    s.reserve(batch.size());
    for (const auto& t : batch) s.push_back(t.state);
    return s;
}

}  // namespace

IterationTrace train_iteration(ExperimentState& st, bool keep_batch) {
    IterationTrace trace;
    act(st);

    auto sampled = st.buffer.sample_shared(st.cfg.replay.batch_size, st.sample_rng, st.cfg.replay.min_fill);
    if (!sampled) return trace;
    const Batch& batch = *sampled;
    const std::span<const Transition> tr(batch.transitions);
    const auto& tc = st.cfg.trainer;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const auto states = states_of(tr);

    // Teacher snapshot, taken before any weight moves in this iteration.
    const auto teacher_q = forward_all(st.teacher.net.online, tr, false);
    const auto teacher_next_q = forward_all(st.teacher.net.target, tr, true);
    trace.teacher_snapshot_hash = values_hash(teacher_q);

    // Teacher: plain Bellman loss against its own target network.
    GradientSet teacher_grads;
    {
        trace.teacher_batch_hash = batch.content_hash();
        const auto y = max_target_from_values(tr, teacher_next_q, tc.gamma, TargetSource::teacher, tc.clip_rewards);
        const auto pred = taken(teacher_q, tr);
        trace.teacher_loss = dqn_loss(y.y, pred);
        const auto g = dqn_loss_gradient(y.y, pred);
        std::vector<std::vector<double>> out_grads(batch.size(), std::vector<double>(st.teacher.net.online.n_actions(), 0.0));
        for (std::size_t i = 0; i < batch.size(); ++i) out_grads[i][static_cast<std::size_t>(tr[i].action)] = g[i];
        teacher_grads = backward(st.teacher.net, states, out_grads);
    }

    // Students: divergence to the snapshot plus (optionally) their own Bellman loss.
    std::vector<GradientSet> student_grads;
    student_grads.reserve(st.students.size());
    for (auto& s : st.students) {
        const auto& dc = s.distill;
        trace.student_batch_hashes.push_back(batch.content_hash());
        trace.student_supervision_hashes.push_back(values_hash(teacher_q));
        const auto q = forward_all(s.net.online, tr, false);
        const std::size_t n = s.net.online.n_actions();
        std::vector<std::vector<double>> out_grads(batch.size(), std::vector<double>(n, 0.0));

        double kl_mean = 0.0;
        if (dc.divergence != Divergence::none) {
            const KlKind kind = dc.divergence == Divergence::forward_kl ? KlKind::forward : KlKind::reverse;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                kl_mean += (kind == KlKind::forward ? forward_kl(teacher_q[i], q[i], dc.tau)
                                                    : reverse_kl(teacher_q[i], q[i], dc.tau).total) * inv_b;
                const auto g = kl_gradient(kind, teacher_q[i], q[i], dc.tau);
                for (std::size_t a = 0; a < n; ++a) out_grads[i][a] = dc.kl_weight * g[a] * inv_b;
            }
        }

        double dqn_term = 0.0;
        if (dc.self_learning) {
            const auto y = dc.imitation
                               ? student_target_imitation(tr, s.net, teacher_next_q, tc.gamma, tc.clip_rewards)
                               : student_target_no_imitation(tr, s.net, tc.gamma, tc.clip_rewards);
            const auto pred = taken(q, tr);
            dqn_term = dqn_loss(y.y, pred);
            const auto g = dqn_loss_gradient(y.y, pred);
            for (std::size_t i = 0; i < batch.size(); ++i) out_grads[i][static_cast<std::size_t>(tr[i].action)] += g[i];
        }
        trace.student_losses.push_back(student_loss(kl_mean, dqn_term, dc));
        student_grads.push_back(backward(s.net, states, out_grads));
    }

    apply_update(st.teacher.net, teacher_grads, st.teacher.optimizer, st.teacher.opt_state);
    for (std::size_t i = 0; i < st.students.size(); ++i)
        apply_update(st.students[i].net, student_grads[i], st.students[i].optimizer, st.students[i].opt_state);

    ++st.updates;
    trace.updated = true;
    trace.update_index = st.updates;
    if (st.updates % tc.target_sync_every == 0) {
        sync_target(st.teacher.net);
        for (auto& s : st.students) sync_target(s.net);
        trace.synced = true;
    }
    if (keep_batch) trace.batch = std::move(sampled);
    return trace;
}

EvalResult evaluate(const DenseNet& net, const EnvSpec& spec, int episodes, std::uint64_t seed, double epsilon) {
    if (episodes < 1) throw InvalidInput("evaluate needs at least one episode");
    EvalResult r;
    r.returns.reserve(static_cast<std::size_t>(episodes));
    for (int e = 0; e < episodes; ++e) {
        const auto ep_seed = derive_seed(seed, static_cast<std::uint64_t>(e));
        std::mt19937_64 env_rng(ep_seed);
        std::mt19937_64 act_rng(derive_seed(ep_seed, 1));
        EnvState s = reset(spec, ep_seed);
        double ret = 0.0;
        for (;;) {
            const int a = epsilon_greedy(net, s.observation, epsilon, act_rng);
            StepResult out = step(s, a, spec, env_rng);
            ret += out.reward;
            if (out.terminal) break;
            s = std::move(out.next);
        }
        r.returns.push_back(ret);
    }
    double sum = 0.0;
    for (double v : r.returns) sum += v;
    r.mean_return = sum / static_cast<double>(episodes);
    r.max_return = *std::max_element(r.returns.begin(), r.returns.end());
    return r;
}

EvalResult evaluate(const QNetworkPair& pair, const EnvSpec& spec, int episodes, std::uint64_t seed, double epsilon) {
    return evaluate(pair.online, spec, episodes, seed, epsilon);
}

const EpochReport& evaluate_epoch(ExperimentState& st, int epoch) {
    const auto& tc = st.cfg.trainer;
    const auto seed = derive_seed(tc.seed, kEval + static_cast<std::uint64_t>(epoch));
    EpochReport rep;
    rep.epoch = epoch;
    auto add = [&](const Agent& a) {
        const auto r = evaluate(a.net, st.cfg.env, tc.eval_episodes, seed, tc.eval_epsilon);
        rep.scores.push_back(ModelScore{a.name, r.mean_return, r.max_return, 0.0, 0.0});
    };
    add(st.teacher);
    for (const auto& s : st.students) add(s);
    st.reports.push_back(std::move(rep));
    fill_percentages(st.reports, return_shift(st.reports), st.teacher.name);
    return st.reports.back();
}

std::optional<nlohmann::json> directional_check(const ExperimentConfig& cfg, std::span<const EpochReport> reports) {
    if (reports.empty() || cfg.env.name == EnvKind::gridworld) return std::nullopt;
    const ModelSpec* fkl = nullptr;
    const ModelSpec* rkl = nullptr;
    for (const auto& s : cfg.students) {
        if (!fkl && s.distill.divergence == Divergence::forward_kl) fkl = &s;
        if (!rkl && s.distill.divergence == Divergence::reverse_kl) rkl = &s;
    }
    if (!fkl || !rkl) return std::nullopt;
    const double f = mean_last_k_pct(reports, fkl->name, 10).value;
    const double r = mean_last_k_pct(reports, rkl->name, 10).value;
    const bool hazard = cfg.env.name == EnvKind::hazard_chain;
    const bool passed = hazard ? r >= f - 5.0 : std::abs(r - f) <= 10.0;
    return nlohmann::json{{"env", to_string(cfg.env.name)},
                          {"forward_kl_model", fkl->name},
                          {"reverse_kl_model", rkl->name},
                          {"forward_kl_mean_last10_pct", f},
                          {"reverse_kl_mean_last10_pct", r},
                          {"rule", hazard ? "reverse >= forward - 5" : "|reverse - forward| <= 10"},
                          {"passed", passed}};
}

std::vector<EpochReport> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    ExperimentState st(cfg);
    const auto& tc = st.cfg.trainer;
    const auto& out = opts.output_dir;
    if (out) write_file_atomic(*out / "config-resolved.json", experiment_config_to_json(st.cfg).dump(2) + "\n");

    for (int epoch = 1; epoch <= tc.total_epochs; ++epoch) {
        const std::int64_t goal = static_cast<std::int64_t>(epoch) * tc.updates_per_epoch;
        while (st.updates < goal) train_iteration(st);
        const auto& rep = evaluate_epoch(st, epoch);
        if (out) {
            write_file_atomic(*out / "epochs.csv", epochs_csv(st.reports));
            if (tc.checkpoints) {
                char tag[32];
                std::snprintf(tag, sizeof tag, "epoch_%03d_", epoch);
                write_file_atomic(*out / "checkpoints" / (tag + st.teacher.name + ".json"),
                                  checkpoint_to_json(st.teacher.net).dump());
                for (const auto& s : st.students)
                    write_file_atomic(*out / "checkpoints" / (tag + s.name + ".json"), checkpoint_to_json(s.net).dump());
            }
        }
        if (opts.on_epoch) opts.on_epoch(st, rep);
    }
    if (out) {
        const double shift = return_shift(st.reports);
        auto metrics = metrics_json(st.reports, shift, 10, st.teacher.name);
        if (auto dc = directional_check(st.cfg, st.reports)) metrics["directional_check"] = *dc;
        write_file_atomic(*out / "metrics.json", metrics.dump(2) + "\n");
    }
    return st.reports;
}

}  // namespace rtpd
