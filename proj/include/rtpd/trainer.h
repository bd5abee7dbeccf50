// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rtpd/envs.h"
#include "rtpd/losses.h"
#include "rtpd/metrics.h"
#include "rtpd/qnet.h"
#include "rtpd/replay.h"

namespace rtpd {

struct TrainerConfig {
    double gamma = 0.99;
    double epsilon_start = 1.0;
    double epsilon_end = 0.1;
    std::int64_t anneal_steps = 20'000;  // environment steps
    int updates_per_epoch = 2'000;
    int total_epochs = 50;
    int target_sync_every = 250;  // updates, shared by teacher and students
    int eval_episodes = 30;
    double eval_epsilon = 0.001;
    int act_every = 4;  // environment steps per update
    bool clip_rewards = false;
    bool checkpoints = false;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ReplayConfig {
    std::size_t capacity = 50'000;
    std::size_t batch_size = 32;
    std::size_t min_fill = 1'000;

    void validate() const;
};

/// One network in an experiment. `distill` is ignored for the teacher.
struct ModelSpec {
    std::string name;
    std::vector<int> hidden;
    OptimizerConfig optimizer;
    DistillConfig distill;
};

struct ExperimentConfig {
    EnvSpec env;
    ReplayConfig replay;
    TrainerConfig trainer;
    ModelSpec teacher{std::string(kTeacherName), {32, 32}, {}, {}};
    std::vector<ModelSpec> students;
    std::string output_dir = "runs/default";

    ArchSpec arch_for(const ModelSpec& m) const;
    void validate() const;
};

/// Linear ramp from epsilon_start to epsilon_end over anneal_steps, constant afterwards.
double epsilon_at(std::int64_t step, const TrainerConfig& cfg);

/// splitmix64 of (seed, stream); independent RNG streams from one experiment seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct Agent {
    std::string name;
    QNetworkPair net;
    OptimizerConfig optimizer;
    OptimizerState opt_state;
    DistillConfig distill;  // students only
};

struct ExperimentState {
    ExperimentConfig cfg;
    Agent teacher;
    std::vector<Agent> students;
    ReplayBuffer buffer;
    EnvState env_state;
    std::mt19937_64 env_rng;
    std::mt19937_64 act_rng;
    std::mt19937_64 sample_rng;
    std::int64_t env_steps = 0;
    std::int64_t episodes = 0;
    std::int64_t updates = 0;
    std::vector<EpochReport> reports;

    explicit ExperimentState(const ExperimentConfig& config);
};

/// What one iteration did, for invariant checks.
struct IterationTrace {
    bool updated = false;
    bool synced = false;
    std::int64_t update_index = 0;                       // value of the counter after the update
    std::uint64_t teacher_batch_hash = 0;                // batch the teacher's loss consumed
    std::vector<std::uint64_t> student_batch_hashes;     // batch each student's loss consumed
    std::uint64_t teacher_snapshot_hash = 0;             // teacher online q(s) taken before any update
    std::vector<std::uint64_t> student_supervision_hashes;  // teacher q(s) each student's KL term consumed
    std::vector<double> student_losses;                  // student_loss value per student
    double teacher_loss = 0.0;
    std::optional<Batch> batch;                          // kept only when requested
};

/// Hash of a list of q-vectors, as used for the snapshot fields of IterationTrace.
std::uint64_t values_hash(std::span<const ActionValues> values);

/// act_every teacher steps in the environment, then (once the buffer is ready) one
/// shared-batch update of the teacher and every student against the same pre-update
/// teacher snapshot, then target syncs on the cadence.
IterationTrace train_iteration(ExperimentState& state, bool keep_batch = false);

/// Action taken by the acting policy: random with probability epsilon, otherwise
/// the lowest-index argmax of q(observation).
int epsilon_greedy(const DenseNet& net, std::span<const double> observation, double epsilon,
                   std::mt19937_64& rng);

struct EvalResult {
    double mean_return = 0.0;
    double max_return = 0.0;
    std::vector<double> returns;
};

/// Near-greedy rollouts on fresh environments. Depends only on the weights, spec,
/// seed and epsilon.
EvalResult evaluate(const DenseNet& net, const EnvSpec& spec, int episodes, std::uint64_t seed,
                    double epsilon = 0.001);
EvalResult evaluate(const QNetworkPair& pair, const EnvSpec& spec, int episodes, std::uint64_t seed,
                    double epsilon = 0.001);

/// Evaluation of teacher and every student, appended to state.reports with
/// percentages recomputed over the whole run.
const EpochReport& evaluate_epoch(ExperimentState& state, int epoch);

/// Soft comparison of the first forward-KL and first reverse-KL student, on hazard_chain
/// (reverse >= forward - 5 points) and drift_field (|reverse - forward| <= 10 points).
/// Empty for other environments or when either student is missing.
std::optional<nlohmann::json> directional_check(const ExperimentConfig& cfg, std::span<const EpochReport> reports);

struct RunOptions {
    std::optional<std::filesystem::path> output_dir;  // no files written when empty
    std::function<void(const ExperimentState&, const EpochReport&)> on_epoch;
};

/// total_epochs x updates_per_epoch updates with an evaluation after each epoch.
/// epochs.csv is rewritten atomically after every epoch; metrics.json at the end.
std::vector<EpochReport> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

}  // namespace rtpd
