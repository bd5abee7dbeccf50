// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace rtpd {

enum class EnvKind { gridworld, hazard_chain, drift_field };

std::string to_string(EnvKind k);
EnvKind env_kind_from_string(const std::string& s);

/// Small enumerable MDPs.
///
/// gridworld     width x height grid, start (0,0), goal in the far corner. Actions
///               up/down/left/right; walls leave the agent in place. Entering the
///               goal pays goal_reward and ends the episode, entering a trap pays
///               trap_reward and ends it, every other move pays step_reward.
/// hazard_chain  `length` nodes, each with exactly one safe action. The safe action
///               advances (step_reward, or goal_reward from the last node); any other
///               action pays hazard_reward and ends the episode.
/// drift_field   `length` cells on a line. Every action drifts one cell forward;
///               the action only adds a bonus of at most `action_bonus` to a per-cell
///               base reward, so no choice changes what happens next.
///
/// With probability slip_prob the chosen action is replaced by a uniformly random one.
/// Every episode is cut off after `horizon` steps.
struct EnvSpec {
    EnvKind name = EnvKind::gridworld;
    int width = 5;
    int height = 5;
    int length = 8;
    int n_actions = 4;  // gridworld always uses 4
    int horizon = 100;
    double slip_prob = 0.0;
    double step_reward = -0.01;
    double goal_reward = 1.0;
    double trap_reward = -1.0;
    double hazard_reward = -1.0;
    double action_bonus = 0.01;
    bool random_start = false;
    std::vector<std::pair<int, int>> traps;  // gridworld (x, y)

    void validate() const;  // throws InvalidInput
    int action_count() const;
    int state_count() const;
    std::size_t observation_dim() const;
};

nlohmann::json env_to_json(const EnvSpec& spec);
EnvSpec env_from_json(const nlohmann::json& j);

struct EnvState {
    std::vector<double> observation;
    int internal = 0;
    int steps_elapsed = 0;
};

struct StepResult {
    EnvState next;
    double reward = 0.0;
    bool terminal = false;
};

/// Start state. With random_start the start cell is drawn from `seed`; otherwise the
/// seed is irrelevant.
EnvState reset(const EnvSpec& spec, std::uint64_t seed);
StepResult step(const EnvState& state, int action, const EnvSpec& spec, std::mt19937_64& rng);

std::vector<double> observe(const EnvSpec& spec, int internal);

/// Outcome of one (state, action) under the slip-free dynamics.
struct Outcome {
    double prob = 1.0;
    int next = 0;
    double reward = 0.0;
    bool terminal = false;
};

/// Explicit transition model. outcomes[s][a] lists every possible result of taking
/// action a in state s.
struct TabularMdp {
    int n_states = 0;
    int n_actions = 0;
    int start = 0;
    std::vector<std::vector<std::vector<Outcome>>> outcomes;
};

Outcome deterministic_outcome(const EnvSpec& spec, int state, int action);
/// Slip-mixed model of `spec`, consistent with `step`.
TabularMdp tabular_model(const EnvSpec& spec);

struct ValueIterationResult {
    std::vector<double> values;               // V*(s)
    std::vector<std::vector<double>> q;       // Q*(s, a)
    std::vector<int> greedy_policy;           // argmax, lowest index on ties
    double start_value = 0.0;                 // V*(start)
    double greedy_return = 0.0;               // expected undiscounted return of the greedy policy within the horizon
    int sweeps = 0;
};

/// Bellman-optimality fixed point to within `tol` (sup norm). With gamma == 1 the
/// problem is solved as a finite-horizon one over `horizon` sweeps.
ValueIterationResult value_iteration(const TabularMdp& mdp, double gamma, double tol, int horizon);
ValueIterationResult value_iteration(const EnvSpec& spec, double gamma, double tol = 1e-10);

/// States from which an action is actually chosen (not unreachable absorbing cells).
std::vector<int> decision_states(const EnvSpec& spec);

}  // namespace rtpd
