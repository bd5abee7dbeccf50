// SPDX-License-Identifier: Apache-2.0
#include "rtpd/envs.h"

#include <algorithm>
#include <cmath>

#include "rtpd/error.h"

namespace rtpd {

std::string to_string(EnvKind k) {
    switch (k) {
        case EnvKind::gridworld: return "gridworld";
        case EnvKind::hazard_chain: return "hazard_chain";
        case EnvKind::drift_field: return "drift_field";
    }
    return "gridworld";
}

EnvKind env_kind_from_string(const std::string& s) {
    if (s == "gridworld") return EnvKind::gridworld;
    if (s == "hazard_chain") return EnvKind::hazard_chain;
    if (s == "drift_field") return EnvKind::drift_field;
    throw InvalidInput("unknown environment '" + s + "' (expected gridworld, hazard_chain or drift_field)");
}

void EnvSpec::validate() const {
    if (horizon < 1) throw InvalidInput("env.horizon must be >= 1");
    if (!(slip_prob >= 0.0 && slip_prob <= 0.5)) throw InvalidInput("env.slip_prob must lie in [0, 0.5]");
    switch (name) {
        case EnvKind::gridworld:
            if (width < 1 || height < 1 || width * height < 2)
                throw InvalidInput("gridworld needs at least two cells");
            for (auto [x, y] : traps) {
                if (x < 0 || y < 0 || x >= width || y >= height)
                    throw InvalidInput("gridworld trap outside the grid");
                if ((x == 0 && y == 0) || (x == width - 1 && y == height - 1))
                    throw InvalidInput("gridworld trap on the start or goal cell");
            }
            break;
        case EnvKind::hazard_chain:
            if (length < 1) throw InvalidInput("hazard_chain.length must be >= 1");
            if (n_actions < 2) throw InvalidInput("hazard_chain needs at least two actions");
            break;
        case EnvKind::drift_field:
            if (length < 2) throw InvalidInput("drift_field.length must be >= 2");
            if (n_actions < 2) throw InvalidInput("drift_field needs at least two actions");
            if (!(std::abs(action_bonus) <= 0.01))
                throw InvalidInput("drift_field.action_bonus must be at most 0.01 in magnitude");
            break;
    }
}

int EnvSpec::action_count() const { return name == EnvKind::gridworld ? 4 : n_actions; }

int EnvSpec::state_count() const { return name == EnvKind::gridworld ? width * height : length; }

std::size_t EnvSpec::observation_dim() const {
    // normalized coordinates + one-hot state id
    const std::size_t coords = name == EnvKind::gridworld ? 2 : 1;
    return coords + static_cast<std::size_t>(state_count());
}

nlohmann::json env_to_json(const EnvSpec& s) {
    nlohmann::json j = {{"name", to_string(s.name)},
                        {"horizon", s.horizon},
                        {"slip_prob", s.slip_prob},
                        {"step_reward", s.step_reward},
                        {"goal_reward", s.goal_reward},
                        {"random_start", s.random_start}};
    switch (s.name) {
        case EnvKind::gridworld: {
            j["width"] = s.width;
            j["height"] = s.height;
            j["trap_reward"] = s.trap_reward;
            auto traps = nlohmann::json::array();
            for (auto [x, y] : s.traps) traps.push_back({x, y});
            j["traps"] = traps;
            break;
        }
        case EnvKind::hazard_chain:
            j["length"] = s.length;
            j["n_actions"] = s.n_actions;
            j["hazard_reward"] = s.hazard_reward;
            break;
        case EnvKind::drift_field:
            j["length"] = s.length;
            j["n_actions"] = s.n_actions;
            j["action_bonus"] = s.action_bonus;
            break;
    }
    return j;
}

EnvSpec env_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidInput("env must be a JSON object");
    EnvSpec s;
    if (!j.contains("name")) throw InvalidInput("env.name is required");
    s.name = env_kind_from_string(j.at("name").get<std::string>());
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.length = j.value("length", s.length);
    s.n_actions = j.value("n_actions", s.n_actions);
    s.horizon = j.value("horizon", s.horizon);
    s.slip_prob = j.value("slip_prob", s.slip_prob);
    s.step_reward = j.value("step_reward", s.step_reward);
    s.goal_reward = j.value("goal_reward", s.goal_reward);
    s.trap_reward = j.value("trap_reward", s.trap_reward);
    s.hazard_reward = j.value("hazard_reward", s.hazard_reward);
    s.action_bonus = j.value("action_bonus", s.action_bonus);
    s.random_start = j.value("random_start", s.random_start);
    if (j.contains("traps"))
        for (const auto& t : j.at("traps")) s.traps.emplace_back(t.at(0).get<int>(), t.at(1).get<int>());
    s.validate();
    return s;
}

std::vector<double> observe(const EnvSpec& spec, int internal) {
    std::vector<double> obs(spec.observation_dim(), 0.0);
    if (spec.name == EnvKind::gridworld) {
        const int x = internal % spec.width;
        const int y = internal / spec.width;
        obs[0] = spec.width > 1 ? static_cast<double>(x) / (spec.width - 1) : 0.0;
        obs[1] = spec.height > 1 ? static_cast<double>(y) / (spec.height - 1) : 0.0;
        obs[2 + static_cast<std::size_t>(internal)] = 1.0;
    } else {
        obs[0] = spec.length > 1 ? static_cast<double>(internal) / (spec.length - 1) : 0.0;
        obs[1 + static_cast<std::size_t>(internal)] = 1.0;
    }
    return obs;
}

namespace {

int safe_action(int node, int n_actions) { return (3 * node + 1) % n_actions; }

int favoured_action(int cell, int n_actions) { return (cell * 5 + 2) % n_actions; }

double drift_base(int cell) { return 0.05 * (1.0 + std::sin(static_cast<double>(cell))); }

bool is_trap(const EnvSpec& spec, int x, int y) {
    return std::any_of(spec.traps.begin(), spec.traps.end(),
                       [&](const auto& t) { return t.first == x && t.second == y; });
}

}  // namespace

Outcome deterministic_outcome(const EnvSpec& spec, int state, int action) {
    Outcome o;
    switch (spec.name) {
        case EnvKind::gridworld: {
            int x = state % spec.width;
            int y = state / spec.width;
            switch (action) {
                case 0: y = std::max(y - 1, 0); break;
                case 1: y = std::min(y + 1, spec.height - 1); break;
                case 2: x = std::max(x - 1, 0); break;
                default: x = std::min(x + 1, spec.width - 1); break;
            }
            o.next = y * spec.width + x;
            if (x == spec.width - 1 && y == spec.height - 1) {
                o.reward = spec.goal_reward;
                o.terminal = true;
            } else if (is_trap(spec, x, y)) {
                o.reward = spec.trap_reward;
                o.terminal = true;
            } else {
                o.reward = spec.step_reward;
            }
            break;
        }
        case EnvKind::hazard_chain:
            if (action != safe_action(state, spec.n_actions)) {
                o.next = state;
                o.reward = spec.hazard_reward;
                o.terminal = true;
            } else if (state == spec.length - 1) {
                o.next = state;
                o.reward = spec.goal_reward;
                o.terminal = true;
            } else {
                o.next = state + 1;
                o.reward = spec.step_reward;
            }
            break;
        case EnvKind::drift_field:
            o.next = std::min(state + 1, spec.length - 1);
            o.reward = drift_base(state) + spec.step_reward +
                       (action == favoured_action(state, spec.n_actions) ? spec.action_bonus : 0.0);
            if (o.next == spec.length - 1) {
                o.reward += spec.goal_reward;
                o.terminal = true;
            }
            break;
    }
    return o;
}

TabularMdp tabular_model(const EnvSpec& spec) {
    spec.validate();
    TabularMdp m;
    m.n_states = spec.state_count();
    m.n_actions = spec.action_count();
    m.start = 0;
    m.outcomes.assign(static_cast<std::size_t>(m.n_states), {});
    for (int s = 0; s < m.n_states; ++s) {
        auto& row = m.outcomes[static_cast<std::size_t>(s)];
        row.resize(static_cast<std::size_t>(m.n_actions));
        for (int a = 0; a < m.n_actions; ++a) {
            auto& list = row[static_cast<std::size_t>(a)];
            Outcome intended = deterministic_outcome(spec, s, a);
            intended.prob = 1.0 - spec.slip_prob;
            if (intended.prob > 0.0) list.push_back(intended);
            if (spec.slip_prob > 0.0) {
                for (int b = 0; b < m.n_actions; ++b) {
                    Outcome slipped = deterministic_outcome(spec, s, b);
                    slipped.prob = spec.slip_prob / m.n_actions;
                    list.push_back(slipped);
                }
            }
        }
    }
    return m;
}

EnvState reset(const EnvSpec& spec, std::uint64_t seed) {
    spec.validate();
    EnvState st;
    if (spec.random_start) {
        std::mt19937_64 rng(seed);
        const auto candidates = decision_states(spec);
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        st.internal = candidates[pick(rng)];
    }
    st.observation = observe(spec, st.internal);
    return st;
}

StepResult step(const EnvState& state, int action, const EnvSpec& spec, std::mt19937_64& rng) {
    if (action < 0 || action >= spec.action_count())
        throw InvalidInput("action " + std::to_string(action) + " out of range");
    if (state.steps_elapsed >= spec.horizon) throw InvalidInput("episode already reached its horizon");
    int executed = action;
    if (spec.slip_prob > 0.0) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        if (u(rng) < spec.slip_prob) {
            std::uniform_int_distribution<int> any(0, spec.action_count() - 1);
            executed = any(rng);
        }
    }
    const Outcome o = deterministic_outcome(spec, state.internal, executed);
    StepResult r;
    r.next.internal = o.next;
    r.next.steps_elapsed = state.steps_elapsed + 1;
    r.next.observation = observe(spec, o.next);
    r.reward = o.reward;
    r.terminal = o.terminal || r.next.steps_elapsed >= spec.horizon;
    return r;
}

std::vector<int> decision_states(const EnvSpec& spec) {
    std::vector<int> out;
    switch (spec.name) {
        case EnvKind::gridworld:
            for (int s = 0; s < spec.width * spec.height; ++s) {
                const int x = s % spec.width, y = s / spec.width;
                if ((x == spec.width - 1 && y == spec.height - 1) || is_trap(spec, x, y)) continue;
                out.push_back(s);
            }
            break;
        case EnvKind::hazard_chain:
            for (int s = 0; s < spec.length; ++s) out.push_back(s);
            break;
        case EnvKind::drift_field:
            for (int s = 0; s + 1 < spec.length; ++s) out.push_back(s);
            break;
    }
    return out;
}

namespace {

std::vector<int> greedy_of(const std::vector<std::vector<double>>& q) {
    std::vector<int> pi(q.size(), 0);
    for (std::size_t s = 0; s < q.size(); ++s)
        pi[s] = static_cast<int>(std::max_element(q[s].begin(), q[s].end()) - q[s].begin());
    return pi;
}

}  // namespace

ValueIterationResult value_iteration(const TabularMdp& mdp, double gamma, double tol, int horizon) {
    if (mdp.n_states < 1 || mdp.n_actions < 1 ||
        mdp.outcomes.size() != static_cast<std::size_t>(mdp.n_states))
        throw InvalidInput("value_iteration needs an enumerated, non-empty state space");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInput("gamma must lie in [0, 1]");
    if (gamma >= 1.0 && horizon < 1) throw InvalidInput("gamma = 1 requires a finite horizon");
    if (!(tol > 0.0)) throw InvalidInput("tol must be positive");

    const auto S = static_cast<std::size_t>(mdp.n_states);
    const auto A = static_cast<std::size_t>(mdp.n_actions);
    ValueIterationResult r;
    r.values.assign(S, 0.0);
    r.q.assign(S, std::vector<double>(A, 0.0));

    auto backup = [&](const std::vector<double>& v) {
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                double acc = 0.0;
                for (const auto& o : mdp.outcomes[s][a])
                    acc += o.prob * (o.reward + (o.terminal ? 0.0 : gamma * v[static_cast<std::size_t>(o.next)]));
                r.q[s][a] = acc;
            }
    };

    // Sup-norm contraction: ||V_k - V*|| <= gamma / (1 - gamma) * ||V_k - V_{k-1}||.
    const bool finite = gamma >= 1.0;
    const double stop = finite ? 0.0 : (gamma == 0.0 ? 0.0 : tol * (1.0 - gamma) / gamma);
    const int max_sweeps = finite ? horizon : 10'000'000;
    std::vector<double> next(S);
    for (int k = 0; k < max_sweeps; ++k) {
        backup(r.values);
        double delta = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            next[s] = *std::max_element(r.q[s].begin(), r.q[s].end());
            delta = std::max(delta, std::abs(next[s] - r.values[s]));
        }
        r.values.swap(next);
        r.sweeps = k + 1;
        if (!finite && delta <= stop) break;
    }
    backup(r.values);
    r.greedy_policy = greedy_of(r.q);
    r.start_value = r.values[static_cast<std::size_t>(mdp.start)];

    if (horizon > 0) {
        std::vector<double> ret(S, 0.0), ret_next(S);
        for (int h = 0; h < horizon; ++h) {
            for (std::size_t s = 0; s < S; ++s) {
                double acc = 0.0;
                for (const auto& o : mdp.outcomes[s][static_cast<std::size_t>(r.greedy_policy[s])])
                    acc += o.prob * (o.reward + (o.terminal ? 0.0 : ret[static_cast<std::size_t>(o.next)]));
                ret_next[s] = acc;
            }
            ret.swap(ret_next);
        }
        r.greedy_return = ret[static_cast<std::size_t>(mdp.start)];
    }
    return r;
}

ValueIterationResult value_iteration(const EnvSpec& spec, double gamma, double tol) {
    return value_iteration(tabular_model(spec), gamma, tol, spec.horizon);
}

}  // namespace rtpd
