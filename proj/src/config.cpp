// SPDX-License-Identifier: Apache-2.0
#include "rtpd/config.h"

#include <algorithm>
#include <initializer_list>

#include "rtpd/error.h"
#include "rtpd/io.h"

namespace rtpd {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "must be a JSON object");
}

void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            throw ConfigError(path.empty() ? key : path + "." + key, "unknown key");
    }
}

// Runs `f`, converting library and validation exceptions into ConfigError at `path`.
template <class F>
auto at_path(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const json::exception& e) {
        throw ConfigError(path, e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& path) {
    if (!j.contains(key)) return;
    const std::string p = path + "." + key;
    at_path(p, [&] {
        out = j.at(key).get<T>();
        return 0;
    });
}

ModelSpec model_from_json(const json& j, const std::string& path, const OptimizerConfig& opt_default,
                          const DistillConfig& distill_default, const EnvSpec& env, bool is_teacher) {
    require_object(j, path);
    if (is_teacher)
        reject_unknown(j, path, {"name", "dense", "conv", "input", "actions", "optimizer"});
    else
        reject_unknown(j, path, {"name", "dense", "conv", "input", "actions", "optimizer", "distill"});
    ModelSpec m;
    m.name = is_teacher ? std::string(kTeacherName) : "";
    read(j, "name", m.name, path);
    if (!is_teacher && !j.contains("name")) throw ConfigError(path + ".name", "missing required key");
    if (j.contains("conv")) throw ConfigError(path + ".conv", "trainable networks are dense-only");
    read(j, "dense", m.hidden, path);
    const auto arch = at_path(path, [&] { return arch_from_json(j); });
    if (j.contains("input") && arch.input_dim() != env.observation_dim())
        throw ConfigError(path + ".input", "does not match the environment observation size " +
                                               std::to_string(env.observation_dim()));
    if (j.contains("actions") && arch.n_actions != env.action_count())
        throw ConfigError(path + ".actions",
                          "does not match the environment action count " + std::to_string(env.action_count()));
    m.optimizer = opt_default;
    if (j.contains("optimizer"))
        m.optimizer = at_path(path + ".optimizer", [&] { return optimizer_from_json(j.at("optimizer"), opt_default); });
    m.distill = distill_default;
    if (j.contains("distill"))
        m.distill = at_path(path + ".distill", [&] { return distill_from_json(j.at("distill"), distill_default); });
    at_path(path, [&] {
        dense_arch(env.observation_dim(), m.hidden, env.action_count()).validate();
        return 0;
    });
    return m;
}

}  // namespace

json optimizer_to_json(const OptimizerConfig& o) {
    return {{"kind", o.kind == OptimizerKind::sgd ? "sgd" : "rmsprop"},
            {"lr", o.lr},
            {"decay", o.decay},
            {"epsilon", o.epsilon}};
}

OptimizerConfig optimizer_from_json(const json& j, const OptimizerConfig& defaults) {
    if (!j.is_object()) throw InvalidInput("optimizer must be a JSON object");
    OptimizerConfig o = defaults;
    if (j.contains("kind")) {
        const auto k = j.at("kind").get<std::string>();
        if (k == "sgd")
            o.kind = OptimizerKind::sgd;
        else if (k == "rmsprop")
            o.kind = OptimizerKind::rmsprop;
        else
            throw InvalidInput("unknown optimizer kind '" + k + "'");
    }
    o.lr = j.value("lr", o.lr);
    o.decay = j.value("decay", o.decay);
    o.epsilon = j.value("epsilon", o.epsilon);
    if (!(o.lr >= 0.0)) throw InvalidInput("optimizer.lr must be nonnegative");
    if (!(o.decay >= 0.0 && o.decay < 1.0)) throw InvalidInput("optimizer.decay must lie in [0, 1)");
    if (!(o.epsilon > 0.0)) throw InvalidInput("optimizer.epsilon must be positive");
    return o;
}

ExperimentConfig experiment_config_from_json(const json& j) {
    require_object(j, "");
    reject_unknown(j, "", {"seed", "output_dir", "env", "replay", "distill", "trainer", "arch"});
    ExperimentConfig cfg;

    if (!j.contains("env")) throw ConfigError("env", "missing required key");
    cfg.env = at_path("env", [&] { return env_from_json(j.at("env")); });

    if (j.contains("replay")) {
        const auto& r = j.at("replay");
        require_object(r, "replay");
        reject_unknown(r, "replay", {"capacity", "batch_size", "min_fill"});
        read(r, "capacity", cfg.replay.capacity, "replay");
        read(r, "batch_size", cfg.replay.batch_size, "replay");
        read(r, "min_fill", cfg.replay.min_fill, "replay");
        at_path("replay", [&] {
            cfg.replay.validate();
            return 0;
        });
    }

    DistillConfig distill_default;
    if (j.contains("distill")) {
        const auto& d = j.at("distill");
        require_object(d, "distill");
        reject_unknown(d, "distill", {"divergence", "tau", "kl_weight", "self_learning", "imitation"});
        distill_default = at_path("distill", [&] { return distill_from_json(d); });
    }

    auto& tc = cfg.trainer;
    OptimizerConfig opt_default;
    if (j.contains("trainer")) {
        const auto& t = j.at("trainer");
        require_object(t, "trainer");
        reject_unknown(t, "trainer",
                       {"gamma", "epsilon_start", "epsilon_end", "anneal_steps", "updates_per_epoch", "total_epochs",
                        "target_sync_every", "eval_episodes", "eval_epsilon", "act_every", "clip_rewards",
                        "checkpoints", "optimizer"});
        read(t, "gamma", tc.gamma, "trainer");
        read(t, "epsilon_start", tc.epsilon_start, "trainer");
        read(t, "epsilon_end", tc.epsilon_end, "trainer");
        read(t, "anneal_steps", tc.anneal_steps, "trainer");
        read(t, "updates_per_epoch", tc.updates_per_epoch, "trainer");
        read(t, "total_epochs", tc.total_epochs, "trainer");
        read(t, "target_sync_every", tc.target_sync_every, "trainer");
        read(t, "eval_episodes", tc.eval_episodes, "trainer");
        read(t, "eval_epsilon", tc.eval_epsilon, "trainer");
        read(t, "act_every", tc.act_every, "trainer");
        read(t, "clip_rewards", tc.clip_rewards, "trainer");
        read(t, "checkpoints", tc.checkpoints, "trainer");
        if (t.contains("optimizer"))
            opt_default = at_path("trainer.optimizer", [&] { return optimizer_from_json(t.at("optimizer")); });
    }
    read(j, "seed", tc.seed, "");
    at_path("trainer", [&] {
        tc.validate();
        return 0;
    });
    read(j, "output_dir", cfg.output_dir, "");

    cfg.teacher.optimizer = opt_default;
    if (j.contains("arch")) {
        const auto& a = j.at("arch");
        require_object(a, "arch");
        reject_unknown(a, "arch", {"teacher", "students"});
        if (a.contains("teacher"))
            cfg.teacher = model_from_json(a.at("teacher"), "arch.teacher", opt_default, distill_default, cfg.env, true);
        if (a.contains("students")) {
            const auto& list = a.at("students");
            if (!list.is_array()) throw ConfigError("arch.students", "must be an array");
            for (std::size_t i = 0; i < list.size(); ++i)
                cfg.students.push_back(model_from_json(list[i], "arch.students[" + std::to_string(i) + "]",
                                                       opt_default, distill_default, cfg.env, false));
        }
    }
    at_path("arch", [&] {
        cfg.validate();
        return 0;
    });
    return cfg;
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
    const auto& tc = cfg.trainer;
    json students = json::array();
    for (const auto& s : cfg.students) {
        const auto arch = cfg.arch_for(s);
        students.push_back({{"name", s.name},
                            {"dense", s.hidden},
                            {"input", arch.input_shape},
                            {"actions", arch.n_actions},
                            {"optimizer", optimizer_to_json(s.optimizer)},
                            {"distill", distill_to_json(s.distill)}});
    }
    const auto tarch = cfg.arch_for(cfg.teacher);
    return {
        {"seed", tc.seed},
        {"output_dir", cfg.output_dir},
        {"env", env_to_json(cfg.env)},
        {"replay", {{"capacity", cfg.replay.capacity}, {"batch_size", cfg.replay.batch_size}, {"min_fill", cfg.replay.min_fill}}},
        {"distill", distill_to_json(cfg.students.empty() ? DistillConfig{} : cfg.students.front().distill)},
        {"trainer",
         {{"gamma", tc.gamma},
          {"epsilon_start", tc.epsilon_start},
          {"epsilon_end", tc.epsilon_end},
          {"anneal_steps", tc.anneal_steps},
          {"updates_per_epoch", tc.updates_per_epoch},
          {"total_epochs", tc.total_epochs},
          {"target_sync_every", tc.target_sync_every},
          {"eval_episodes", tc.eval_episodes},
          {"eval_epsilon", tc.eval_epsilon},
          {"act_every", tc.act_every},
          {"clip_rewards", tc.clip_rewards},
          {"checkpoints", tc.checkpoints},
          {"optimizer", optimizer_to_json(cfg.teacher.optimizer)}}},
        {"arch",
         {{"teacher",
           {{"name", cfg.teacher.name},
            {"dense", cfg.teacher.hidden},
            {"input", tarch.input_shape},
            {"actions", tarch.n_actions},
            {"optimizer", optimizer_to_json(cfg.teacher.optimizer)}}},
          {"students", students}}},
    };
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", path.string() + ": " + e.what());
    }
    return experiment_config_from_json(j);
}

}  // namespace rtpd
