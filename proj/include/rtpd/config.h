// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rtpd/trainer.h"

namespace rtpd {

/// Experiment config schema (every key except "env" and "env.name" is optional):
///
///   {"seed": 0, "output_dir": "runs/x",
///    "env":     {"name": "gridworld", ...EnvSpec fields},
///    "replay":  {"capacity": 50000, "batch_size": 32, "min_fill": 1000},
///    "distill": {...defaults for every student},
///    "trainer": {"gamma": 0.99, "epsilon_start": 1.0, ..., "optimizer": {...}},
///    "arch":    {"teacher":  {"dense": [32, 32], "optimizer": {...}},
///                "students": [{"name": "half", "dense": [16, 16], "distill": {...}, "optimizer": {...}}]}}
///
/// "trainer.optimizer" is the default for every model. Arch entries may carry
/// "input"/"actions"; they must agree with the environment. Throws ConfigError
/// naming the offending key.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

/// Every field materialized; feeding this back reproduces the same run.
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);

/// Parse errors carry the line and column of the problem.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

nlohmann::json optimizer_to_json(const OptimizerConfig& o);
OptimizerConfig optimizer_from_json(const nlohmann::json& j, const OptimizerConfig& defaults = {});

}  // namespace rtpd
