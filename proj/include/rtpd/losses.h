// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtpd/qnet.h"

namespace rtpd {

/// Probabilities over actions together with the temperature that produced them.
struct ActionDistribution {
    std::vector<double> p;
    double tau = 1.0;
};

enum class Divergence { forward_kl, reverse_kl, none };

std::string to_string(Divergence d);
Divergence divergence_from_string(const std::string& s);

struct DistillConfig {
    Divergence divergence = Divergence::forward_kl;
    double tau = 0.01;
    double kl_weight = 1.0;
    bool self_learning = true;
    bool imitation = true;

    /// Throws InvalidInput: tau must be positive, kl_weight nonnegative, and a
    /// student without a divergence term needs self-learning.
    void validate() const;
};

nlohmann::json distill_to_json(const DistillConfig& cfg);
/// Missing keys fall back to `defaults`.
DistillConfig distill_from_json(const nlohmann::json& j, const DistillConfig& defaults = {});

/// Floor applied to probabilities inside logarithms.
inline constexpr double kProbFloor = 1e-12;

/// Max-shifted softmax of q / tau.
ActionDistribution softmax_tau(std::span<const double> q, double tau);

/// KL(p_T || p_S) over temperature softmaxes of the two logit vectors.
double forward_kl(std::span<const double> q_teacher, std::span<const double> q_student, double tau);

struct ReverseKl {
    double total = 0.0;    // KL(p_S || p_T) = rce - entropy
    double rce = 0.0;      // -sum p_S ln p_T
    double entropy = 0.0;  // -sum p_S ln p_S
};

ReverseKl reverse_kl(std::span<const double> q_teacher, std::span<const double> q_student, double tau);

enum class KlKind { forward, reverse };

/// d loss / d q_student with the teacher held constant.
///   forward: (p_S - p_T) / tau
///   reverse: p_S * (ln p_S - ln p_T - KL(p_S || p_T)) / tau
std::vector<double> kl_gradient(KlKind kind, std::span<const double> q_teacher,
                                std::span<const double> q_student, double tau);

/// The closed form (1/tau) * (1/N - (-p_i ln p_i)) that is sometimes quoted for
/// the reverse-KL logit gradient under a uniform teacher. It does not match the
/// derivative of reverse_kl; it exists only for side-by-side comparison and is
/// never used for training.
std::vector<double> closed_form_rkl_gradient(std::span<const double> q_student, double tau);

/// mean_b (target_b - prediction_b)^2; targets are constants.
double dqn_loss(std::span<const double> targets, std::span<const double> predictions);
/// d dqn_loss / d prediction_b = -2 (target_b - prediction_b) / B
std::vector<double> dqn_loss_gradient(std::span<const double> targets, std::span<const double> predictions);

/// kl_weight * kl_term + (self_learning ? dqn_term : 0)
double student_loss(double kl_term, double dqn_term, const DistillConfig& cfg);

}  // namespace rtpd
