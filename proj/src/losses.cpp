// SPDX-License-Identifier: Apache-2.0
#include "rtpd/losses.h"

#include <algorithm>
#include <cmath>

#include "rtpd/error.h"

namespace rtpd {

std::string to_string(Divergence d) {
    switch (d) {
        case Divergence::forward_kl: return "forward_kl";
        case Divergence::reverse_kl: return "reverse_kl";
        case Divergence::none: return "none";
    }
    return "none";
}

Divergence divergence_from_string(const std::string& s) {
    if (s == "forward_kl" || s == "fkl") return Divergence::forward_kl;
    if (s == "reverse_kl" || s == "rkl") return Divergence::reverse_kl;
    if (s == "none") return Divergence::none;
    throw InvalidInput("unknown divergence '" + s + "' (expected forward_kl, reverse_kl or none)");
}

void DistillConfig::validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidInput("distill.tau must be positive");
    if (!(kl_weight >= 0.0) || !std::isfinite(kl_weight))
        throw InvalidInput("distill.kl_weight must be nonnegative");
    if (divergence == Divergence::none && !self_learning)
        throw InvalidInput("a student with divergence 'none' must enable self_learning");
}

nlohmann::json distill_to_json(const DistillConfig& cfg) {
    return {{"divergence", to_string(cfg.divergence)},
            {"tau", cfg.tau},
            {"kl_weight", cfg.kl_weight},
            {"self_learning", cfg.self_learning},
            {"imitation", cfg.imitation}};
}

DistillConfig distill_from_json(const nlohmann::json& j, const DistillConfig& defaults) {
    DistillConfig c = defaults;
    if (j.contains("divergence")) c.divergence = divergence_from_string(j.at("divergence").get<std::string>());
    c.tau = j.value("tau", c.tau);
    c.kl_weight = j.value("kl_weight", c.kl_weight);
    c.self_learning = j.value("self_learning", c.self_learning);
    c.imitation = j.value("imitation", c.imitation);
    c.validate();
    return c;
}

namespace {

void check_logits(std::span<const double> q) {
    if (q.size() < 2) throw InvalidInput("need at least two action values");
    for (double v : q)
        if (!std::isfinite(v)) throw InvalidInput("action values must be finite");
}

void check_pair(std::span<const double> a, std::span<const double> b, double tau) {
    if (a.size() != b.size()) throw InvalidInput("teacher and student action counts differ");
    if (!(tau > 0.0)) throw InvalidInput("tau must be positive");
    check_logits(a);
    check_logits(b);
}

double safe_log(double p) { return std::log(std::max(p, kProbFloor)); }

}  // namespace

ActionDistribution softmax_tau(std::span<const double> q, double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidInput("tau must be positive");
    check_logits(q);
    double m = q[0] / tau;
    for (double v : q) m = std::max(m, v / tau);
    ActionDistribution d;
    d.tau = tau;
    d.p.resize(q.size());
    double z = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        d.p[i] = std::exp(q[i] / tau - m);
        z += d.p[i];
    }
    for (double& v : d.p) v /= z;
    return d;
}

double forward_kl(std::span<const double> q_teacher, std::span<const double> q_student, double tau) {
    check_pair(q_teacher, q_student, tau);
    const auto pt = softmax_tau(q_teacher, tau).p;
    const auto ps = softmax_tau(q_student, tau).p;
    double kl = 0.0;
    for (std::size_t i = 0; i < pt.size(); ++i) kl += pt[i] * (safe_log(pt[i]) - safe_log(ps[i]));
    return std::max(kl, 0.0);
}

ReverseKl reverse_kl(std::span<const double> q_teacher, std::span<const double> q_student, double tau) {
    check_pair(q_teacher, q_student, tau);
    const auto pt = softmax_tau(q_teacher, tau).p;
    const auto ps = softmax_tau(q_student, tau).p;
    ReverseKl r;
    double kl = 0.0;
    for (std::size_t i = 0; i < pt.size(); ++i) {
        r.rce -= ps[i] * safe_log(pt[i]);
        r.entropy -= ps[i] * safe_log(ps[i]);
        kl += ps[i] * (safe_log(ps[i]) - safe_log(pt[i]));
    }
    // Equals rce - entropy up to roundoff; clamped at zero.
    r.total = std::max(kl, 0.0);
    return r;
}

std::vector<double> kl_gradient(KlKind kind, std::span<const double> q_teacher,
                                std::span<const double> q_student, double tau) {
    check_pair(q_teacher, q_student, tau);
    const auto pt = softmax_tau(q_teacher, tau).p;
    const auto ps = softmax_tau(q_student, tau).p;
    std::vector<double> g(ps.size());
    if (kind == KlKind::forward) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = (ps[i] - pt[i]) / tau;
        return g;
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) kl += ps[i] * (safe_log(ps[i]) - safe_log(pt[i]));
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = ps[i] * (safe_log(ps[i]) - safe_log(pt[i]) - kl) / tau;
    return g;
}

std::vector<double> closed_form_rkl_gradient(std::span<const double> q_student, double tau) {
    const auto ps = softmax_tau(q_student, tau).p;
    const double n = static_cast<double>(ps.size());
    std::vector<double> g(ps.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = (1.0 / n - (-ps[i] * safe_log(ps[i]))) / tau;
    return g;
}

double dqn_loss(std::span<const double> targets, std::span<const double> predictions) {
    if (targets.size() != predictions.size()) throw InvalidInput("targets and predictions differ in length");
    if (targets.empty()) throw InvalidInput("dqn_loss needs at least one sample");
    double s = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double e = targets[i] - predictions[i];
        s += e * e;
    }
    return s / static_cast<double>(targets.size());
}

std::vector<double> dqn_loss_gradient(std::span<const double> targets, std::span<const double> predictions) {
    if (targets.size() != predictions.size()) throw InvalidInput("targets and predictions differ in length");
    if (targets.empty()) throw InvalidInput("dqn_loss needs at least one sample");
    const double n = static_cast<double>(targets.size());
    std::vector<double> g(targets.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = -2.0 * (targets[i] - predictions[i]) / n;
    return g;
}

double student_loss(double kl_term, double dqn_term, const DistillConfig& cfg) {
    if (!std::isfinite(kl_term) || !std::isfinite(dqn_term)) throw InvalidInput("loss terms must be finite");
    const double kl = cfg.divergence == Divergence::none ? 0.0 : cfg.kl_weight * kl_term;
    return kl + (cfg.self_learning ? dqn_term : 0.0);
}

}  // namespace rtpd
