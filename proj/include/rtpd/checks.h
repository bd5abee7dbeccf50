// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rtpd/losses.h"

namespace rtpd {

/// Property suites run by `rtpd check`. Each result carries the worst observed
/// error next to the threshold it was held to.
struct CheckResult {
    std::string name;
    bool passed = false;
    double observed = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct CheckReport {
    std::vector<CheckResult> results;
    std::vector<std::string> tables;

    bool all_passed() const;
    void append(CheckReport other);
};

using KlGradientFn =
    std::function<std::vector<double>(KlKind, std::span<const double>, std::span<const double>, double)>;

struct CheckHooks {
    KlGradientFn kl_gradient = [](KlKind k, std::span<const double> t, std::span<const double> s, double tau) {
        return rtpd::kl_gradient(k, t, s, tau);
    };
};

/// Central difference of f at x along coordinate i.
double central_difference(const std::function<double(std::span<const double>)>& f, std::span<const double> x,
                          std::size_t i, double h);

/// max_i |a_i - b_i| / max(|a|_inf, |b|_inf, floor)
double scaled_max_error(std::span<const double> a, std::span<const double> b, double floor = 1e-8);

/// Network backprop, both KL gradients and the DQN-loss gradient against central differences;
/// also emits the comparison table of closed_form_rkl_gradient against the exact reverse-KL gradient.
CheckReport run_gradient_suite(const CheckHooks& hooks = {}, std::uint64_t seed = 20240601);

/// Non-negativity, zero at equality, reverse-KL decomposition, asymmetry, the
/// zero-avoiding / zero-forcing ladder and softmax shift invariance.
CheckReport run_divergence_suite(std::uint64_t seed = 20240602);

/// Double-estimator bound of the imitation target, the worked example, tie-breaking
/// and the gamma = 0 reduction.
CheckReport run_target_suite(std::uint64_t seed = 20240603);

/// Rows of (action, p_S, closed_form_rkl_gradient, exact gradient, finite difference) under a uniform teacher.
std::string closed_form_comparison_table();

/// Zero-avoiding / zero-forcing ladder: teacher p_T = [0.5, 0.5 - eps, eps]; student logits
/// [0, 0, -m] for m on `rungs`, tau = 1.
struct LadderRow {
    double eps = 0.0;
    double m = 0.0;
    double fkl = 0.0;
    double rkl = 0.0;
};
std::vector<LadderRow> divergence_ladder(std::span<const double> eps_values, std::span<const double> rungs);

std::string format_report(const CheckReport& report);

}  // namespace rtpd
