// SPDX-License-Identifier: Apache-2.0
#include "rtpd/checks.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "rtpd/qnet.h"
#include "rtpd/targets.h"

namespace rtpd {

bool CheckReport::all_passed() const {
    return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

void CheckReport::append(CheckReport other) {
    for (auto& r : other.results) results.push_back(std::move(r));
    for (auto& t : other.tables) tables.push_back(std::move(t));
}

double central_difference(const std::function<double(std::span<const double>)>& f, std::span<const double> x,
                          std::size_t i, double h) {
    std::vector<double> xp(x.begin(), x.end());
    std::vector<double> xm(x.begin(), x.end());
    xp[i] += h;
    xm[i] -= h;
    return (f(xp) - f(xm)) / (2.0 * h);
}

double scaled_max_error(std::span<const double> a, std::span<const double> b, double floor) {
    double scale = floor;
    double err = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
        err = std::max(err, std::abs(a[i] - b[i]));
    }
    return err / scale;
}

namespace {

constexpr std::array<double, 4> kTaus = {0.01, 0.1, 1.0, 10.0};

std::vector<double> uniform_vec(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

CheckResult make_result(std::string name, double observed, double threshold, std::string detail = {}) {
    return CheckResult{std::move(name), observed <= threshold, observed, threshold, std::move(detail)};
}

// Per-parameter relative error of backward() against central differences of
// L = sum_b <g_b, q(s_b)>, with denominators clamped at 1e-8.
double network_gradient_error(std::mt19937_64& rng, int depth, std::string& arch_desc) {
    std::uniform_int_distribution<int> width(2, 16);
    std::uniform_int_distribution<int> in_dim(2, 8);
    std::uniform_int_distribution<int> actions(2, 6);
    std::vector<int> hidden(static_cast<std::size_t>(depth));
    for (int& w : hidden) w = width(rng);
    const auto arch = dense_arch(static_cast<std::size_t>(in_dim(rng)), hidden, actions(rng));
    arch_desc = std::to_string(arch.input_dim());
    for (int w : hidden) arch_desc += "-" + std::to_string(w);
    arch_desc += "-" + std::to_string(arch.n_actions);

    const auto pair = make_qnetwork(arch, rng());
    const std::size_t batch = 3;
    std::vector<std::vector<double>> states, grads;
    for (std::size_t b = 0; b < batch; ++b) {
        states.push_back(uniform_vec(rng, arch.input_dim(), -1.0, 1.0));
        grads.push_back(uniform_vec(rng, static_cast<std::size_t>(arch.n_actions), -1.0, 1.0));
    }
    const GradientSet analytic = backward(pair, states, grads);

    auto loss = [&](const DenseNet& net) {
        double l = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            const auto q = net.forward(states[b]);
            for (std::size_t a = 0; a < q.size(); ++a) l += grads[b][a] * q[a];
        }
        return l;
    };

    constexpr double h = 1e-6;
    double worst = 0.0;
    DenseNet probe = pair.online;
    auto visit = [&](double& param, double g) {
        const double saved = param;
        param = saved + h;
        const double lp = loss(probe);
        param = saved - h;
        const double lm = loss(probe);
        param = saved;
        const double fd = (lp - lm) / (2.0 * h);
        const double rel = std::abs(fd - g) / std::max({std::abs(fd), std::abs(g), 1e-8});
        worst = std::max(worst, rel);
    };
    for (std::size_t li = 0; li < probe.layers.size(); ++li) {
        auto& L = probe.layers[li];
        const auto& G = analytic.layers[li];
        for (std::size_t k = 0; k < L.weights.size(); ++k) visit(L.weights[k], G.weights[k]);
        for (std::size_t k = 0; k < L.bias.size(); ++k) visit(L.bias[k], G.bias[k]);
    }
    return worst;
}

}  // namespace

CheckReport run_gradient_suite(const CheckHooks& hooks, std::uint64_t seed) {
    CheckReport report;
    std::mt19937_64 rng(seed);

    {
        double worst = 0.0;
        std::string worst_arch;
        int count = 0;
        for (int depth = 1; depth <= 3; ++depth)
            for (int rep = 0; rep < 6; ++rep) {
                std::string desc;
                const double e = network_gradient_error(rng, depth, desc);
                ++count;
                if (e >= worst) {
                    worst = e;
                    worst_arch = desc;
                }
            }
        report.results.push_back(make_result("network backprop vs central differences", worst, 1e-5,
                                             std::to_string(count) + " archs, worst " + worst_arch));
    }

    // Logits are drawn in units of tau so that every temperature yields a
    // non-degenerate softmax; the difference step is scaled the same way.
    std::uniform_int_distribution<int> n_dist(2, 10);
    auto kl_check = [&](KlKind kind, const char* name) {
        double worst = 0.0;
        for (int inst = 0; inst < 100; ++inst) {
            const double tau = kTaus[static_cast<std::size_t>(inst) % kTaus.size()];
            const auto n = static_cast<std::size_t>(n_dist(rng));
            auto qt = uniform_vec(rng, n, -3.0, 3.0);
            auto qs = uniform_vec(rng, n, -3.0, 3.0);
            for (auto& v : qt) v *= tau;
            for (auto& v : qs) v *= tau;
            const auto analytic = hooks.kl_gradient(kind, qt, qs, tau);
            auto f = [&](std::span<const double> x) {
                return kind == KlKind::forward ? forward_kl(qt, x, tau) : reverse_kl(qt, x, tau).total;
            };
            std::vector<double> fd(n);
            for (std::size_t i = 0; i < n; ++i) fd[i] = central_difference(f, qs, i, 1e-5 * tau);
            worst = std::max(worst, scaled_max_error(analytic, fd));
        }
        report.results.push_back(make_result(name, worst, 1e-6, "100 instances, N in 2..10, tau in {0.01,0.1,1,10}"));
    };
    kl_check(KlKind::forward, "forward KL gradient vs central differences");
    kl_check(KlKind::reverse, "reverse KL gradient vs central differences");

    {
        double worst = 0.0;
        std::uniform_int_distribution<int> b_dist(1, 64);
        for (int inst = 0; inst < 100; ++inst) {
            const auto b = static_cast<std::size_t>(b_dist(rng));
            const auto targets = uniform_vec(rng, b, -2.0, 2.0);
            const auto preds = uniform_vec(rng, b, -2.0, 2.0);
            const auto analytic = dqn_loss_gradient(targets, preds);
            auto f = [&](std::span<const double> x) { return dqn_loss(targets, x); };
            std::vector<double> fd(b);
            for (std::size_t i = 0; i < b; ++i) fd[i] = central_difference(f, preds, i, 1e-6);
            worst = std::max(worst, scaled_max_error(analytic, fd));
        }
        report.results.push_back(make_result("DQN loss gradient vs central differences", worst, 1e-6,
                                             "100 instances, batch 1..64"));
    }

    {
        const std::string table = closed_form_comparison_table();
        report.tables.push_back(table);
        // Informational: the closed form is expected to disagree with the exact gradient.
        std::vector<double> uniform_teacher(4, 0.0);
        const std::vector<double> student = {std::log(0.7), std::log(0.1), std::log(0.1), std::log(0.1)};
        const auto exact = rtpd::kl_gradient(KlKind::reverse, uniform_teacher, student, 1.0);
        const auto quoted = closed_form_rkl_gradient(student, 1.0);
        double gap = 0.0;
        for (std::size_t i = 0; i < exact.size(); ++i) gap = std::max(gap, std::abs(exact[i] - quoted[i]));
        CheckResult r{"closed-form comparison table emitted", !table.empty(), gap, 0.0,
                      "max |closed form - exact| = " + std::to_string(gap) + " (informational)"};
        report.results.push_back(r);
    }
    return report;
}

std::vector<LadderRow> divergence_ladder(std::span<const double> eps_values, std::span<const double> rungs) {
    std::vector<LadderRow> rows;
    for (double eps : eps_values) {
        const std::vector<double> qt = {std::log(0.5), std::log(0.5 - eps), std::log(eps)};
        for (double m : rungs) {
            const std::vector<double> qs = {0.0, 0.0, -m};
            rows.push_back({eps, m, forward_kl(qt, qs, 1.0), reverse_kl(qt, qs, 1.0).total});
        }
    }
    return rows;
}

CheckReport run_divergence_suite(std::uint64_t seed) {
    CheckReport report;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> n_dist(2, 10);
    std::uniform_real_distribution<double> shift(-50.0, 50.0);

    double most_negative = 0.0;
    double worst_decomp = 0.0;
    double worst_equal = 0.0;
    double worst_shift = 0.0;
    int positivity_failures = 0;
    for (int inst = 0; inst < 10'000; ++inst) {
        const double tau = kTaus[static_cast<std::size_t>(inst) % kTaus.size()];
        const auto n = static_cast<std::size_t>(n_dist(rng));
        const auto qt = uniform_vec(rng, n, -3.0, 3.0);
        const auto qs = uniform_vec(rng, n, -3.0, 3.0);
        const double f = forward_kl(qt, qs, tau);
        const auto r = reverse_kl(qt, qs, tau);
        most_negative = std::min({most_negative, f, r.total, r.rce - r.entropy + 1e-12});
        worst_decomp = std::max(worst_decomp, std::abs(r.total - (r.rce - r.entropy)));

        const auto pt = softmax_tau(qt, tau).p;
        const auto ps = softmax_tau(qs, tau).p;
        double dp = 0.0;
        for (std::size_t i = 0; i < n; ++i) dp = std::max(dp, std::abs(pt[i] - ps[i]));
        if (dp > 1e-6 && !(f > 0.0 && r.total > 0.0)) ++positivity_failures;

        std::vector<double> shifted = qt;
        const double c = shift(rng);
        for (auto& v : shifted) v += c;
        worst_equal = std::max({worst_equal, forward_kl(qt, shifted, tau), reverse_kl(qt, shifted, tau).total,
                                forward_kl(qt, qt, tau), reverse_kl(qt, qt, tau).total});
        const auto ph = softmax_tau(shifted, tau).p;
        for (std::size_t i = 0; i < n; ++i) worst_shift = std::max(worst_shift, std::abs(ph[i] - pt[i]));
    }
    report.results.push_back(make_result("non-negativity over 10^4 random pairs", -most_negative, 0.0,
                                         "most negative value observed (rce - entropy checked at 1e-12)"));
    report.results.push_back(make_result("strictly positive when distributions differ by > 1e-6",
                                         positivity_failures, 0.0, "count of violations"));
    report.results.push_back(make_result("zero at equality (incl. constant logit shift)", worst_equal, 1e-9));
    report.results.push_back(make_result("reverse KL = RCE - entropy", worst_decomp, 1e-12));
    report.results.push_back(make_result("softmax invariant to constant logit shift", worst_shift, 1e-12));

    {
        const std::vector<double> qt = {std::log(0.5), std::log(0.5)};
        const std::vector<double> qs = {std::log(0.9), std::log(0.1)};
        const double f = forward_kl(qt, qs, 1.0);
        const double r = reverse_kl(qt, qs, 1.0).total;
        CheckResult res{"asymmetry witness |FKL - RKL| > 0.1", std::abs(f - r) > 0.1, std::abs(f - r), 0.1,
                        "FKL " + std::to_string(f) + " vs RKL " + std::to_string(r)};
        report.results.push_back(res);
    }

    {
        const std::vector<double> eps_values = {1e-1, 1e-2, 1e-3};
        std::vector<double> rungs;
        for (double m = 8.0; m <= 26.0; m += 2.0) rungs.push_back(m);
        const auto rows = divergence_ladder(eps_values, rungs);
        bool increasing = true;
        bool bounded = true;
        double worst_ratio = 0.0;
        std::ostringstream table;
        table << "zero-avoiding / zero-forcing ladder (p_T = [0.5, 0.5-eps, eps], student logits [0, 0, -m], tau = 1)\n";
        table << "     eps      m          FKL          RKL   RKL bound\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& row = rows[i];
            const double bound = -std::log(0.5 - row.eps);
            if (i > 0 && rows[i - 1].eps == row.eps && !(row.fkl > rows[i - 1].fkl)) increasing = false;
            if (!(row.rkl <= bound)) bounded = false;
            worst_ratio = std::max(worst_ratio, row.rkl / bound);
            char line[128];
            std::snprintf(line, sizeof line, "%8.0e %6.1f %12.6f %12.6f %11.6f\n", row.eps, row.m, row.fkl, row.rkl,
                          bound);
            table << line;
        }
        report.tables.push_back(table.str());
        report.results.push_back(
            CheckResult{"ladder: FKL strictly increasing", increasing, 0.0, 0.0, "m = 8..26 for eps in {1e-1,1e-2,1e-3}"});
        report.results.push_back(CheckResult{"ladder: RKL bounded by -ln(min p_T on student support)", bounded,
                                             worst_ratio, 1.0, "worst RKL / bound"});
    }
    return report;
}

namespace {

// Single dense layer with zero weights whose output is `values` for every input.
QNetworkPair constant_net(std::size_t input_dim, const std::vector<double>& values) {
    auto pair = make_zero_qnetwork(dense_arch(input_dim, {}, static_cast<int>(values.size())));
    pair.online.layers[0].bias = values;
    pair.target = pair.online;
    return pair;
}

}  // namespace

CheckReport run_target_suite(std::uint64_t seed) {
    CheckReport report;
    std::mt19937_64 rng(seed);

    {
        std::uniform_int_distribution<int> dim(2, 6), actions(2, 6), width(2, 8), depth(0, 2);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        int violations = 0;
        double worst_gap = 0.0;
        for (int draw = 0; draw < 10'000; ++draw) {
            const auto d = static_cast<std::size_t>(dim(rng));
            const int n = actions(rng);
            std::vector<int> hs(static_cast<std::size_t>(depth(rng))), ht(static_cast<std::size_t>(depth(rng)));
            for (int& w : hs) w = width(rng);
            for (int& w : ht) w = width(rng);
            auto student = make_qnetwork(dense_arch(d, hs, n), rng());
            auto teacher = make_qnetwork(dense_arch(d, ht, n), rng());
            // Targets read target weights; perturb online ones so the two differ.
            student.target = make_qnetwork(dense_arch(d, hs, n), rng()).online;
            teacher.target = make_qnetwork(dense_arch(d, ht, n), rng()).online;
            std::vector<Transition> batch(4);
            for (auto& t : batch) {
                t.state = uniform_vec(rng, d, -1.0, 1.0);
                t.next_state = uniform_vec(rng, d, -1.0, 1.0);
                t.action = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
                t.reward = unit(rng) * 2.0 - 1.0;
                t.terminal = unit(rng) < 0.2;
            }
            const double gamma = unit(rng);
            const auto imit = student_target_imitation(batch, student, teacher, gamma);
            const auto own = student_target_no_imitation(batch, student, gamma);
            for (std::size_t i = 0; i < batch.size(); ++i) {
                if (imit.y[i] > own.y[i]) ++violations;
                worst_gap = std::max(worst_gap, imit.y[i] - own.y[i]);
            }
        }
        report.results.push_back(make_result("imitation target <= no-imitation target (10^4 draws)", violations, 0.0,
                                             "violations; max(imitation - no_imitation) = " + std::to_string(worst_gap)));
    }

    {
        Transition t{{0.0, 0.0}, 0, 0.0, {0.0, 0.0}, false};
        const auto teacher = constant_net(2, {1.0, 9.0});
        const auto student = constant_net(2, {7.0, 2.0});
        const std::vector<Transition> batch = {t};
        const auto y = student_target_imitation(batch, student, teacher, 1.0);
        report.results.push_back(
            CheckResult{"worked example teacher [1,9], student [7,2] -> y = 2", y.y[0] == 2.0, y.y[0], 2.0, ""});
    }

    {
        std::vector<double> q = {0.5, 2.0, 2.0, 1.0};
        bool ok = argmax_lowest(q) == 1;
        std::vector<double> permuted = {2.0, 0.5, 1.0, 2.0};
        ok = ok && argmax_lowest(permuted) == 0;
        report.results.push_back(CheckResult{"argmax ties resolve to the lowest index", ok, 0.0, 0.0, ""});
    }

    {
        auto teacher = make_qnetwork(dense_arch(3, {5}, 3), rng());
        std::vector<Transition> batch;
        for (int i = 0; i < 16; ++i)
            batch.push_back({uniform_vec(rng, 3, -1, 1), i % 3, 0.25 * i - 2.0, uniform_vec(rng, 3, -1, 1), i % 4 == 0});
        const auto y = teacher_target(batch, teacher, 0.0);
        bool exact = true;
        for (std::size_t i = 0; i < batch.size(); ++i) exact = exact && y.y[i] == batch[i].reward;
        report.results.push_back(CheckResult{"teacher target with gamma = 0 equals rewards", exact, 0.0, 0.0, ""});
    }
    return report;
}

std::string closed_form_comparison_table() {
    std::ostringstream out;
    out << "reverse-KL logit gradient under a uniform teacher, tau = 1\n";
    out << "  closed form: (1/tau)(1/N - (-p_i ln p_i))    exact: (1/tau) p_i (ln p_i + H(p_S))\n";
    out << " case       i      p_S_i   closed form        exact   central diff\n";
    const std::vector<std::vector<double>> cases = {
        {0.25, 0.25, 0.25, 0.25}, {0.7, 0.1, 0.1, 0.1}, {0.5, 0.5}, {0.9, 0.05, 0.05}};
    int case_id = 0;
    for (const auto& p : cases) {
        ++case_id;
        std::vector<double> qs(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) qs[i] = std::log(p[i]);
        const std::vector<double> qt(p.size(), 0.0);
        const auto quoted = closed_form_rkl_gradient(qs, 1.0);
        const auto exact = kl_gradient(KlKind::reverse, qt, qs, 1.0);
        auto f = [&](std::span<const double> x) { return reverse_kl(qt, x, 1.0).total; };
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double fd = central_difference(f, qs, i, 1e-6);
            char line[160];
            std::snprintf(line, sizeof line, "%5d %7zu %10.5f %13.6f %12.6f %14.6f\n", case_id, i, p[i], quoted[i],
                          exact[i], fd);
            out << line;
        }
    }
    return out.str();
}

std::string format_report(const CheckReport& report) {
    std::ostringstream out;
    for (const auto& t : report.tables) out << t << "\n";
    for (const auto& r : report.results) {
        char line[256];
        std::snprintf(line, sizeof line, "[%s] %-58s observed %.3e (limit %.1e)", r.passed ? "PASS" : "FAIL",
                      r.name.c_str(), r.observed, r.threshold);
        out << line;
        if (!r.detail.empty()) out << "  " << r.detail;
        out << "\n";
    }
    return out.str();
}

}  // namespace rtpd
