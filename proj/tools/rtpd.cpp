// SPDX-License-Identifier: Apache-2.0
//
// rtpd: command-line front end.
//
//   rtpd train  --config PATH [--seed N] [--out DIR] [--seeds K] [--jobs J]
//   rtpd params (--preset NAME | --arch PATH)... [--actions N]
//   rtpd check  --suite {gradients|divergences|targets|all}
//
// Exit codes: 0 success, 1 runtime or check failure, 2 usage or config error.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rtpd/checks.h"
#include "rtpd/config.h"
#include "rtpd/error.h"
#include "rtpd/io.h"
#include "rtpd/metrics.h"
#include "rtpd/qnet.h"
#include "rtpd/trainer.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

// 1-based line of the first occurrence of the last key in `path` within `text`, or 0.
int locate_key_line(const std::string& text, const std::string& path) {
    std::string leaf = path;
    if (auto dot = leaf.find_last_of('.'); dot != std::string::npos) leaf = leaf.substr(dot + 1);
    if (auto br = leaf.find('['); br != std::string::npos) leaf = leaf.substr(0, br);
    if (leaf.empty()) return 0;
    const auto pos = text.find("\"" + leaf + "\"");
    if (pos == std::string::npos) return 0;
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

struct TrainArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    int seeds = 1;
    int jobs = 1;
};

json aggregate_seeds(const std::vector<std::pair<std::uint64_t, json>>& runs) {
    struct Acc {
        std::vector<double> max_pct, mean_last10;
    };
    std::map<std::string, Acc> acc;
    std::vector<std::string> order;
    for (const auto& [seed, m] : runs)
        for (const auto& model : m.at("models")) {
            const auto name = model.at("model").get<std::string>();
            if (!acc.count(name)) order.push_back(name);
            acc[name].max_pct.push_back(model.at("max_pct").get<double>());
            acc[name].mean_last10.push_back(model.at("mean_last10_pct").get<double>());
        }
    auto summary = [](const std::vector<double>& v) {
        double sum = 0.0;
        for (double x : v) sum += x;
        return json{{"mean", sum / static_cast<double>(v.size())},
                    {"min", *std::min_element(v.begin(), v.end())},
                    {"max", *std::max_element(v.begin(), v.end())}};
    };
    json models = json::array();
    for (const auto& name : order)
        models.push_back({{"model", name},
                          {"max_pct", summary(acc[name].max_pct)},
                          {"mean_last10_pct", summary(acc[name].mean_last10)}});
    json seeds = json::array();
    for (const auto& r : runs) seeds.push_back(r.first);
    return {{"seeds", seeds}, {"models", models}};
}

int cmd_train(const TrainArgs& args) {
    std::string text;
    rtpd::ExperimentConfig cfg;
    try {
        text = rtpd::read_file(args.config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    try {
        cfg = rtpd::load_experiment_config(args.config);
    } catch (const rtpd::ConfigError& e) {
        const int line = locate_key_line(text, e.path());
        std::cerr << args.config;
        if (line > 0) std::cerr << ":" << line;
        std::cerr << ": config error: " << e.what() << "\n";
        return kUsage;
    }
    if (args.seed) cfg.trainer.seed = *args.seed;
    if (!args.out.empty()) cfg.output_dir = args.out;
    if (const char* env_out = std::getenv("RTPD_OUT"); env_out && *env_out) cfg.output_dir = env_out;

    if (args.seeds < 1 || args.jobs < 1) {
        std::cerr << "error: --seeds and --jobs must be positive\n";
        return kUsage;
    }

    const fs::path root = cfg.output_dir;
    std::vector<rtpd::ExperimentConfig> runs;
    for (int k = 0; k < args.seeds; ++k) {
        auto c = cfg;
        c.trainer.seed = cfg.trainer.seed + static_cast<std::uint64_t>(k);
        c.output_dir = args.seeds == 1 ? root.string() : (root / ("seed_" + std::to_string(c.trainer.seed))).string();
        runs.push_back(std::move(c));
    }

    std::mutex io_mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<json> metrics(runs.size());
    auto worker = [&] {
        for (std::size_t i = next++; i < runs.size(); i = next++) {
            const auto& c = runs[i];
            try {
                rtpd::RunOptions opts;
                opts.output_dir = fs::path(c.output_dir);
                opts.on_epoch = [&](const rtpd::ExperimentState& st, const rtpd::EpochReport& rep) {
                    std::lock_guard lock(io_mutex);
                    std::cout << "seed " << c.trainer.seed << " epoch " << rep.epoch << "/" << st.cfg.trainer.total_epochs;
                    for (const auto& s : rep.scores)
                        std::cout << "  " << s.model << " " << s.mean_return << " (" << rtpd::format_pct(s.pct_of_teacher_mean)
                                  << "%)";
                    std::cout << std::endl;
                };
                rtpd::run_experiment(c, opts);
                metrics[i] = json::parse(rtpd::read_file(fs::path(c.output_dir) / "metrics.json"));
            } catch (const std::exception& e) {
                std::lock_guard lock(io_mutex);
                std::cerr << "error: run with seed " << c.trainer.seed << " in " << c.output_dir << ": " << e.what() << "\n";
                failed = true;
            }
        }
    };
    const int n_threads = std::min<int>(args.jobs, static_cast<int>(runs.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failed) return kFailure;

    if (runs.size() > 1) {
        std::vector<std::pair<std::uint64_t, json>> all;
        for (std::size_t i = 0; i < runs.size(); ++i) all.emplace_back(runs[i].trainer.seed, metrics[i]);
        try {
            rtpd::write_file_atomic(root / "aggregate.json", aggregate_seeds(all).dump(2) + "\n");
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kFailure;
        }
    }
    for (std::size_t i = 0; i < runs.size(); ++i)
        for (const auto& m : metrics[i].at("models"))
            std::cout << "seed " << runs[i].trainer.seed << "  " << m.at("model").get<std::string>() << "  max_pct "
                      << rtpd::format_pct(m.at("max_pct").get<double>()) << "  mean_last10_pct "
                      << rtpd::format_pct(m.at("mean_last10_pct").get<double>()) << "\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (!metrics[i].contains("directional_check")) continue;
        const auto& dc = metrics[i].at("directional_check");
        if (!dc.at("passed").get<bool>())
            std::cerr << "warning: seed " << runs[i].trainer.seed << " directional check on "
                      << dc.at("env").get<std::string>() << " not met (" << dc.at("rule").get<std::string>()
                      << "; forward " << rtpd::format_pct(dc.at("forward_kl_mean_last10_pct").get<double>())
                      << ", reverse " << rtpd::format_pct(dc.at("reverse_kl_mean_last10_pct").get<double>()) << ")\n";
    }
    return kOk;
}

struct ParamsArgs {
    std::vector<std::string> presets;
    std::vector<std::string> archs;
    int actions = 18;
};

int cmd_params(const CLI::App& sub, const ParamsArgs& args) {
    struct Entry {
        std::string name;
        rtpd::ArchSpec arch;
    };
    std::vector<Entry> entries;
    std::size_t pi = 0, ai = 0;
    try {
        for (const CLI::Option* opt : sub.parse_order()) {
            if (opt->get_name() == "--preset") {
                const auto& name = args.presets.at(pi++);
                entries.push_back({name, rtpd::preset_arch(name, args.actions)});
            } else if (opt->get_name() == "--arch") {
                const auto& path = args.archs.at(ai++);
                auto arch = rtpd::arch_from_json(json::parse(rtpd::read_file(path)));
                if (arch.n_actions == 0) arch.n_actions = args.actions;
                entries.push_back({fs::path(path).stem().string(), arch});
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    if (entries.empty()) {
        std::cerr << "error: give at least one --preset or --arch\n";
        return kUsage;
    }

    try {
        const auto& ref = entries.back();
        const bool ratios = entries.size() > 1;
        std::printf("%-12s %12s%s\n", "model", "params", ratios ? "   ratio" : "");
        bool net5_vs_teacher = false;
        for (const auto& e : entries) {
            const auto count = rtpd::param_count(e.arch);
            if (ratios) {
                const double r = rtpd::compression_ratio(e.arch, ref.arch);
                std::printf("%-12s %12lld %7s%%\n", e.name.c_str(), static_cast<long long>(count),
                            rtpd::format_pct(r).c_str());
                if (e.name == "net5" && ref.name == "teacher") net5_vs_teacher = true;
            } else {
                std::printf("%-12s %12lld\n", e.name.c_str(), static_cast<long long>(count));
            }
        }
        if (ratios) std::printf("ratios relative to %s\n", ref.name.c_str());
        if (net5_vs_teacher) {
            const double r = rtpd::compression_ratio(rtpd::preset_arch("net5", args.actions),
                                                     rtpd::preset_arch("teacher", args.actions));
            std::printf("note: net5 is usually quoted at 1.7%% of the teacher; bias-inclusive counting gives %.2f%%,\n"
                        "      and no counting convention tried (bias-free, other action counts) reproduces 1.7%%.\n",
                        r);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kOk;
}

int cmd_check(const std::string& suite, const std::string& fault) {
    rtpd::CheckHooks hooks;
    if (fault == "rkl_sign_flip") {
        hooks.kl_gradient = [](rtpd::KlKind k, std::span<const double> t, std::span<const double> s, double tau) {
            auto g = rtpd::kl_gradient(k, t, s, tau);
            if (k == rtpd::KlKind::reverse)
                for (double& v : g) v = -v;
            return g;
        };
    } else if (!fault.empty()) {
        std::cerr << "error: unknown fault '" << fault << "'\n";
        return kUsage;
    }
    rtpd::CheckReport report;
    const bool all = suite == "all";
    if (all || suite == "gradients") report.append(rtpd::run_gradient_suite(hooks));
    if (all || suite == "divergences") report.append(rtpd::run_divergence_suite());
    if (all || suite == "targets") report.append(rtpd::run_target_suite());
    std::cout << rtpd::format_report(report);
    const bool ok = report.all_passed();
    std::cout << (ok ? "all checks passed" : "CHECK FAILURES") << "\n";
    return ok ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Real-time policy distillation for deep Q-learning on small MDPs"};
    app.require_subcommand(1);

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Run an experiment from a JSON config");
    train_cmd->add_option("--config", train.config, "Experiment config (JSON)")->required();
    train_cmd->add_option("--seed", train.seed, "Override the config seed");
    train_cmd->add_option("--out", train.out, "Output directory (RTPD_OUT takes precedence)");
    train_cmd->add_option("--seeds", train.seeds, "Run this many consecutive seeds and aggregate them");
    train_cmd->add_option("--jobs", train.jobs, "Seeds to run concurrently");

    ParamsArgs params;
    auto* params_cmd = app.add_subcommand("params", "Parameter counts and compression ratios");
    params_cmd->add_option("--preset", params.presets, "teacher, net1 .. net5 (repeatable)")
        ->check(CLI::IsMember(rtpd::preset_names()));
    params_cmd->add_option("--arch", params.archs, "Arch spec JSON file (repeatable)");
    params_cmd->add_option("--actions", params.actions, "Action count for presets");

    std::string suite = "all";
    std::string fault;
    auto* check_cmd = app.add_subcommand("check", "Run gradient / divergence / target property suites");
    check_cmd->add_option("--suite", suite, "Which suite to run")
        ->check(CLI::IsMember({"gradients", "divergences", "targets", "all"}));
    check_cmd->add_option("--inject-fault", fault, "Test fixture: corrupt a gradient (rkl_sign_flip)")->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*train_cmd) return cmd_train(train);
        if (*params_cmd) return cmd_params(*params_cmd, params);
        if (*check_cmd) return cmd_check(suite, fault);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kUsage;
}
