// SPDX-License-Identifier: Apache-2.0
#include "rtpd/qnet.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "rtpd/error.h"
#include "rtpd/hash.h"

namespace rtpd {

using nlohmann::json;

bool ArchSpec::is_dense() const {
    return input_shape.size() == 1 &&
           std::all_of(layers.begin(), layers.end(),
                       [](const LayerSpec& l) { return l.kind == LayerKind::dense; });
}

std::size_t ArchSpec::input_dim() const {
    std::size_t d = 1;
    for (int s : input_shape) d *= static_cast<std::size_t>(std::max(s, 0));
    return input_shape.empty() ? 0 : d;
}

std::vector<int> ArchSpec::hidden_widths() const {
    std::vector<int> w;
    for (const auto& l : layers)
        if (l.kind == LayerKind::dense) w.push_back(l.width);
    return w;
}

void ArchSpec::validate() const {
    if (n_actions < 2) throw InvalidArchitecture("n_actions must be >= 2");
    if (input_shape.size() != 1 && input_shape.size() != 3)
        throw InvalidArchitecture("input shape must be {dim} or {height, width, channels}");
    for (int s : input_shape)
        if (s < 1) throw InvalidArchitecture("input dimensions must be positive");

    bool seen_dense = false;
    int h = input_shape.size() == 3 ? input_shape[0] : 0;
    int w = input_shape.size() == 3 ? input_shape[1] : 0;
    for (const auto& l : layers) {
        if (l.kind == LayerKind::dense) {
            if (l.width < 1) throw InvalidArchitecture("dense width must be >= 1");
            seen_dense = true;
            continue;
        }
        if (seen_dense) throw InvalidArchitecture("conv layers must precede dense layers");
        if (input_shape.size() != 3) throw InvalidArchitecture("conv layers need a 3-d input shape");
        if (l.filters < 1 || l.kernel < 1 || l.stride < 1)
            throw InvalidArchitecture("conv filters, kernel and stride must be >= 1");
        if (h < l.kernel || w < l.kernel)
            throw InvalidArchitecture("conv output spatial dimension is not positive");
        h = (h - l.kernel) / l.stride + 1;
        w = (w - l.kernel) / l.stride + 1;
    }
}

ArchSpec dense_arch(std::size_t input_dim, std::vector<int> hidden, int n_actions) {
    ArchSpec a;
    for (int w : hidden) a.layers.push_back(LayerSpec::dense(w));
    a.input_shape = {static_cast<int>(input_dim)};
    a.n_actions = n_actions;
    return a;
}

ArchSpec arch_from_json(const json& j) {
    if (!j.is_object()) throw InvalidArchitecture("arch spec must be a JSON object");
    ArchSpec a;
    if (j.contains("conv")) {
        for (const auto& c : j.at("conv"))
            a.layers.push_back(LayerSpec::conv(c.at("filters").get<int>(), c.at("kernel").get<int>(),
                                               c.at("stride").get<int>()));
    }
    if (j.contains("dense"))
        for (const auto& w : j.at("dense")) a.layers.push_back(LayerSpec::dense(w.get<int>()));
    if (j.contains("input")) {
        const auto& in = j.at("input");
        if (in.is_number_integer())
            a.input_shape = {in.get<int>()};
        else
            a.input_shape = in.get<std::vector<int>>();
    }
    if (j.contains("actions")) a.n_actions = j.at("actions").get<int>();
    return a;
}

json arch_to_json(const ArchSpec& arch) {
    json conv = json::array();
    json dense = json::array();
    for (const auto& l : arch.layers) {
        if (l.kind == LayerKind::conv)
            conv.push_back({{"filters", l.filters}, {"kernel", l.kernel}, {"stride", l.stride}});
        else
            dense.push_back(l.width);
    }
    json j;
    if (!conv.empty()) j["conv"] = conv;
    j["dense"] = dense;
    j["input"] = arch.input_shape;
    j["actions"] = arch.n_actions;
    return j;
}

namespace {

struct Preset {
    const char* name;
    int f1, f2, f3, fc;
};

constexpr Preset kPresets[] = {
    {"teacher", 32, 64, 64, 512}, {"net1", 16, 32, 32, 256}, {"net2", 16, 16, 16, 128},
    {"net3", 16, 16, 16, 64},     {"net4", 8, 8, 16, 64},    {"net5", 8, 16, 8, 64},
};

}  // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& p : kPresets) v.emplace_back(p.name);
        return v;
    }();
    return names;
}

ArchSpec preset_arch(std::string_view name, int n_actions) {
    for (const auto& p : kPresets) {
        if (name != p.name) continue;
        ArchSpec a;
        a.layers = {LayerSpec::conv(p.f1, 8, 4), LayerSpec::conv(p.f2, 4, 2),
                    LayerSpec::conv(p.f3, 3, 1), LayerSpec::dense(p.fc)};
        a.input_shape = {84, 84, 4};
        a.n_actions = n_actions;
        return a;
    }
    throw InvalidInput("unknown preset '" + std::string(name) + "'");
}

std::int64_t param_count(const ArchSpec& arch) {
    arch.validate();
    std::int64_t total = 0;
    std::int64_t h = arch.input_shape.size() == 3 ? arch.input_shape[0] : 1;
    std::int64_t w = arch.input_shape.size() == 3 ? arch.input_shape[1] : 1;
    std::int64_t channels = arch.input_shape.size() == 3 ? arch.input_shape[2] : arch.input_shape[0];
    for (const auto& l : arch.layers) {
        if (l.kind == LayerKind::conv) {
            const std::int64_t k = l.kernel;
            total += k * k * channels * l.filters + l.filters;
            channels = l.filters;
            h = (h - k) / l.stride + 1;
            w = (w - k) / l.stride + 1;
        } else {
            const std::int64_t n_in = h * w * channels;
            total += n_in * l.width + l.width;
            h = w = 1;
            channels = l.width;
        }
    }
    const std::int64_t n_in = h * w * channels;
    total += n_in * arch.n_actions + arch.n_actions;
    return total;
}

double compression_ratio(const ArchSpec& student, const ArchSpec& teacher) {
    if (student.n_actions != teacher.n_actions)
        throw InvalidInput("student and teacher must share the action count");
    return 100.0 * static_cast<double>(param_count(student)) /
           static_cast<double>(param_count(teacher));
}

ActionValues DenseNet::forward(std::span<const double> state) const {
    if (layers.empty()) throw InvalidInput("network has no layers");
    if (state.size() != input_dim())
        throw InvalidInput("state length " + std::to_string(state.size()) +
                           " does not match network input " + std::to_string(input_dim()));
    std::vector<double> x(state.begin(), state.end());
    std::vector<double> y;
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const auto& L = layers[li];
        y.assign(L.bias.begin(), L.bias.end());
        for (std::size_t o = 0; o < L.out; ++o) {
            const double* row = &L.weights[o * L.in];
            double acc = y[o];
            for (std::size_t i = 0; i < L.in; ++i) acc += row[i] * x[i];
            y[o] = acc;
        }
        if (li + 1 < layers.size())
            for (double& v : y) v = v > 0.0 ? v : 0.0;
        x.swap(y);
    }
    return x;
}

GradientSet GradientSet::zeros_like(const DenseNet& net) {
    GradientSet g;
    g.layers.reserve(net.layers.size());
    for (const auto& L : net.layers) {
        DenseLayer z;
        z.in = L.in;
        z.out = L.out;
        z.weights.assign(L.weights.size(), 0.0);
        z.bias.assign(L.bias.size(), 0.0);
        g.layers.push_back(std::move(z));
    }
    return g;
}

bool GradientSet::congruent_with(const DenseNet& net) const {
    if (layers.size() != net.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& a = layers[i];
        const auto& b = net.layers[i];
        if (a.in != b.in || a.out != b.out || a.weights.size() != b.weights.size() ||
            a.bias.size() != b.bias.size())
            return false;
    }
    return true;
}

namespace {

DenseNet build_net(const ArchSpec& arch, std::mt19937_64* rng) {
    arch.validate();
    if (!arch.is_dense()) throw InvalidArchitecture("trainable networks must be dense-only");
    DenseNet net;
    std::size_t in = arch.input_dim();
    auto widths = arch.hidden_widths();
    widths.push_back(arch.n_actions);
    for (int width : widths) {
        DenseLayer L;
        L.in = in;
        L.out = static_cast<std::size_t>(width);
        L.weights.assign(L.in * L.out, 0.0);
        L.bias.assign(L.out, 0.0);
        if (rng) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(in));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (double& v : L.weights) v = dist(*rng);
            for (double& v : L.bias) v = dist(*rng);
        }
        net.layers.push_back(std::move(L));
        in = static_cast<std::size_t>(width);
    }
    return net;
}

}  // namespace

QNetworkPair make_qnetwork(const ArchSpec& arch, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    QNetworkPair pair;
    pair.online = build_net(arch, &rng);
    pair.target = pair.online;
    return pair;
}

QNetworkPair make_zero_qnetwork(const ArchSpec& arch) {
    QNetworkPair pair;
    pair.online = build_net(arch, nullptr);
    pair.target = pair.online;
    return pair;
}

ActionValues forward(const QNetworkPair& pair, Which which, std::span<const double> state) {
    return (which == Which::online ? pair.online : pair.target).forward(state);
}

GradientSet backward(const QNetworkPair& pair, std::span<const std::vector<double>> states,
                     std::span<const std::vector<double>> out_grads) {
    const DenseNet& net = pair.online;
    if (states.size() != out_grads.size())
        throw InvalidInput("state batch and output-gradient batch differ in length");
    GradientSet g = GradientSet::zeros_like(net);
    const std::size_t n_layers = net.layers.size();

    // activations[l] is the input to layer l; pre[l] the pre-activation output of layer l.
    std::vector<std::vector<double>> activations(n_layers);
    std::vector<std::vector<double>> pre(n_layers);
    std::vector<double> delta, prev_delta;

    for (std::size_t b = 0; b < states.size(); ++b) {
        const auto& s = states[b];
        const auto& dq = out_grads[b];
        if (s.size() != net.input_dim()) throw InvalidInput("state length does not match network input");
        if (dq.size() != net.n_actions()) throw InvalidInput("output-gradient width must equal n_actions");

        activations[0].assign(s.begin(), s.end());
        for (std::size_t li = 0; li < n_layers; ++li) {
            const auto& L = net.layers[li];
            auto& z = pre[li];
            z.assign(L.bias.begin(), L.bias.end());
            const auto& x = activations[li];
            for (std::size_t o = 0; o < L.out; ++o) {
                const double* row = &L.weights[o * L.in];
                double acc = z[o];
                for (std::size_t i = 0; i < L.in; ++i) acc += row[i] * x[i];
                z[o] = acc;
            }
            if (li + 1 < n_layers) {
                auto& next = activations[li + 1];
                next.resize(L.out);
                for (std::size_t o = 0; o < L.out; ++o) next[o] = z[o] > 0.0 ? z[o] : 0.0;
            }
        }

        delta.assign(dq.begin(), dq.end());
        for (std::size_t li = n_layers; li-- > 0;) {
            const auto& L = net.layers[li];
            auto& G = g.layers[li];
            const auto& x = activations[li];
            for (std::size_t o = 0; o < L.out; ++o) {
                const double d = delta[o];
                if (d == 0.0) continue;
                G.bias[o] += d;
                double* grow = &G.weights[o * L.in];
                for (std::size_t i = 0; i < L.in; ++i) grow[i] += d * x[i];
            }
            if (li == 0) break;
            prev_delta.assign(L.in, 0.0);
            for (std::size_t o = 0; o < L.out; ++o) {
                const double d = delta[o];
                if (d == 0.0) continue;
                const double* row = &L.weights[o * L.in];
                for (std::size_t i = 0; i < L.in; ++i) prev_delta[i] += d * row[i];
            }
            const auto& zprev = pre[li - 1];
            for (std::size_t i = 0; i < L.in; ++i)
                if (!(zprev[i] > 0.0)) prev_delta[i] = 0.0;
            delta.swap(prev_delta);
        }
    }
    return g;
}

void apply_update(QNetworkPair& pair, const GradientSet& grads, const OptimizerConfig& cfg,
                  OptimizerState& state) {
    DenseNet& net = pair.online;
    if (!grads.congruent_with(net)) throw InvalidInput("gradient shape does not match network");

    if (cfg.kind == OptimizerKind::sgd) {
        for (std::size_t li = 0; li < net.layers.size(); ++li) {
            auto& L = net.layers[li];
            const auto& G = grads.layers[li];
            for (std::size_t k = 0; k < L.weights.size(); ++k) L.weights[k] -= cfg.lr * G.weights[k];
            for (std::size_t k = 0; k < L.bias.size(); ++k) L.bias[k] -= cfg.lr * G.bias[k];
        }
        return;
    }

    if (state.square_avg.layers.empty()) state.square_avg = GradientSet::zeros_like(net);
    if (!state.square_avg.congruent_with(net)) throw InvalidInput("optimizer state shape does not match network");

    auto step = [&](std::vector<double>& w, const std::vector<double>& g, std::vector<double>& v) {
        for (std::size_t k = 0; k < w.size(); ++k) {
            v[k] = cfg.decay * v[k] + (1.0 - cfg.decay) * g[k] * g[k];
            w[k] -= cfg.lr * g[k] / (std::sqrt(v[k]) + cfg.epsilon);
        }
    };
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        auto& L = net.layers[li];
        const auto& G = grads.layers[li];
        auto& V = state.square_avg.layers[li];
        step(L.weights, G.weights, V.weights);
        step(L.bias, G.bias, V.bias);
    }
}

void sync_target(QNetworkPair& pair) { pair.target = pair.online; }

std::uint64_t weight_checksum(const DenseNet& net) {
    Fnv1a h;
    for (const auto& L : net.layers) {
        h.add(static_cast<std::int64_t>(L.in));
        h.add(static_cast<std::int64_t>(L.out));
        h.add(std::span<const double>(L.weights));
        h.add(std::span<const double>(L.bias));
    }
    return h.value();
}

double max_abs_diff(const DenseNet& a, const DenseNet& b) {
    if (a.layers.size() != b.layers.size()) throw InvalidInput("networks differ in depth");
    double m = 0.0;
    for (std::size_t li = 0; li < a.layers.size(); ++li) {
        const auto& A = a.layers[li];
        const auto& B = b.layers[li];
        if (A.weights.size() != B.weights.size() || A.bias.size() != B.bias.size())
            throw InvalidInput("networks differ in shape");
        for (std::size_t k = 0; k < A.weights.size(); ++k) m = std::max(m, std::abs(A.weights[k] - B.weights[k]));
        for (std::size_t k = 0; k < A.bias.size(); ++k) m = std::max(m, std::abs(A.bias[k] - B.bias[k]));
    }
    return m;
}

namespace {

json net_to_json(const DenseNet& net) {
    json layers = json::array();
    for (const auto& L : net.layers)
        layers.push_back({{"in", L.in}, {"out", L.out}, {"weights", L.weights}, {"bias", L.bias}});
    return layers;
}

DenseNet net_from_json(const json& j) {
    DenseNet net;
    for (const auto& lj : j) {
        DenseLayer L;
        L.in = lj.at("in").get<std::size_t>();
        L.out = lj.at("out").get<std::size_t>();
        L.weights = lj.at("weights").get<std::vector<double>>();
        L.bias = lj.at("bias").get<std::vector<double>>();
        if (L.weights.size() != L.in * L.out || L.bias.size() != L.out)
            throw InvalidInput("checkpoint layer shape header does not match its data");
        if (!net.layers.empty() && net.layers.back().out != L.in)
            throw InvalidInput("checkpoint layers are not chained");
        net.layers.push_back(std::move(L));
    }
    return net;
}

}  // namespace

json checkpoint_to_json(const QNetworkPair& pair) {
    return {{"format", "rtpd-qnet-v1"}, {"online", net_to_json(pair.online)}, {"target", net_to_json(pair.target)}};
}

QNetworkPair checkpoint_from_json(const json& j) {
    if (j.value("format", "") != "rtpd-qnet-v1") throw InvalidInput("unsupported checkpoint format");
    QNetworkPair pair;
    pair.online = net_from_json(j.at("online"));
    pair.target = net_from_json(j.at("target"));
    if (pair.online.layers.size() != pair.target.layers.size())
        throw InvalidInput("checkpoint online/target shapes differ");
    for (std::size_t i = 0; i < pair.online.layers.size(); ++i)
        if (pair.online.layers[i].in != pair.target.layers[i].in ||
            pair.online.layers[i].out != pair.target.layers[i].out)
            throw InvalidInput("checkpoint online/target shapes differ");
    return pair;
}

}  // namespace rtpd
