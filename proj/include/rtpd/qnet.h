// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rtpd {

using ActionValues = std::vector<double>;

enum class LayerKind { dense, conv };

struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    int width = 0;    // dense
    int filters = 0;  // conv
    int kernel = 0;   // conv, square
    int stride = 0;   // conv

    static LayerSpec dense(int width) { return {LayerKind::dense, width, 0, 0, 0}; }
    static LayerSpec conv(int filters, int kernel, int stride) {
        return {LayerKind::conv, 0, filters, kernel, stride};
    }
};

/// Hidden layer stack plus an implied linear output layer of `n_actions` units.
///
/// Conv layers must precede dense layers and are only meaningful to
/// `param_count`; trainable networks are built from dense-only specs whose
/// `input_shape` is a single flat dimension.
struct ArchSpec {
    std::vector<LayerSpec> layers;
    std::vector<int> input_shape;  // {height, width, channels} or {dim}
    int n_actions = 0;

    bool is_dense() const;
    std::size_t input_dim() const;
    /// Throws InvalidArchitecture on bad geometry.
    void validate() const;
    std::vector<int> hidden_widths() const;
};

ArchSpec dense_arch(std::size_t input_dim, std::vector<int> hidden, int n_actions);

/// {"conv":[{"filters":32,"kernel":8,"stride":4},...],"dense":[512],"input":[84,84,4],"actions":18}
ArchSpec arch_from_json(const nlohmann::json& j);
nlohmann::json arch_to_json(const ArchSpec& arch);

/// Atari-geometry presets: "teacher", "net1" .. "net5" on an 84x84x4 input.
ArchSpec preset_arch(std::string_view name, int n_actions = 18);
const std::vector<std::string>& preset_names();

/// Exact parameter count including biases. Conv geometry is unpadded:
/// out = floor((in - kernel) / stride) + 1.
std::int64_t param_count(const ArchSpec& arch);

/// 100 * param_count(student) / param_count(teacher).
double compression_ratio(const ArchSpec& student, const ArchSpec& teacher);

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;  // out x in, row-major
    std::vector<double> bias;     // out

    double& w(std::size_t o, std::size_t i) { return weights[o * in + i]; }
    double w(std::size_t o, std::size_t i) const { return weights[o * in + i]; }
};

/// Dense feed-forward net: ReLU on hidden layers, identity on the output.
struct DenseNet {
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    std::size_t n_actions() const { return layers.empty() ? 0 : layers.back().out; }
    ActionValues forward(std::span<const double> state) const;
};

/// Partial derivatives, shape-congruent with DenseNet::layers.
struct GradientSet {
    std::vector<DenseLayer> layers;

    static GradientSet zeros_like(const DenseNet& net);
    bool congruent_with(const DenseNet& net) const;
};

enum class Which { online, target };

struct QNetworkPair {
    DenseNet online;
    DenseNet target;
};

/// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; target starts as a copy of online.
QNetworkPair make_qnetwork(const ArchSpec& arch, std::uint64_t seed);
/// Zero weights and biases everywhere.
QNetworkPair make_zero_qnetwork(const ArchSpec& arch);

ActionValues forward(const QNetworkPair& pair, Which which, std::span<const double> state);

/// Gradient of sum_b <out_grads[b], q_online(states[b])> with respect to the online weights.
GradientSet backward(const QNetworkPair& pair, std::span<const std::vector<double>> states,
                     std::span<const std::vector<double>> out_grads);

enum class OptimizerKind { sgd, rmsprop };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::rmsprop;
    double lr = 1e-3;
    double decay = 0.95;
    double epsilon = 1e-6;
};

struct OptimizerState {
    GradientSet square_avg;  // empty until first RMSProp step
};

/// sgd:     w -= lr * g
/// rmsprop: v = decay * v + (1 - decay) * g^2;  w -= lr * g / (sqrt(v) + epsilon)
/// Only online weights change.
void apply_update(QNetworkPair& pair, const GradientSet& grads, const OptimizerConfig& cfg,
                  OptimizerState& state);

/// Deep copy of online weights into the target net.
void sync_target(QNetworkPair& pair);

std::uint64_t weight_checksum(const DenseNet& net);
/// L-infinity distance between two same-shaped nets.
double max_abs_diff(const DenseNet& a, const DenseNet& b);

/// Checkpoint format "rtpd-qnet-v1":
/// {"format":"rtpd-qnet-v1","online":[layer...],"target":[layer...]} where each layer is
/// {"in":I,"out":O,"weights":[O*I row-major],"bias":[O]}. Doubles are written with
/// round-trip precision.
nlohmann::json checkpoint_to_json(const QNetworkPair& pair);
QNetworkPair checkpoint_from_json(const nlohmann::json& j);

}  // namespace rtpd
