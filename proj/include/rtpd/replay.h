// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace rtpd {

struct Transition {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool terminal = false;
};

/// One sampled training set; handed unchanged to every model updated in an iteration.
struct Batch {
    std::vector<Transition> transitions;
    std::vector<std::size_t> indices;  // logical positions, 0 = oldest retained

    std::size_t size() const { return transitions.size(); }
    /// Content hash over every field of every transition.
    std::uint64_t content_hash() const;
};

/// Fixed-capacity FIFO ring of transitions with uniform, with-replacement sampling.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);

    std::size_t size() const { return fill_; }
    std::size_t capacity() const { return storage_.size(); }
    bool full() const { return fill_ == storage_.size(); }

    /// i-th oldest retained transition.
    const Transition& at(std::size_t i) const;

    /// Uniform with-replacement sample. Returns nullopt (not ready) while fewer than
    /// min_fill transitions, or none at all, are stored.
    std::optional<Batch> sample_shared(std::size_t batch_size, std::mt19937_64& rng,
                                       std::size_t min_fill = 1) const;

private:
    std::vector<Transition> storage_;
    std::size_t cursor_ = 0;  // next write slot
    std::size_t fill_ = 0;
};

}  // namespace rtpd
