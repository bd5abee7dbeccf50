// SPDX-License-Identifier: Apache-2.0
#include "rtpd/replay.h"

#include <algorithm>

#include "rtpd/error.h"
#include "rtpd/hash.h"

namespace rtpd {

std::uint64_t Batch::content_hash() const {
    Fnv1a h;
    for (const auto& t : transitions) {
        h.add(std::span<const double>(t.state));
        h.add(static_cast<std::int64_t>(t.action));
        h.add(t.reward);
        h.add(std::span<const double>(t.next_state));
        h.add(static_cast<std::int64_t>(t.terminal));
    }
    return h.value();
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : storage_(capacity) {
    if (capacity == 0) throw InvalidInput("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
    storage_[cursor_] = std::move(t);
    cursor_ = (cursor_ + 1) % storage_.size();
    fill_ = std::min(fill_ + 1, storage_.size());
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    if (i >= fill_) throw InvalidInput("replay index out of range");
    const std::size_t oldest = full() ? cursor_ : 0;
    return storage_[(oldest + i) % storage_.size()];
}

std::optional<Batch> ReplayBuffer::sample_shared(std::size_t batch_size, std::mt19937_64& rng,
                                                 std::size_t min_fill) const {
    if (batch_size == 0) throw InvalidInput("batch size must be positive");
    if (fill_ == 0 || fill_ < min_fill) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(0, fill_ - 1);
    Batch b;
    b.indices.reserve(batch_size);
    b.transitions.reserve(batch_size);
    for (std::size_t k = 0; k < batch_size; ++k) {
        const std::size_t i = pick(rng);
        b.indices.push_back(i);
        b.transitions.push_back(at(i));
    }
    return b;
}

}  // namespace rtpd
