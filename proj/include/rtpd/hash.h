// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <span>

namespace rtpd {

// FNV-1a over raw bytes; used for weight checksums and batch identity hashes.
class Fnv1a {
public:
    void add_bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ULL;
        }
    }

    void add(double v) { add_bytes(&v, sizeof v); }
    void add(std::int64_t v) { add_bytes(&v, sizeof v); }
    void add(std::span<const double> v) { add_bytes(v.data(), v.size_bytes()); }

    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

} // namespace rtpd
