#pragma once

#include <array>
#include <cstdint>

namespace rgseq {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Each (key, counter) pair maps to four independent 32-bit words, so any
/// draw of any replication can be produced without shared state.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit Philox4x32(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    static Counter block(Counter ctr, Key key);

    Counter operator()(const Counter& ctr) const { return block(ctr, key_); }

    /// Uniform double in [0, 1) with 53 random bits, for draw `index` of stream `stream`.
    double uniform(std::uint64_t stream, std::uint64_t index) const;

private:
    Key key_;
};

/// Sequential view of one replication's stream.
class ReplicationStream {
public:
    ReplicationStream(const Philox4x32& gen, std::uint64_t replication)
        : gen_(gen), replication_(replication) {}

    double uniform() { return gen_.uniform(replication_, next_++); }
    std::uint64_t draws() const { return next_; }

private:
    const Philox4x32& gen_;
    std::uint64_t replication_;
    std::uint64_t next_ = 0;
};

}  // namespace rgseq
