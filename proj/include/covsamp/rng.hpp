#pragma once

#include <array>
#include <cstdint>

namespace covsamp {

/// Philox4x32-10 counter-based generator. A stream is fully determined by
/// (seed, stream id), so draw i of a Monte Carlo run can be regenerated by
/// any worker without coordination.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

    std::uint32_t next_u32() noexcept;
    std::uint64_t next_u64() noexcept;

    /// Uniform integer in [0, bound) by rejection; bound > 0.
    std::uint64_t uniform_below(std::uint64_t bound) noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept;

    using Block = std::array<std::uint32_t, 4>;
    static Block philox(Block counter, std::array<std::uint32_t, 2> key) noexcept;

private:
    void refill() noexcept;

    std::array<std::uint32_t, 2> key_;
    Block counter_;
    Block buffer_{};
    int used_ = 4;
};

}  // namespace covsamp
