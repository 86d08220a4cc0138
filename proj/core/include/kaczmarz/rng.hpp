#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>

namespace kaczmarz {

/// Seeded random stream owned by exactly one solver run.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Every derived draw (uniform reals, bounded integers, normals) is
/// computed here from raw 64-bit words instead of going through the
/// implementation-defined std::*_distribution types, so a seed reproduces the
/// same draws on every platform.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

    std::uint64_t next_u64()
    {
        ++position_;
        return engine_();
    }

    /// Uniform in [0, 1) with 53 random mantissa bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). Unbiased (Lemire's multiply-and-reject).
    std::uint64_t below(std::uint64_t bound);

    /// Standard normal (Box-Muller). The second variate of each pair is cached.
    double normal();

    std::uint64_t seed() const noexcept { return seed_; }

    /// Number of raw 64-bit words consumed so far.
    std::uint64_t position() const noexcept { return position_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
    std::uint64_t position_ = 0;
    std::optional<double> spare_normal_;
};

} // namespace kaczmarz
