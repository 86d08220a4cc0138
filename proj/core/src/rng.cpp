#include "kaczmarz/rng.hpp"

#include <cmath>
#include <numbers>

#include "kaczmarz/error.hpp"

namespace kaczmarz {

namespace {
__extension__ typedef unsigned __int128 u128;
}

std::uint64_t RngStream::below(std::uint64_t bound)
{
    if (bound == 0) {
        throw ContractError("RngStream::below: bound must be positive");
    }
    u128 product = static_cast<u128>(next_u64()) * bound;
    auto low = static_cast<std::uint64_t>(product);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            product = static_cast<u128>(next_u64()) * bound;
            low = static_cast<std::uint64_t>(product);
        }
    }
    return static_cast<std::uint64_t>(product >> 64);
}

double RngStream::normal()
{
    if (spare_normal_) {
        const double z = *spare_normal_;
        spare_normal_.reset();
        return z;
    }
    // 1 - uniform() lies in (0, 1], keeping log finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = radius * std::sin(angle);
    return radius * std::cos(angle);
}

} // namespace kaczmarz
