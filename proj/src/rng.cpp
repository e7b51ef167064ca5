#include "teralasso/rng.hpp"

#include <cmath>
#include <numbers>

namespace teralasso {

double CounterRng::uniform() noexcept
{
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept
{
    // Lemire's multiply-shift with rejection; unbiased.
    while (true) {
        const std::uint64_t x = next_u64();
        const unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
        const auto low = static_cast<std::uint64_t>(m);
        if (low >= bound || low >= (0 - bound) % bound)
            return static_cast<std::uint64_t>(m >> 64);
    }
}

double CounterRng::normal() noexcept
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

} // namespace teralasso
