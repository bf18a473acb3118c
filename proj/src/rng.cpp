#include "stepdecay/rng.hpp"

#include <cmath>
#include <numbers>

namespace stepdecay {
namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

__extension__ using uint128 = unsigned __int128;

void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept
{
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter c, PhiloxKey k) noexcept
{
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += kW0;
            k[1] += kW1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, c[0], hi0, lo0);
        mulhilo(kM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

CounterRng::CounterRng(std::uint64_t seed) noexcept
    : seed_(seed), key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}
{
}

PhiloxCounter CounterRng::block(std::uint64_t step, std::uint32_t lane) const noexcept
{
    return philox4x32_10({static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), lane, 0u},
                         key_);
}

double uniform_open(std::uint32_t hi, std::uint32_t lo) noexcept
{
    // 52 bits keep bits + 1/2 exactly representable, so 1.0 is never reached.
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 20) | (lo >> 12);
    return (static_cast<double>(bits) + 0.5) * 0x1p-52;
}

std::uint64_t bounded(std::uint64_t bits, std::uint64_t n) noexcept
{
    return static_cast<std::uint64_t>((static_cast<uint128>(bits) * n) >> 64);
}

std::array<double, 2> box_muller(double u1, double u2) noexcept
{
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

}  // namespace stepdecay
