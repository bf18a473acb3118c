#pragma once

#include <array>
#include <cstdint>

namespace stepdecay {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds.
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

/// Stateless stream keyed by a 64-bit seed. Block (step, lane) is a pure
/// function of its arguments, so any draw can be regenerated out of order.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) noexcept;

    PhiloxCounter block(std::uint64_t step, std::uint32_t lane) const noexcept;
    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    PhiloxKey key_;
};

/// 52-bit uniform on the open interval (0, 1).
double uniform_open(std::uint32_t hi, std::uint32_t lo) noexcept;

/// Uniform integer in [0, n) from 64 random bits (multiply-high reduction).
std::uint64_t bounded(std::uint64_t bits, std::uint64_t n) noexcept;

/// Two independent standard normals via Box-Muller.
std::array<double, 2> box_muller(double u1, double u2) noexcept;

}  // namespace stepdecay
