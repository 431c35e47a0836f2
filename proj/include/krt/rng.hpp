#pragma once

#include <cstdint>
#include <vector>

namespace krt::rng {

// SplitMix64 output function.
[[nodiscard]] std::uint64_t mix64(std::uint64_t z);

// Counter-based generator: draw i of stream s under seed is
//   mix64(key + (i + 1) * G),  key = mix64(seed + (s + 1) * G),
// with G = 0x9E3779B97F4A7C15. Draws never depend on thread scheduling.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

    [[nodiscard]] std::uint64_t bits(std::uint64_t counter) const;
    // (bits >> 11) * 2^-53, in [0, 1)
    [[nodiscard]] double uniform(std::uint64_t counter) const;
    // 2 * uniform - 1, in [-1, 1)
    [[nodiscard]] double symmetric(std::uint64_t counter) const;

    // n points in [-1,1)^d, point i coordinate j from counter i*d + j.
    [[nodiscard]] std::vector<std::vector<double>> cube_points(std::size_t n, std::size_t d) const;

private:
    std::uint64_t key_;
};

}  // namespace krt::rng
