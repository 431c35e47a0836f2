#include "krt/rng.hpp"

namespace krt::rng {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix64(seed + (stream + 1) * kGolden)) {}

std::uint64_t CounterRng::bits(std::uint64_t counter) const { return mix64(key_ + (counter + 1) * kGolden); }

double CounterRng::uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
}

double CounterRng::symmetric(std::uint64_t counter) const { return 2.0 * uniform(counter) - 1.0; }

std::vector<std::vector<double>> CounterRng::cube_points(std::size_t n, std::size_t d) const {
    std::vector<std::vector<double>> out(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out[i][j] = symmetric(i * d + j);
    return out;
}

}  // namespace krt::rng
