#pragma once

#include <cstdint>

namespace tntopo {

/// splitmix64 stream (v1). Fixed here so that seeded network generation is
/// reproducible bit-for-bit across platforms; std::uniform_real_distribution
/// is implementation-defined and must not be used for anything persisted.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [-1, 1), using the top 53 bits of the stream.
    double next_symmetric() {
        const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53; // [0,1)
        return 2.0 * u - 1.0;
    }

private:
    std::uint64_t state_;
};

} // namespace tntopo
