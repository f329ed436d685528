#pragma once

#include <cstdint>
#include <cmath>

namespace ricefield {

// xoshiro256++ with splitmix64 seeding. Distributions are implemented by hand
// so that draws are identical across platforms and across worker counts; the
// standard-library distributions make no such guarantee.
class Rng {
public:
    explicit Rng(std::uint64_t seed) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : state_) w = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform on (0,1), 53-bit mantissa, never returns 0 or 1
    double uniform() {
        const std::uint64_t bits = next_u64() >> 11;
        double u = (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
        return u;
    }

    double normal();
    double exponential() { return -std::log(uniform()); }
    // shape k > 0, unit scale
    double gamma(double shape);
    // exact for all means >= 0
    std::uint64_t poisson(double mean);

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    std::uint64_t state_[4];
    double normal_spare_ = 0.0;
    bool has_spare_ = false;
};

// Mixes a base seed with stream labels so every (cycle, block/voxel, purpose)
// owns an independent substream; parallel schedules then draw the same numbers
// no matter how work is distributed over threads.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                    std::uint64_t c = 0) {
    std::uint64_t x = seed;
    std::uint64_t h = Rng::splitmix64(x);
    x ^= a + 0x9e3779b97f4a7c15ULL;
    h ^= Rng::splitmix64(x);
    x ^= b + 0xd1b54a32d192ed03ULL;
    h ^= Rng::splitmix64(x);
    x ^= c + 0x8cb92ba72f3d8dd7ULL;
    h ^= Rng::splitmix64(x);
    return h;
}

} // namespace ricefield
