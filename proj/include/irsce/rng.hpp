#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace irsce {

// SplitMix64 step, used for key expansion.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-keyed random stream (xoshiro256++ core). The tuple
// (seed, idx0, idx1, idx2) fully determines the sequence, so workers can
// derive disjoint streams without coordination and results do not depend
// on scheduling order. Gaussian variates use an explicit Box-Muller so the
// byte stream is identical across standard libraries.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t idx0 = 0,
                       std::uint64_t idx1 = 0, std::uint64_t idx2 = 0) {
        std::uint64_t acc = seed;
        acc = absorb(acc, idx0);
        acc = absorb(acc, idx1);
        acc = absorb(acc, idx2);
        for (auto& word : state_) word = splitmix64(acc);
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
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

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // (0,1] for the log argument
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    // Circularly-symmetric complex normal with the given total variance.
    std::complex<double> cgaussian(double variance) {
        const double s = std::sqrt(0.5 * variance);
        const double re = s * gaussian();
        const double im = s * gaussian();
        return {re, im};
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    static std::uint64_t absorb(std::uint64_t acc, std::uint64_t v) {
        acc ^= v + 0x9e3779b97f4a7c15ULL + (acc << 6) + (acc >> 2);
        return splitmix64(acc);
    }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace irsce
