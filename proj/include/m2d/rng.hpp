#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace m2d {

// Deterministic, platform-independent generator (splitmix64 core).
// std::mt19937 + <random> distributions are implementation-defined, so the
// generator and its distributions are hand-rolled to keep outputs
// bit-identical across compilers. Substreams are derived by hashing a tag
// into the state, so changing how one stage consumes randomness never
// perturbs another stage.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ^ kGolden) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Multiply-shift; slight modulo bias is
    // irrelevant at 64-bit range and keeps the draw branch-free.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller; caches the second deviate.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * kPi * u2;
        spare_ = mag * std::sin(ang);
        has_spare_ = true;
        return mag * std::cos(ang);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Child generator for an independent named stream.
    Rng fork(std::string_view tag) const {
        std::uint64_t h = state_ ^ 0x517cc1b727220a95ULL;
        for (char c : tag) {
            h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
            h *= 0x100000001b3ULL;
        }
        return Rng(h);
    }

    Rng fork(std::string_view tag, std::uint64_t index) const {
        Rng child = fork(tag);
        child.state_ ^= (index + 1) * 0x9e3779b97f4a7c15ULL;
        return child;
    }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
    static constexpr double kPi = 3.14159265358979323846;

    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace m2d
