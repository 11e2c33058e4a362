#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fcc/errors.hpp"

namespace fcc {

// SplitMix64 finalizer. Used to stretch a user seed into engine state and to
// derive independent child seeds for parallel work items.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Deterministic random source. The engine is std::mt19937 but every
// distribution transform is written out here: the standard does not pin the
// draw sequences of std::uniform_real_distribution and friends, and seeded
// runs must replay identically on any standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed)
        : seed_(seed), gen_(static_cast<std::uint32_t>(splitmix64(seed))) {}

    std::uint64_t seed() const noexcept { return seed_; }

    // Independent stream for work item k (Monte-Carlo trial, attack restart).
    // Children of the same parent with distinct k never share engine state.
    Rng child(std::uint64_t k) const { return Rng(splitmix64(seed_ + 0x9e3779b97f4a7c15ull * (k + 1))); }

    std::uint32_t next_u32() { return gen_(); }

    // Uniform on [0, 1) with 24 random bits (exact float spacing).
    float uniform() { return static_cast<float>(next_u32() >> 8) * 0x1p-24f; }

    float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform_d() {
        const std::uint64_t hi = next_u32() >> 5;   // 27 bits
        const std::uint64_t lo = next_u32() >> 6;   // 26 bits
        return static_cast<double>((hi << 26) | lo) * 0x1p-53;
    }

    // Standard normal via Box-Muller; the spare of each pair is cached.
    float normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        float u1 = uniform();
        while (u1 <= 0.0f) u1 = uniform();
        const float r = std::sqrt(-2.0f * std::log(u1));
        const float t = 6.28318530717958647692f * uniform();
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    double normal_d() {
        if (have_spare_d_) {
            have_spare_d_ = false;
            return spare_d_;
        }
        double u1 = uniform_d();
        while (u1 <= 0.0) u1 = uniform_d();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.28318530717958647692 * uniform_d();
        spare_d_ = r * std::sin(t);
        have_spare_d_ = true;
        return r * std::cos(t);
    }

    // Uniform integer in [0, n) (Lemire multiply-shift; bias < 2^-32).
    std::size_t index(std::size_t n) {
        if (n == 0) throw contract_error("Rng::index: n must be positive");
        return static_cast<std::size_t>((static_cast<std::uint64_t>(next_u32()) * n) >> 32);
    }

    // Fisher-Yates; draw order is fixed so shuffles replay exactly.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937 gen_;
    float spare_ = 0.0f;
    double spare_d_ = 0.0;
    bool have_spare_ = false;
    bool have_spare_d_ = false;
};

} // namespace fcc
