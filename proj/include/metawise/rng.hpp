// Seeded random streams for reproducible simulation.
//
// Streams are identified by a derivation key, not by consumed state: a
// stream derived as (seed, arm, participant) yields the same draws no matter
// which thread runs it or in what order streams are consumed. The generator
// is xoshiro256** seeded through splitmix64, with hand-rolled uniform/normal
// transforms so output is bit-identical across platforms (std::distributions
// are implementation-defined).

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>

namespace metawise {

struct SplitMix64 {
    std::uint64_t state;

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

// One splitmix64 mixing round; used to fold stream ids into derivation keys.
inline std::uint64_t mix_key(std::uint64_t key, std::uint64_t id) {
    SplitMix64 sm{key ^ (id + 0x9e3779b97f4a7c15ULL)};
    return sm.next();
}

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : key_(seed) { reseed(); }

    RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) : key_(seed) {
        for (std::uint64_t id : path) key_ = mix_key(key_, id);
        reseed();
    }

    // Child stream addressed by id; independent of this stream's position.
    RngStream derive(std::uint64_t id) const { return RngStream(mix_key(key_, id)); }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + uniform01() * (b - a); }

    // Box-Muller; consumes exactly two uniforms per call.
    double normal(double mean = 0.0, double sd = 1.0) {
        double u1 = uniform01();
        const double u2 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        return mean + sd * radius * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Unbiased integer in [0, n) by rejection.
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
        const std::uint64_t span = n;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % span;
        std::uint64_t draw = next_u64();
        while (draw >= limit) draw = next_u64();
        return static_cast<std::size_t>(draw % span);
    }

    // Index drawn proportionally to the given nonnegative weights.
    std::size_t categorical(std::span<const double> weights) {
        if (weights.empty()) throw std::invalid_argument("categorical: no weights");
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) throw std::invalid_argument("categorical: negative weight");
            total += w;
        }
        if (total <= 0.0) throw std::invalid_argument("categorical: weights sum to zero");
        const double target = uniform01() * total;
        double cum = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            cum += weights[i];
            if (target < cum) return i;
        }
        return weights.size() - 1;
    }

    std::uint64_t key() const { return key_; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    void reseed() {
        SplitMix64 sm{key_};
        for (auto& word : state_) word = sm.next();
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t key_;
    std::array<std::uint64_t, 4> state_{};
};

// Seed for replication or worker `id` under a master seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t id) {
    return mix_key(seed, id);
}

}  // namespace metawise
