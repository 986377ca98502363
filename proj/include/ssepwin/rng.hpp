#pragma once

#include <cstdint>
#include <cmath>


namespace ssepwin {

// One step of the splitmix64 sequence (used for seeding and stream derivation,
// never as the simulation generator itself).
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Seed for the i-th trajectory of an ensemble. Streams are decorrelated by
// mixing the index through splitmix64 before seeding the engine.
inline std::uint64_t stream_seed(std::uint64_t seed_base, std::uint64_t index) {
    std::uint64_t s = seed_base + 0x9E3779B97F4A7C15ULL * (index + 1);
    return splitmix64_next(s);
}

// Deterministic 64-bit generator: xoshiro256++ seeded through splitmix64
// (the reference seeding procedure). Pure integer state transitions, so
// identical seeds give identical streams on every platform; the uniform and
// exponential conversions are written out explicitly because std::
// distributions are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64_next(sm);
    }

    std::uint64_t bits() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0,1), 53-bit resolution.
    double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1]; safe as a log argument.
    double uniform_pos() {
        return static_cast<double>((bits() >> 11) + 1) * 0x1.0p-53;
    }

    // Exponential waiting time with the given total rate.
    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

    bool bernoulli(double p) { return uniform() < p; }

    static constexpr const char* generator_name() {
        return "xoshiro256++/splitmix64";
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

}  // namespace ssepwin
