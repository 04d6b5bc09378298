#pragma once
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace zrs {

// splitmix64, used for seeding and stream derivation.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t s) : state(s) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

// xoshiro256++ with splittable streams: Rng(seed, stream) gives a
// reproducible generator, distinct streams are statistically independent.
class Rng {
  public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        SplitMix64 sm(seed);
        std::uint64_t a = sm.next(), b = sm.next();
        SplitMix64 sm2(stream ^ 0x5851f42d4c957f2dULL);
        std::uint64_t c = sm2.next() ^ sm.next();
        SplitMix64 sm3(a ^ c);
        s_ = {sm3.next(), sm3.next() ^ b, sm3.next(), sm3.next() ^ c};
        if (s_[0] == 0 && s_[1] == 0 && s_[2] == 0 && s_[3] == 0) s_[0] = 1;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }

    result_type operator()() {
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

    // uniform on [0,1), 53-bit resolution
    double uniform() { return double((*this)() >> 11) * 0x1.0p-53; }

    // uniform on (0,1], safe as a log argument
    double uniform_open() { return double(((*this)() >> 11) + 1) * 0x1.0p-53; }

    double exponential(double rate = 1.0) { return -std::log(uniform_open()) / rate; }

    bool bernoulli(double p) { return uniform() < p; }

    // standard normal, Box-Muller with caching
    double normal() {
        if (has_cache_) {
            has_cache_ = false;
            return cache_;
        }
        double u1 = uniform_open();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cache_ = r * std::sin(a);
        has_cache_ = true;
        return r * std::cos(a);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> s_{};
    double cache_ = 0.0;
    bool has_cache_ = false;
};

} // namespace zrs
