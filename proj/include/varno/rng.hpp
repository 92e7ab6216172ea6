#pragma once
// Counter-based deterministic RNG.
//
// Every random draw in the library comes from (seed, stream-name, counter) so
// repeated runs are bitwise reproducible on any platform, independent of how
// many draws other components consumed.  Streams are split by hashing a string
// key into the seed; the stdlib engines/distributions are avoided on purpose
// (their output is not pinned across standard library implementations).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace varno {

constexpr uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<uint8_t>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

constexpr uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

class Rng {
  public:
    Rng(uint64_t seed, std::string_view stream)
        : key_(mix64(seed ^ mix64(fnv1a64(stream)))) {}

    uint64_t next_u64() { return mix64(key_ ^ mix64(++ctr_)); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    uint64_t below(uint64_t n) { return n ? next_u64() % n : 0; }

    // Standard normal via Box-Muller; second deviate of each pair is cached.
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    uint64_t key_;
    uint64_t ctr_ = 0;
    double spare_ = 0;
    bool has_spare_ = false;
};

}  // namespace varno
