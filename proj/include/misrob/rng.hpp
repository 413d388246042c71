#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace misrob {

// Counter-based splittable generator (splitmix64 core).
//
// Every source of randomness in the library flows from a single 64-bit seed
// through derive() calls, so identical seeds give identical output streams
// regardless of platform, run, or how work is distributed across threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x6a09e667f3bcc909ull)) {}

    // Independent child stream. derive(a) and derive(b) collide only if a == b.
    [[nodiscard]] Rng derive(std::uint64_t label) const {
        Rng child(0);
        child.state_ = mix(state_ ^ mix(label + 0x9e3779b97f4a7c15ull));
        return child;
    }
    [[nodiscard]] Rng derive(std::string_view label) const { return derive(fnv1a(label)); }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    // Uniform on the open interval (0, 1); never returns an endpoint, so it is
    // always a valid argument for an inverse CDF.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Unbiased integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = n * (UINT64_MAX / n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    std::int64_t binomial(std::int64_t n, double p) {
        std::int64_t k = 0;
        for (std::int64_t i = 0; i < n; ++i) k += bernoulli(p);
        return k;
    }

    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (std::size_t i = xs.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            using std::swap;
            swap(xs[i - 1], xs[j]);
        }
    }

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

private:
    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (const char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        return h;
    }

    std::uint64_t state_;
};

}  // namespace misrob
