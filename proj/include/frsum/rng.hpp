#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace frsum {

// splitmix64 step; also the seed-derivation mixer.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic sub-stream key from (seed, context parts). Every seeded site
// in the project derives its stream this way so that outputs never depend on
// call order or thread scheduling.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t state = base ^ 0x6a09e667f3bcc908ull;
    std::uint64_t out = splitmix64(state);
    for (std::uint64_t p : parts) {
        state ^= p;
        out ^= splitmix64(state);
    }
    return out;
}

// mt19937_64 core with hand-rolled distributions. std:: distributions are
// implementation-defined, so they never appear in anything that must be
// reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t u64() { return gen_(); }

    // [0, 1) with 53 random bits
    double uniform01() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

    // [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller, no cached spare: always consumes exactly two draws.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) {
            u1 = uniform01();
        }
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        return mean + stddev * r * std::cos(theta);
    }

    // Uniform integer in [0, n). Lemire multiply-shift, bias-free enough for
    // our pool sizes and fully deterministic.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<__uint128_t>(u64()) * n) >> 64);
    }

    int index(std::size_t n) { return static_cast<int>(below(n)); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    // k distinct indices drawn from [0, n), in draw order (partial
    // Fisher-Yates). k must be <= n.
    std::vector<int> sample_indices(std::size_t n, std::size_t k) {
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::vector<int> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(below(n - i));
            std::swap(idx[i], idx[j]);
            out.push_back(idx[i]);
        }
        return out;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace frsum
