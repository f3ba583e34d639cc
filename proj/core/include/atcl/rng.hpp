#ifndef ATCL_RNG_HPP
#define ATCL_RNG_HPP

#include <cstdint>
#include <cmath>
#include <string_view>
#include <vector>

namespace atcl {

// Small counter-free PRNG (xoshiro256** core seeded via splitmix64) with an
// explicitly serializable state. All randomness in the project flows through
// named streams derived from a single user seed, so runs are reproducible
// byte-for-byte and individual streams can be checkpointed.
class Rng {
  public:
    Rng() : Rng(0) {}
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& si : s_) si = splitmix64(x);
    }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n > 0. Rejection-free modulo is fine here;
    // n is always tiny compared to 2^64.
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    double gaussian() {
        // Box-Muller; consumes two draws per call, no cached spare (keeps the
        // stream position a pure function of call count).
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    const std::uint64_t* state() const { return s_; }
    void set_state(const std::uint64_t st[4]) { for (int i = 0; i < 4; ++i) s_[i] = st[i]; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

// Derives an independent named stream from the master seed.
inline Rng named_stream(std::uint64_t seed, std::string_view name, std::uint64_t salt = 0) {
    std::uint64_t h = seed ^ 0x243f6a8885a308d3ULL;
    for (char c : name) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001b3ULL;
    }
    h ^= salt + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return Rng(h);
}

} // namespace atcl

#endif
