#ifndef SCA_RNG_HPP
#define SCA_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace sca {

// splitmix64 step; used to derive well-separated stream seeds from one
// root seed. Every random process in the toolkit draws from a seed built
// with derive_seed(root, stream...), so a single top-level seed pins the
// whole pipeline.
inline std::uint64_t splitmix64(std::uint64_t &state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    std::uint64_t s = root ^ (0xa0761d6478bd642fULL + stream * 0xe7037ed1a0b428dbULL);
    return splitmix64(s);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(root, a), b);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b,
                                 std::uint64_t c) {
    return derive_seed(derive_seed(root, a, b), c);
}

// Deterministic RNG with the handful of draws the toolkit needs. Gaussian
// draws use Box-Muller instead of std::normal_distribution so sequences do
// not depend on the standard library implementation.
class SeededRng {
  public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    std::uint8_t uniform_byte() { return static_cast<std::uint8_t>(engine_() & 0xffu); }

    // Uniform in [0, n) without modulo bias.
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v = engine_();
        while (v >= limit)
            v = engine_();
        return v % n;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform_double() { return (engine_() >> 11) * 0x1.0p-53; }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_double();
        double u2 = uniform_double();
        while (u1 <= 0.0) // log(0) guard
            u1 = uniform_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double gaussian(double sigma) { return sigma == 0.0 ? 0.0 : sigma * gaussian(); }

    // Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i)
            std::swap(idx[i - 1], idx[uniform_below(i)]);
        return idx;
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace sca

#endif
