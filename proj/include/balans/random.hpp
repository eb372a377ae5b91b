#ifndef BALANS_RANDOM_HPP
#define BALANS_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

/**
 * @file random.hpp
 *
 * @brief Seedable random number generation with explicit stream splitting.
 *
 * All variates are derived from the raw 64-bit output of `std::mt19937_64`, so sequences are identical across standard libraries.
 * Uniforms use the top 53 bits; normals use the Marsaglia polar method; exponentials use inversion.
 */

namespace balans {

class Rng {
public:
    /**
     * @param seed Master seed.
     * @param stream Stream id. Each (seed, stream) pair yields an independent generator,
     * so a sampler can open one stream per block and a harness one stream per trial.
     */
    explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
        engine_.seed(seq);
    }

    std::uint64_t next() { return engine_(); }

    /** Uniform on [0, 1). */
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /** Uniform integer on [0, bound). */
    std::uint64_t below(std::uint64_t bound) {
        // Rejection sampling on the top bits avoids modulo bias.
        const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % bound);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2 * uniform() - 1;
            v = 2 * uniform() - 1;
            s = u * u + v * v;
        } while (s >= 1 || s == 0);
        const double f = std::sqrt(-2 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /** Exponential with the given rate. */
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0;
};

}

#endif
