#pragma once

// Seeded random streams. std::mt19937_64 is specified bit-for-bit by the
// standard, but the <random> distributions are not, so the Gaussian and
// uniform transforms are written out here to keep reports portable.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "ttls/core.hpp"

namespace ttls {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream `stream` of the generator family named by `seed`.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)))
    {
    }

    /// Uniform on the open interval (0, 1), 53 random bits.
    double uniform01()
    {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform on (lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform01()));
        const double phi = 2.0 * std::numbers::pi * uniform01();
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    Matrix normal_matrix(Index rows, Index cols)
    {
        Matrix out(rows, cols);
        for (Index j = 0; j < cols; ++j) {
            for (Index i = 0; i < rows; ++i) {
                out(i, j) = normal();
            }
        }
        return out;
    }

    Matrix uniform_matrix(Index rows, Index cols, double lo, double hi)
    {
        Matrix out(rows, cols);
        for (Index j = 0; j < cols; ++j) {
            for (Index i = 0; i < rows; ++i) {
                out(i, j) = uniform(lo, hi);
            }
        }
        return out;
    }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace ttls
