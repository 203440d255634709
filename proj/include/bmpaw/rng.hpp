// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace bmpaw {

/// Keyed splittable generator. Every logical stream (a simulation round, a
/// sweep cell) gets its own key derived by hashing, so results never depend
/// on how work is chunked across threads.
inline std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index)
{
    return mix64(seed + 0x9e3779b97f4a7c15ull * (index + 0x632be59bd9b4e019ull));
}

class Rng {
public:
    explicit Rng(std::uint64_t key) : state_(key) {}

    std::uint64_t next_u64()
    {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Unit-mean exponential.
    double exponential() { return -std::log1p(-next_unit()); }

    std::uint64_t poisson(double lambda);

private:
    std::uint64_t state_;
};

}  // namespace bmpaw
