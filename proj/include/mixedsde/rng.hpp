#pragma once

#include <cstdint>
#include <random>

#include <mixedsde/core.hpp>

namespace mixedsde {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Engine state is a pure function of (master, stream); scheduling cannot
/// change what any stream produces.
inline std::mt19937_64 make_engine(SeedSpec seed) {
    const std::uint64_t s = splitmix64(seed.master ^ splitmix64(seed.stream + 0x632be59bd9b4e019ULL));
    return std::mt19937_64(s);
}

/// Standard normal draws from one dedicated stream.
class NormalSource {
public:
    explicit NormalSource(SeedSpec seed) : eng_(make_engine(seed)) {}

    double operator()() { return dist_(eng_); }

    void fill(std::span<double> out) {
        for (double& x : out) x = dist_(eng_);
    }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

/// Stream layout used by all Monte Carlo loops: each path owns two
/// sub-streams, one for the Wiener driver and one for the fractional driver.
inline SeedSpec wiener_stream(std::uint64_t master, std::uint64_t path) {
    return SeedSpec{master, 2 * path};
}

inline SeedSpec fbm_stream(std::uint64_t master, std::uint64_t path) {
    return SeedSpec{master, 2 * path + 1};
}

}  // namespace mixedsde
