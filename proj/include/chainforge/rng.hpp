#pragma once

#include <cstdint>
#include <random>
#include <string_view>

// Seeding and distribution plumbing shared by the samplers. All randomness in
// the engine flows through these helpers so that runs are reproducible and the
// generator is auditable (the algorithm name is recorded in output metadata).

namespace chainforge::rng {

inline constexpr const char* kGeneratorName = "mt19937_64/splitmix64-streams";

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives an independent substream seed from (base, tag, index). Axis streams
// are keyed this way so draw order never depends on evaluation order.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) {
    std::uint64_t h = base ^ 0x51702a8293c5fd1bULL;
    for (char c : tag) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h = splitmix64(h);
    }
    h ^= index;
    return splitmix64(h);
}

// Uniform in (0,1): 53 random bits, never exactly 0 or 1.
inline double u01(std::mt19937_64& gen) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    return u == 0.0 ? 0x1.0p-54 : u;
}

double normal_quantile(double p);  // inverse standard normal CDF (Wichura AS241)
double normal_cdf(double x);
double normal_pdf(double x);

}  // namespace chainforge::rng
