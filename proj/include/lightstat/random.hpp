#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>

namespace lightstat {

using RandomStream = std::mt19937_64;

// One splitmix64 step (Steele, Lea, Flood 2014). Used for seed derivation.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent sub-stream seed for run `index` under `master_seed`.
// sub_seed = splitmix64(master_seed + (index + 1) * golden_gamma), so runs
// generated in parallel or serially see identical streams.
constexpr std::uint64_t derive_subseed(std::uint64_t master_seed, std::uint64_t index) {
    return splitmix64(master_seed + (index + 1) * 0x9e3779b97f4a7c15ULL);
}

// FNV-1a over raw bytes; seeds the bootstrap stream from run content.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t hash = 0xcbf29ce484222325ULL) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        hash ^= bytes[i];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

inline std::uint64_t fnv1a64(double value, std::uint64_t hash = 0xcbf29ce484222325ULL) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    return fnv1a64(&bits, sizeof(bits), hash);
}

// Binomial(n, p) draw by CDF inversion (expected O(np) work), with the
// complement trick for p > 1/2 and a std::binomial_distribution fallback
// when the mean is large or (1-p)^n underflows.
inline int sample_binomial(RandomStream& rng, int n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    if (p > 0.5) return n - sample_binomial(rng, n, 1.0 - p);

    const double q = 1.0 - p;
    const double log_f0 = static_cast<double>(n) * std::log1p(-p);
    if (n * p > 60.0 || log_f0 < -650.0) {
        std::binomial_distribution<int> dist(n, p);
        return dist(rng);
    }
    const double ratio = p / q;
    double f = std::exp(log_f0);
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    int m = 0;
    while (u > f) {
        u -= f;
        f *= ratio * static_cast<double>(n - m) / static_cast<double>(m + 1);
        if (++m >= n) break;
    }
    return m;
}

}  // namespace lightstat
