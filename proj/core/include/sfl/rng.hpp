#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace sfl {

// Counter-based deterministic randomness. Every draw is a pure function of the
// key tuple, so parallel sampling is reproducible regardless of schedule.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2)));
}

/// FNV-1a hash of a stream name; used to derive named sub-streams from a root seed.
inline std::uint64_t stream_id(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                         std::uint64_t c = 0, std::uint64_t d = 0) {
    return mix(mix(mix(mix(seed, a), b), c), d);
}

/// Uniform draw in (0,1), keyed.
inline double uniform01(std::uint64_t k) {
    // 53 random mantissa bits, offset by half an ulp to stay strictly inside (0,1)
    return (static_cast<double>(splitmix64(k) >> 11) + 0.5) * 0x1p-53;
}

/// Inverse standard normal CDF (Acklam's rational approximation, |err| < 1.2e-9).
inline double norminv(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p > phigh) {
        q = std::sqrt(-2 * std::log(1 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

/// Sequential stream wrapper for places where a draw order is natural.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : seed_(seed) {}
    Stream substream(std::string_view name) const { return Stream(mix(seed_, stream_id(name))); }
    Stream substream(std::uint64_t idx) const { return Stream(mix(seed_, idx)); }
    std::uint64_t seed() const { return seed_; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(key(seed_, counter_++)); }
    double gaussian(double mu = 0.0, double sigma = 1.0) {
        return mu + sigma * norminv(uniform01(key(seed_, counter_++)));
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

} // namespace rng
} // namespace sfl
