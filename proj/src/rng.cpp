#include "burst/rng.hpp"

#include <cmath>

namespace burst {
namespace {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

} // namespace

uint64_t RngStream::derive(uint64_t parent, uint64_t child) {
    return splitmix64(parent ^ (child * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
}

uint64_t RngStream::next_u64() {
    return splitmix64(key_ ^ splitmix64(counter_++));
}

double RngStream::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_open_double() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double RngStream::next_normal() {
    if (have_cached_normal_) {
        have_cached_normal_ = false;
        return cached_normal_;
    }
    double u1 = next_open_double();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = kTwoPi * u2;
    cached_normal_ = r * std::sin(a);
    have_cached_normal_ = true;
    return r * std::cos(a);
}

int64_t RngStream::next_poisson(double mean) {
    if (mean <= 0.0)
        return 0;
    if (mean < 10.0) {
        // Inversion by sequential search.
        double p = std::exp(-mean);
        double cdf = p;
        double u = next_double();
        int64_t k = 0;
        while (u > cdf && k < 2000) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }
    // Hormann's PTRS transformed rejection, exact for mean >= 10.
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        double u = next_double() - 0.5;
        double v = next_open_double();
        double us = 0.5 - std::fabs(u);
        int64_t k = static_cast<int64_t>(std::floor((2.0 * a / us + b) * u + mean + 0.43));
        if (us >= 0.07 && v <= v_r)
            return k;
        if (k < 0 || (us < 0.013 && v > us))
            continue;
        double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        double rhs = -mean + static_cast<double>(k) * std::log(mean) - std::lgamma(static_cast<double>(k) + 1.0);
        if (lhs <= rhs)
            return k;
    }
}

} // namespace burst
