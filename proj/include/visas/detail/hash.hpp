#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>

// Portable hashing and random draws. The standard distributions are
// implementation-defined, which would break bit-exact reproducibility of
// simulated streams across toolchains.
namespace visas::detail {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) noexcept {
    return splitmix64(h ^ (v * 0x632BE59BD9B4E019ULL));
}

inline std::uint64_t bits_of(double v) noexcept {
    std::uint64_t out;
    std::memcpy(&out, &v, sizeof out);
    return out;
}

/// Uniform in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t h) noexcept {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Counter-based stream: draw k is splitmix64(key + k).
class Stream {
public:
    explicit constexpr Stream(std::uint64_t key) noexcept : key_(splitmix64(key)) {}

    constexpr std::uint64_t next_u64() noexcept { return splitmix64(key_ + counter_++); }
    constexpr double uniform() noexcept { return to_unit(next_u64()); }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    double gaussian() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(th);
        has_spare_ = true;
        return r * std::cos(th);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace visas::detail
